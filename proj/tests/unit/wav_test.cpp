#include <gtest/gtest.h>

#include "rasc/bytes.hpp"
#include "rasc/wav.hpp"
#include "signals.hpp"

namespace rasc {
namespace {

std::vector<std::uint8_t> make_wav(std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                                   const std::vector<std::int16_t>& samples) {
  ByteWriter w;
  const std::uint32_t data = static_cast<std::uint32_t>(samples.size() * 2);
  w.text("RIFF");
  w.u32(36 + data);
  w.text("WAVE");
  w.text("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(channels);
  w.u32(rate);
  w.u32(rate * channels * bits / 8);
  w.u16(static_cast<std::uint16_t>(channels * bits / 8));
  w.u16(bits);
  w.text("data");
  w.u32(data);
  for (auto s : samples) w.u16(static_cast<std::uint16_t>(s));
  return w.take();
}

TEST(Wav, Int16ScalesByPowerOfTwo) {
  AudioClip c = parse_wav(make_wav(1, 16000, 16, {16384, -32768, 0, 32767}));
  ASSERT_EQ(c.samples.size(), 4u);
  EXPECT_EQ(c.samples[0], 0.5f);
  EXPECT_EQ(c.samples[1], -1.0f);
  EXPECT_EQ(c.samples[2], 0.0f);
}

TEST(Wav, SaveOfLoadReproducesPayload) {
  std::vector<std::int16_t> pcm;
  for (int i = -32768; i < 32768; i += 97) pcm.push_back(static_cast<std::int16_t>(i));
  pcm.push_back(32767);
  auto bytes = make_wav(1, 16000, 16, pcm);
  EXPECT_EQ(serialize_wav(parse_wav(bytes)), bytes);
  const std::string dir = testing::temp_dir("wav");
  write_file(dir + "/a.wav", bytes);
  save_wav(dir + "/b.wav", load_wav(dir + "/a.wav"));
  EXPECT_EQ(read_file(dir + "/b.wav"), bytes);
}

TEST(Wav, SaveClamps) {
  AudioClip c;
  c.samples = {1.5f, -2.0f, 1.0f};
  AudioClip back = parse_wav(serialize_wav(c));
  EXPECT_EQ(back.samples[0], 32767.0f / 32768.0f);
  EXPECT_EQ(back.samples[1], -1.0f);
  EXPECT_EQ(back.samples[2], 32767.0f / 32768.0f);
}

TEST(Wav, RejectsUnsupportedFormats) {
  struct Case {
    std::uint16_t channels;
    std::uint32_t rate;
    std::uint16_t bits;
    const char* reason;
  };
  for (const Case& c : {Case{1, 8000, 16, "unsupported sample rate"}, Case{2, 16000, 16, "channel"},
                        Case{1, 16000, 8, "bit depth"}}) {
    try {
      parse_wav(make_wav(c.channels, c.rate, c.bits, {0, 0}));
      FAIL() << c.reason;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kUnsupportedFormat);
      EXPECT_NE(std::string(e.what()).find(c.reason), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(parse_wav(std::vector<std::uint8_t>{'R', 'I', 'F', 'F'}), Error);
}

}  // namespace
}  // namespace rasc
