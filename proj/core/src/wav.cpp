#include "rasc/wav.hpp"

#include <algorithm>
#include <cmath>

#include "rasc/bytes.hpp"
#include "rasc/error.hpp"

namespace rasc {

AudioClip parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorKind::kUnsupportedFormat);
  require(r.text(4) == "RIFF", ErrorKind::kUnsupportedFormat, "not a RIFF file");
  r.u32();
  require(r.text(4) == "WAVE", ErrorKind::kUnsupportedFormat, "not a WAVE file");
  bool have_fmt = false;
  AudioClip clip;
  while (r.remaining() >= 8) {
    const std::string id = r.text(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      require(size >= 16, ErrorKind::kUnsupportedFormat, "fmt chunk too small");
      auto body = r.bytes(size);
      ByteReader f(body, ErrorKind::kUnsupportedFormat);
      const auto format = f.u16();
      const auto channels = f.u16();
      const auto rate = f.u32();
      f.u32();
      f.u16();
      const auto bits = f.u16();
      require(format == 1, ErrorKind::kUnsupportedFormat,
              "unsupported encoding (format tag " + std::to_string(format) + ", need PCM)");
      require(channels == 1, ErrorKind::kUnsupportedFormat,
              "unsupported channel count " + std::to_string(channels) + " (need mono)");
      require(bits == 16, ErrorKind::kUnsupportedFormat,
              "unsupported bit depth " + std::to_string(bits) + " (need 16)");
      require(rate == kSampleRate, ErrorKind::kUnsupportedFormat,
              "unsupported sample rate " + std::to_string(rate) + " (need 16000)");
      clip.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorKind::kUnsupportedFormat, "data chunk before fmt chunk");
      const std::uint32_t usable = std::min<std::uint32_t>(size, r.remaining());
      auto body = r.bytes(usable - usable % 2);
      clip.samples.resize(body.size() / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(body[2 * i] | (body[2 * i + 1] << 8));
        clip.samples[i] = static_cast<float>(raw) / 32768.0f;
      }
      return clip;
    } else {
      r.bytes(std::min<std::size_t>(size + (size & 1), r.remaining()));
    }
  }
  fail(ErrorKind::kUnsupportedFormat, "no data chunk");
}

AudioClip load_wav(const std::string& path) { return parse_wav(read_file(path)); }

std::int16_t float_to_pcm16(float v) {
  const double c = std::clamp(static_cast<double>(v), -1.0, 1.0);
  const double scaled = std::round(c * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::vector<std::uint8_t> serialize_wav(const AudioClip& clip) {
  require(clip.sample_rate == kSampleRate, ErrorKind::kUnsupportedFormat,
          "unsupported sample rate " + std::to_string(clip.sample_rate));
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  ByteWriter w;
  w.text("RIFF");
  w.u32(36 + data_bytes);
  w.text("WAVE");
  w.text("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(1);
  w.u32(kSampleRate);
  w.u32(kSampleRate * 2);
  w.u16(2);
  w.u16(16);
  w.text("data");
  w.u32(data_bytes);
  for (float s : clip.samples) w.u16(static_cast<std::uint16_t>(float_to_pcm16(s)));
  return w.take();
}

void save_wav(const std::string& path, const AudioClip& clip) {
  write_file(path, serialize_wav(clip));
}

}  // namespace rasc
