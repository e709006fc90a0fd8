#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rasc {

inline constexpr int kSampleRate = 16000;

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// PCM16 mono 16 kHz only. Samples map as v / 32768.
AudioClip load_wav(const std::string& path);
AudioClip parse_wav(std::span<const std::uint8_t> bytes);

// Clamps to [-1, 1] and writes PCM16 (round to nearest, 1.0 -> 32767).
void save_wav(const std::string& path, const AudioClip& clip);
std::vector<std::uint8_t> serialize_wav(const AudioClip& clip);

std::int16_t float_to_pcm16(float v);

}  // namespace rasc
