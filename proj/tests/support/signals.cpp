#include "signals.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace rasc::testing {

AudioClip vowel_clip(double seconds, double f0, double gain) {
  const double formants[] = {700.0, 1200.0, 2600.0};
  const double widths[] = {110.0, 120.0, 160.0};
  AudioClip clip;
  const auto n = static_cast<std::int64_t>(seconds * kSampleRate);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    double v = 0.0;
    for (int h = 1; f0 * h < 4000.0; ++h) {
      const double f = f0 * h;
      double g = 0.0;
      for (int k = 0; k < 3; ++k) g += 1.0 / (1.0 + std::pow((f - formants[k]) / widths[k], 2));
      v += g * std::sin(2 * std::numbers::pi * f * t + 0.3 * h * h);
    }
    const double wobble = 0.75 + 0.25 * std::sin(2 * std::numbers::pi * 3.0 * t);
    clip.samples.push_back(static_cast<float>(gain * v * wobble));
  }
  return clip;
}

AudioClip sine_clip(double seconds, double hz, double amplitude) {
  AudioClip clip;
  const auto n = static_cast<std::int64_t>(seconds * kSampleRate);
  for (std::int64_t i = 0; i < n; ++i) {
    clip.samples.push_back(static_cast<float>(
        amplitude * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / kSampleRate)));
  }
  return clip;
}

std::vector<double> random_signal(std::int64_t samples, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, amplitude);
  std::vector<double> v(samples);
  for (auto& x : v) x = dist(rng);
  return v;
}

AudioClip random_clip(std::int64_t samples, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rate = 1.0 + 6.0 * u(rng), phase = 2 * std::numbers::pi * u(rng);
  const double tone = 100.0 + 900.0 * u(rng);
  AudioClip clip;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double env = 0.6 + 0.4 * std::sin(2 * std::numbers::pi * rate * t + phase);
    const double v = amplitude * env * (0.5 * noise(rng) + std::sin(2 * std::numbers::pi * tone * t));
    clip.samples.push_back(static_cast<float>(std::clamp(v, -1.0, 1.0)));
  }
  return clip;
}

std::vector<double> to_double(const AudioClip& clip) {
  return std::vector<double>(clip.samples.begin(), clip.samples.end());
}

std::string temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  static std::uint64_t counter = 0;
  std::random_device rd;
  fs::path p = fs::temp_directory_path() /
               ("rasc_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace rasc::testing
