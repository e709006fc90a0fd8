#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rasc/loss.hpp"
#include "rasc/model.hpp"
#include "rasc/wav.hpp"

namespace rasc {

struct TrainConfig {
  double lambda = 9.0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 1.0;
  std::int64_t steps = 2000;
  double crop_seconds = 0.5;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string model = "desk";         // "desk" or "toy"

  // True when lambda is not one of 0.25, 0.8, 2, 5.5, 9, 18.
  bool custom_lambda() const;
  void validate() const;

  // `key = value` lines; '#' starts a comment. Unknown keys are rejected.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::string& path);
};

// Applies RASC_SEED when set.
void apply_seed_override(TrainConfig& config);

ModelConfig model_config_for(const TrainConfig& config);

class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double epsilon);

  // Rescales gradients to `clip_norm` when their global norm exceeds it.
  // Returns the norm before clipping.
  double clip_gradients(double clip_norm);
  void step();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

struct TrainOptions {
  std::string log_path;         // JSON lines, one LossReport per step
  std::string checkpoint_path;  // periodic and final checkpoint
  std::function<void(const LossReport&)> on_step;
};

struct TrainResult {
  LossReport final_report;
  std::vector<LossReport> history;
};

// Deterministic sequence of random crops of `crop_seconds`; shorter clips are used whole.
class CropSampler {
 public:
  CropSampler(const std::vector<AudioClip>& dataset, double crop_seconds, std::uint64_t seed);
  std::vector<double> next();

 private:
  const std::vector<AudioClip>& dataset_;
  std::int64_t crop_;
  std::mt19937_64 rng_;
};

TrainResult train(CodecModel& model, const TrainConfig& config,
                  const std::vector<AudioClip>& dataset, const TrainOptions& options = {});

// Every .wav file directly inside `dir`, sorted by name.
std::vector<std::pair<std::string, AudioClip>> load_dataset(const std::string& dir);

std::string to_json(const LossReport& report);

}  // namespace rasc
