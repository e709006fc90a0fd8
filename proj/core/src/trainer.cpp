#include "rasc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rasc/bytes.hpp"

namespace rasc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == value.size() && std::isfinite(v), ErrorKind::kInvalidArgument,
          "config key " + key + ": '" + value + "' is not a number");
  return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  require(v == std::floor(v) && v >= 0, ErrorKind::kInvalidArgument,
          "config key " + key + ": '" + value + "' is not a non-negative integer");
  return static_cast<std::int64_t>(v);
}

}  // namespace

bool TrainConfig::custom_lambda() const { return lambda_index(lambda) == kCustomLambda; }

void TrainConfig::validate() const {
  require(lambda >= 0 && std::isfinite(lambda), ErrorKind::kInvalidArgument, "lambda must be >= 0");
  require(learning_rate > 0, ErrorKind::kInvalidArgument, "learning rate must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, ErrorKind::kInvalidArgument,
          "Adam betas must lie in [0, 1)");
  require(clip_norm > 0, ErrorKind::kInvalidArgument, "clip_norm must be positive");
  require(crop_seconds > 0, ErrorKind::kInvalidArgument, "crop_seconds must be positive");
  require(model == "desk" || model == "toy", ErrorKind::kInvalidArgument,
          "model must be desk or toy, got " + model);
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kInvalidArgument,
            "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "lambda") c.lambda = parse_number(key, value);
    else if (key == "learning_rate" || key == "lr") c.learning_rate = parse_number(key, value);
    else if (key == "beta1") c.beta1 = parse_number(key, value);
    else if (key == "beta2") c.beta2 = parse_number(key, value);
    else if (key == "clip_norm") c.clip_norm = parse_number(key, value);
    else if (key == "steps") c.steps = parse_integer(key, value);
    else if (key == "crop_seconds") c.crop_seconds = parse_number(key, value);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    else if (key == "checkpoint_every") c.checkpoint_every = parse_integer(key, value);
    else if (key == "model") c.model = value;
    else fail(ErrorKind::kInvalidArgument, "config line " + std::to_string(lineno) + ": unknown key " + key);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  auto bytes = read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

void apply_seed_override(TrainConfig& config) {
  if (const char* s = std::getenv("RASC_SEED"); s != nullptr && *s != '\0') {
    config.seed = static_cast<std::uint64_t>(parse_integer("RASC_SEED", s));
  }
}

ModelConfig model_config_for(const TrainConfig& config) {
  ModelConfig m = config.model == "toy" ? ModelConfig::toy() : ModelConfig::desk();
  m.seed = config.seed;
  return m;
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

double Adam::clip_gradients(double clip_norm) {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double f = clip_norm / norm;
    for (auto& p : params_) {
      for (double& g : p.mutable_grad()) g *= f;
    }
  }
  return norm;
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i].grad();
    std::vector<double> value(params_[i].values().begin(), params_[i].values().end());
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1 - beta2_) * g[k] * g[k];
      value[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
    params_[i].assign(value);
  }
}

CropSampler::CropSampler(const std::vector<AudioClip>& dataset, double crop_seconds, std::uint64_t seed)
    : dataset_(dataset), crop_(static_cast<std::int64_t>(std::llround(crop_seconds * kSampleRate))), rng_(seed) {
  require(!dataset.empty(), ErrorKind::kTraining, "training dataset is empty");
}

std::vector<double> CropSampler::next() {
  const auto& clip = dataset_[std::uniform_int_distribution<std::size_t>(0, dataset_.size() - 1)(rng_)];
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  std::int64_t start = 0, len = n;
  if (n > crop_) {
    start = std::uniform_int_distribution<std::int64_t>(0, n - crop_)(rng_);
    len = crop_;
  }
  return std::vector<double>(clip.samples.begin() + start, clip.samples.begin() + start + len);
}

std::string to_json(const LossReport& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["total"] = r.total;
  j["rate_y_bits"] = r.rate_y_bits;
  j["rate_z_bits"] = r.rate_z_bits;
  j["latent_elements"] = r.latent_elements;
  j["rate_y_per_element"] = r.rate_y_per_element();
  j["rate_z_per_element"] = r.rate_z_per_element();
  j["l_t"] = r.l_t;
  j["l_f"] = r.l_f;
  j["lambda"] = r.lambda;
  return j.dump();
}

TrainResult train(CodecModel& model, const TrainConfig& config,
                  const std::vector<AudioClip>& dataset, const TrainOptions& options) {
  config.validate();
  require(!dataset.empty(), ErrorKind::kTraining, "training dataset is empty");
  for (const auto& clip : dataset) {
    require(!clip.samples.empty(), ErrorKind::kTraining, "training dataset has an empty clip");
  }
  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path);
    require(log.good(), ErrorKind::kIo, "cannot open training log " + options.log_path);
  }
  std::vector<Tensor> params = model.store().all();
  Adam adam(params, config.learning_rate, config.beta1, config.beta2, config.adam_epsilon);
  CropSampler sampler(dataset, config.crop_seconds, config.seed);
  model.lambda = config.lambda;

  TrainResult result;
  for (std::int64_t step = 1; step <= config.steps; ++step) {
    std::vector<double> crop = sampler.next();
    NoiseSource noise(config.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(step));
    RdLoss loss;
    try {
      loss = rd_loss(model, crop, config.lambda, noise);
    } catch (const Error& e) {
      fail(ErrorKind::kTraining, "step " + std::to_string(step) + ": " + e.what());
    }
    loss.report.step = step;
    backprop(loss.total, params);
    adam.clip_gradients(config.clip_norm);
    adam.step();
    result.history.push_back(loss.report);
    if (log.is_open()) log << to_json(loss.report) << '\n';
    if (options.on_step) options.on_step(loss.report);
    if (!options.checkpoint_path.empty() && config.checkpoint_every > 0 &&
        step % config.checkpoint_every == 0) {
      save_model(options.checkpoint_path, model);
    }
  }
  if (!result.history.empty()) result.final_report = result.history.back();
  if (!options.checkpoint_path.empty()) save_model(options.checkpoint_path, model);
  return result;
}

std::vector<std::pair<std::string, AudioClip>> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  require(fs::is_directory(dir, ec), ErrorKind::kIo, "not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      names.push_back(entry.path().string());
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<std::pair<std::string, AudioClip>> out;
  for (const auto& n : names) out.emplace_back(n, load_wav(n));
  return out;
}

}  // namespace rasc
