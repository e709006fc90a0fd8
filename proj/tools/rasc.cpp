// rasc: command line front end for the codec.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rasc/codec.hpp"
#include "rasc/container.hpp"
#include "rasc/error.hpp"
#include "rasc/loss.hpp"
#include "rasc/model.hpp"
#include "rasc/rd.hpp"
#include "rasc/trainer.hpp"
#include "rasc/wav.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rasc {
namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kShape: return 3;
    case ErrorKind::kNumeric: return 4;
    case ErrorKind::kIo: return 5;
    case ErrorKind::kUnsupportedFormat: return 6;
    case ErrorKind::kModelLoad: return 7;
    case ErrorKind::kBitstream: return 8;
    case ErrorKind::kDecode: return 9;
    case ErrorKind::kTraining: return 10;
  }
  return 1;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string hex8(const Digest8& d) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : d) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

CodecModel open_model(const std::string& path) {
  try {
    return load_model(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kModelLoad) throw;
    throw Error(ErrorKind::kModelLoad, "cannot load model '" + path + "': " + e.what());
  }
}

std::string lambda_label(std::uint8_t index) {
  if (index == kCustomLambda) return "custom";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lambda_grid().at(index));
  return buf;
}

// ---- compress / decompress / info ----

struct CodingArgs {
  std::string input, model, output;
};

int run_compress(const CodingArgs& a) {
  CodecModel model = open_model(a.model);
  AudioClip clip = load_wav(a.input);
  Codec codec(model);
  CompressResult r = codec.compress(clip);
  save_container(a.output, r.container);
  const std::size_t bits = 8 * r.container.payload_bytes();
  std::printf("%s: %zu samples, %zu payload bytes, %.3f kbps\n", a.output.c_str(), clip.samples.size(),
              r.container.payload_bytes(), kbps(bits, clip.duration_seconds()));
  return 0;
}

int run_decompress(const CodingArgs& a) {
  CodecModel model = open_model(a.model);
  Container c = load_container(a.input);
  Codec codec(model);
  DecompressResult r = codec.decompress(c);
  save_wav(a.output, r.audio);
  std::printf("%s: %zu samples\n", a.output.c_str(), r.audio.samples.size());
  return 0;
}

int run_info(const std::string& input, bool as_json) {
  Container c = load_container(input);
  json j;
  j["model_hash"] = hex8(c.model_hash);
  j["sample_rate"] = c.sample_rate;
  j["samples"] = c.samples;
  j["frames"] = c.frames;
  j["lambda"] = lambda_label(c.lambda_index);
  j["header_bits"] = 8 * header_bytes(c);
  j["z_bits"] = 8 * c.z_stream.size();
  std::vector<std::size_t> slice_bits;
  for (const auto& s : c.slice_streams) slice_bits.push_back(8 * s.size());
  j["slice_bits"] = slice_bits;
  j["payload_bits"] = 8 * c.payload_bytes();
  const double seconds = static_cast<double>(c.samples) / c.sample_rate;
  j["kbps"] = c.samples ? kbps(8 * c.payload_bytes(), seconds) : 0.0;
  if (as_json) {
    std::cout << j.dump() << "\n";
    return 0;
  }
  std::printf("model hash    %s\n", hex8(c.model_hash).c_str());
  std::printf("sample rate   %u\n", c.sample_rate);
  std::printf("samples       %llu (%.3f s)\n", static_cast<unsigned long long>(c.samples), seconds);
  std::printf("frames        %u\n", c.frames);
  std::printf("lambda        %s\n", lambda_label(c.lambda_index).c_str());
  std::printf("header bits   %zu\n", 8 * header_bytes(c));
  std::printf("z bits        %zu\n", 8 * c.z_stream.size());
  for (std::size_t i = 0; i < slice_bits.size(); ++i) std::printf("slice %zu bits  %zu\n", i, slice_bits[i]);
  std::printf("payload bits  %zu\n", 8 * c.payload_bytes());
  std::printf("kbps          %.3f\n", j["kbps"].get<double>());
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config, dataset, output, log;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = TrainConfig::load(a.config);
  apply_seed_override(config);
  std::vector<AudioClip> clips;
  for (auto& [name, clip] : load_dataset(a.dataset)) clips.push_back(std::move(clip));
  if (config.custom_lambda()) std::fprintf(stderr, "note: lambda %g is not on the standard grid\n", config.lambda);
  CodecModel model(model_config_for(config));
  TrainOptions options;
  options.log_path = a.log;
  options.checkpoint_path = a.output;
  if (!a.quiet) {
    options.on_step = [&](const LossReport& r) {
      if (r.step % 100 == 0 || r.step == config.steps) std::fprintf(stderr, "%s\n", to_json(r).c_str());
    };
  }
  TrainResult result = train(model, config, clips, options);
  std::printf("%s\n", to_json(result.final_report).c_str());
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string dataset, quality_csv, quality_metric = "snr";
  std::vector<std::string> models;
  bool as_json = false;
};

// model stem -> clip name -> score
using QualityTable = std::map<std::string, std::map<std::string, double>>;

QualityTable load_quality_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open quality csv '" + path + "'");
  QualityTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    require(cells.size() == 3, ErrorKind::kInvalidArgument,
            path + ":" + std::to_string(line_no) + ": expected model,clip,score");
    if (line_no == 1 && cells[2] == "score") continue;
    try {
      table[stem(cells[0])][cells[1]] = std::stod(cells[2]);
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidArgument, path + ":" + std::to_string(line_no) + ": bad score '" + cells[2] + "'");
    }
  }
  return table;
}

json point_json(const RdPoint& p) {
  return {{"kbps", p.kbps},       {"l_t", p.l_t},         {"l_f", p.l_f},
          {"snr_db", p.snr_db},   {"mel_distance", p.mel_distance}, {"quality", p.quality}};
}

int run_eval(const EvalArgs& a) {
  auto dataset = load_dataset(a.dataset);
  require(!dataset.empty(), ErrorKind::kInvalidArgument, "no .wav clips in '" + a.dataset + "'");
  std::optional<QualityTable> quality;
  if (!a.quality_csv.empty()) quality = load_quality_csv(a.quality_csv);
  int flagged = 0;
  if (!a.as_json) {
    std::printf("%-20s %-24s %9s %9s %9s %9s %9s %9s\n", "model", "clip", "kbps", "L_t", "L_f", "snr_db",
                "mel_dist", a.quality_metric.c_str());
  }
  for (const auto& model_path : a.models) {
    CodecModel model = open_model(model_path);
    Codec codec(model);
    const std::string label = stem(model_path);
    std::vector<RdPoint> points;
    for (const auto& [path, clip] : dataset) {
      const std::string name = fs::path(path).filename().string();
      RdPoint p;
      try {
        CompressResult enc = codec.compress(clip);
        Container parsed = parse_container(serialize_container(enc.container));
        AudioClip decoded = codec.decompress(parsed).audio;
        DistortionValues d = distortion(clip, decoded);
        p.kbps = kbps(8 * parsed.payload_bytes(), clip.duration_seconds());
        p.l_t = d.time;
        p.l_f = d.spectral;
        p.snr_db = snr_db(clip.samples, decoded.samples);
        p.mel_distance = mel_distance(clip, decoded);
        p.quality = p.snr_db;
        if (quality) {
          auto m = quality->find(label);
          require(m != quality->end() && m->second.count(name), ErrorKind::kInvalidArgument,
                  "quality csv has no score for model '" + label + "', clip '" + name + "'");
          p.quality = m->second.at(name);
        }
      } catch (const Error& e) {
        ++flagged;
        if (e.kind() != ErrorKind::kDecode && e.kind() != ErrorKind::kBitstream) throw;
        if (a.as_json) {
          std::cout << json{{"kind", "clip"}, {"model", label}, {"clip", name}, {"error", e.what()}}.dump() << "\n";
        } else {
          std::printf("%-20s %-24s FAILED: %s\n", label.c_str(), name.c_str(), e.what());
        }
        continue;
      }
      points.push_back(p);
      if (a.as_json) {
        json j = point_json(p);
        j["kind"] = "clip";
        j["model"] = label;
        j["clip"] = name;
        std::cout << j.dump() << "\n";
      } else {
        std::printf("%-20s %-24s %9.3f %9.4f %9.4f %9.2f %9.4f %9.3f\n", label.c_str(), name.c_str(), p.kbps,
                    p.l_t, p.l_f, p.snr_db, p.mel_distance, p.quality);
      }
    }
    if (points.empty()) continue;
    RdPoint m = mean_point(points);
    if (a.as_json) {
      json j = point_json(m);
      j["kind"] = "mean";
      j["model"] = label;
      j["clips"] = points.size();
      j["quality_metric"] = a.quality_metric;
      std::cout << j.dump() << "\n";
    } else {
      std::printf("%-20s %-24s %9.3f %9.4f %9.4f %9.2f %9.4f %9.3f\n", label.c_str(), "(mean)", m.kbps, m.l_t,
                  m.l_f, m.snr_db, m.mel_distance, m.quality);
    }
  }
  if (flagged && !a.as_json) std::printf("%d clip(s) failed to decode and were excluded\n", flagged);
  return 0;
}

// ---- bdrate ----

// Mean records from `rasc eval --json`, or "kbps,quality" CSV lines.
RdCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open curve '" + path + "'");
  RdCurve curve;
  curve.label = stem(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '{') {
      json j = json::parse(line, nullptr, false);
      require(!j.is_discarded(), ErrorKind::kInvalidArgument, path + ": malformed JSON line");
      if (j.value("kind", "") != "mean") continue;
      RdPoint p;
      p.kbps = j.at("kbps").get<double>();
      p.quality = j.at("quality").get<double>();
      curve.points.push_back(p);
      continue;
    }
    auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::kInvalidArgument, path + ": expected kbps,quality");
    try {
      RdPoint p;
      p.kbps = std::stod(line.substr(0, comma));
      p.quality = std::stod(line.substr(comma + 1));
      curve.points.push_back(p);
    } catch (const std::exception&) {
      if (curve.points.empty()) continue;  // header row
      fail(ErrorKind::kInvalidArgument, path + ": bad row '" + line + "'");
    }
  }
  return curve;
}

int run_bdrate(const std::string& a, const std::string& b, bool as_json) {
  RdCurve ca = load_curve(a), cb = load_curve(b);
  const double pct = bd_rate(ca, cb);
  if (as_json) {
    std::cout << json{{"a", ca.label}, {"b", cb.label}, {"bd_rate_percent", pct}}.dump() << "\n";
  } else {
    std::printf("BD-rate of %s relative to %s: %+.3f%%\n", ca.label.c_str(), cb.label.c_str(), pct);
  }
  return 0;
}

}  // namespace
}  // namespace rasc

int main(int argc, char** argv) {
  using namespace rasc;
  CLI::App app{"rasc: rate-aware learned speech codec"};
  app.require_subcommand(1);

  CodingArgs comp, decomp;
  auto* c = app.add_subcommand("compress", "Encode a 16 kHz PCM16 WAV into a .rasc container");
  c->add_option("input", comp.input, "input WAV")->required();
  c->add_option("-m,--model", comp.model, "model checkpoint")->required();
  c->add_option("-o,--output", comp.output, "output .rasc")->required();

  auto* d = app.add_subcommand("decompress", "Decode a .rasc container to WAV");
  d->add_option("input", decomp.input, "input .rasc")->required();
  d->add_option("-m,--model", decomp.model, "model checkpoint")->required();
  d->add_option("-o,--output", decomp.output, "output WAV")->required();

  std::string info_input;
  bool info_json = false;
  auto* i = app.add_subcommand("info", "Print container header and per-section bit counts");
  i->add_option("input", info_input, "input .rasc")->required();
  i->add_flag("--json", info_json, "emit one JSON object");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a directory of WAV clips");
  t->add_option("-c,--config", tr.config, "key = value training config")->required();
  t->add_option("-d,--dataset", tr.dataset, "directory of WAV clips")->required();
  t->add_option("-o,--output", tr.output, "output checkpoint")->required();
  t->add_option("--log", tr.log, "JSON-lines training log");
  t->add_flag("-q,--quiet", tr.quiet, "no progress on stderr");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Rate-distortion points for one or more models");
  e->add_option("-d,--dataset", ev.dataset, "directory of WAV clips")->required();
  e->add_option("-m,--model", ev.models, "model checkpoint(s)")->required();
  e->add_flag("--json", ev.as_json, "JSON lines instead of a table");
  e->add_option("--quality-csv", ev.quality_csv, "external scores as model,clip,score rows");
  e->add_option("--quality-metric", ev.quality_metric, "name of the quality axis")->capture_default_str();

  std::string bd_a, bd_b;
  bool bd_json = false;
  auto* b = app.add_subcommand("bdrate", "BD-rate of curve A relative to curve B");
  b->add_option("curve_a", bd_a, "eval --json output or kbps,quality CSV")->required();
  b->add_option("curve_b", bd_b, "eval --json output or kbps,quality CSV")->required();
  b->add_flag("--json", bd_json, "emit one JSON object");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c->parsed()) return run_compress(comp);
    if (d->parsed()) return run_decompress(decomp);
    if (i->parsed()) return run_info(info_input, info_json);
    if (t->parsed()) return run_train(tr);
    if (e->parsed()) return run_eval(ev);
    if (b->parsed()) return run_bdrate(bd_a, bd_b, bd_json);
  } catch (const Error& err) {
    std::fprintf(stderr, "rasc: %s: %s\n", to_string(err.kind()), err.what());
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    std::fprintf(stderr, "rasc: %s\n", err.what());
    return 1;
  }
  return 0;
}
