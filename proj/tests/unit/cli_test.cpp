#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rasc/container.hpp"
#include "rasc/wav.hpp"
#include "signals.hpp"

namespace rasc {
namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(RASC_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

// One tiny toy model shared by every test in the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::temp_dir("cli");
    data_ = dir_ + "/data";
    std::filesystem::create_directories(data_);
    save_wav(data_ + "/a.wav", testing::vowel_clip(0.3));
    save_wav(data_ + "/b.wav", testing::random_clip(3000, 7, 0.2));
    write_text(dir_ + "/train.cfg", "model = toy\nlambda = 9\nsteps = 3\ncrop_seconds = 0.1\nseed = 4\n");
    model_ = dir_ + "/toy.ckpt";
    ASSERT_EQ(run("train -q -c " + dir_ + "/train.cfg -d " + data_ + " -o " + model_).code, 0);
  }

  static std::string dir_, data_, model_;
};

std::string CliTest::dir_, CliTest::data_, CliTest::model_;

TEST_F(CliTest, CompressDecompressKeepsDuration) {
  const std::string rasc_path = dir_ + "/a.rasc", wav = dir_ + "/a_out.wav";
  CliRun c = run("compress " + data_ + "/a.wav -m " + model_ + " -o " + rasc_path);
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(c.out.find("kbps"), std::string::npos);
  ASSERT_EQ(run("decompress " + rasc_path + " -m " + model_ + " -o " + wav).code, 0);
  EXPECT_EQ(load_wav(wav).samples.size(), load_wav(data_ + "/a.wav").samples.size());
}

TEST_F(CliTest, CompressIsByteIdempotent) {
  ASSERT_EQ(run("compress " + data_ + "/b.wav -m " + model_ + " -o " + dir_ + "/b1.rasc").code, 0);
  ASSERT_EQ(run("compress " + data_ + "/b.wav -m " + model_ + " -o " + dir_ + "/b2.rasc").code, 0);
  EXPECT_EQ(slurp(dir_ + "/b1.rasc"), slurp(dir_ + "/b2.rasc"));
}

TEST_F(CliTest, InfoSectionBitsSumToPayload) {
  const std::string path = dir_ + "/info.rasc";
  ASSERT_EQ(run("compress " + data_ + "/a.wav -m " + model_ + " -o " + path).code, 0);
  CliRun r = run("info --json " + path);
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  std::size_t sum = j["z_bits"].get<std::size_t>();
  for (auto b : j["slice_bits"]) sum += b.get<std::size_t>();
  EXPECT_EQ(sum, j["payload_bits"].get<std::size_t>());
  EXPECT_EQ(j["payload_bits"].get<std::size_t>(), 8 * load_container(path).payload_bytes());
  EXPECT_EQ(j["samples"].get<std::size_t>(), load_wav(data_ + "/a.wav").samples.size());
  EXPECT_EQ(j["lambda"], "9");
}

TEST_F(CliTest, DistinctExitCodesPerFailureClass) {
  EXPECT_EQ(run("compress " + data_ + "/a.wav -m " + dir_ + "/missing.ckpt -o " + dir_ + "/x.rasc").code, 7);
  EXPECT_EQ(run("info " + dir_ + "/missing.rasc").code, 5);
  write_text(dir_ + "/garbage.rasc", "not a container");
  EXPECT_EQ(run("info " + dir_ + "/garbage.rasc").code, 8);
  write_text(dir_ + "/bad.wav", "RIFF....WAVE");
  EXPECT_EQ(run("compress " + dir_ + "/bad.wav -m " + model_ + " -o " + dir_ + "/x.rasc").code, 6);

  // A stream whose payload was cut short fails at decode time.
  const std::string path = dir_ + "/cut.rasc";
  ASSERT_EQ(run("compress " + data_ + "/a.wav -m " + model_ + " -o " + path).code, 0);
  Container c = load_container(path);
  c.slice_streams.back().resize(c.slice_streams.back().size() / 2);
  save_container(path, c);
  EXPECT_EQ(run("decompress " + path + " -m " + model_ + " -o " + dir_ + "/cut.wav").code, 9);

  EXPECT_NE(run("frobnicate").code, 0);
}

TEST_F(CliTest, EvalEmitsClipAndMeanRecords) {
  CliRun r = run("eval --json -d " + data_ + " -m " + model_);
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  int clips = 0, means = 0;
  double kbps_sum = 0.0, mean_kbps = 0.0;
  for (std::string line; std::getline(lines, line);) {
    auto j = nlohmann::json::parse(line);
    if (j["kind"] == "clip") {
      ++clips;
      kbps_sum += j["kbps"].get<double>();
      EXPECT_EQ(j["quality"], j["snr_db"]);
    } else {
      ++means;
      mean_kbps = j["kbps"].get<double>();
    }
  }
  EXPECT_EQ(clips, 2);
  EXPECT_EQ(means, 1);
  EXPECT_NEAR(mean_kbps, kbps_sum / 2, 1e-9);
}

TEST_F(CliTest, EvalUsesExternalQualityScores) {
  write_text(dir_ + "/q.csv", "model,clip,score\ntoy,a.wav,3.5\ntoy,b.wav,4.5\n");
  CliRun r = run("eval --json --quality-csv " + dir_ + "/q.csv --quality-metric visqol -d " + data_ + " -m " + model_);
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string last;
  for (std::string line; std::getline(lines, line);) last = line;
  auto mean = nlohmann::json::parse(last);
  EXPECT_DOUBLE_EQ(mean["quality"].get<double>(), 4.0);
  EXPECT_EQ(mean["quality_metric"], "visqol");

  write_text(dir_ + "/partial.csv", "toy,a.wav,3.5\n");
  EXPECT_EQ(run("eval --quality-csv " + dir_ + "/partial.csv -d " + data_ + " -m " + model_).code, 2);
}

TEST_F(CliTest, BdRateFromCsvCurves) {
  write_text(dir_ + "/a.csv", "kbps,quality\n1,10\n2,14\n4,17\n8,19\n");
  write_text(dir_ + "/half.csv", "kbps,quality\n0.5,10\n1,14\n2,17\n4,19\n");
  CliRun r = run("bdrate --json " + dir_ + "/half.csv " + dir_ + "/a.csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out)["bd_rate_percent"].get<double>(), -50.0, 1e-6);
  write_text(dir_ + "/far.csv", "kbps,quality\n1,30\n2,40\n");
  EXPECT_EQ(run("bdrate " + dir_ + "/far.csv " + dir_ + "/a.csv").code, 2);
}

TEST_F(CliTest, SeedOverrideChangesTrainingAndIsDeterministic) {
  const std::string cfg = dir_ + "/train.cfg";
  auto train_with = [&](const std::string& seed, const std::string& out) {
    const std::string cmd = "RASC_SEED=" + seed + " " + std::string(RASC_CLI_PATH) + " train -q -c " + cfg +
                            " -d " + data_ + " -o " + out + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  ASSERT_EQ(train_with("11", dir_ + "/s11a.ckpt"), 0);
  ASSERT_EQ(train_with("11", dir_ + "/s11b.ckpt"), 0);
  ASSERT_EQ(train_with("12", dir_ + "/s12.ckpt"), 0);
  EXPECT_EQ(slurp(dir_ + "/s11a.ckpt"), slurp(dir_ + "/s11b.ckpt"));
  EXPECT_NE(slurp(dir_ + "/s11a.ckpt"), slurp(dir_ + "/s12.ckpt"));
}

TEST_F(CliTest, TrainRejectsEmptyDataset) {
  const std::string empty = testing::temp_dir("cli_empty");
  EXPECT_EQ(run("train -q -c " + dir_ + "/train.cfg -d " + empty + " -o " + dir_ + "/e.ckpt").code, 10);
}

}  // namespace
}  // namespace rasc
