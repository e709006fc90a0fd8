#include <cstring>

#include <gtest/gtest.h>

#include "rasc/checkpoint.hpp"
#include "rasc/model.hpp"
#include "signals.hpp"

namespace rasc {
namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.config_hash = {1, 2, 3, 4, 5, 6, 7, 8};
  c.records.push_back({"a.weight", Tensor::from({2, 3}, {0.1, -2.5, 3.75, 1e-30, -0.0, 7.0}, Precision::kF32)});
  c.records.push_back({"b", Tensor::from({3}, {0.1, 1.0 / 3.0, -1e300}, Precision::kF64)});
  c.records.push_back({"config.x", Tensor::scalar(42.0)});
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  auto bytes = serialize_checkpoint(sample_checkpoint());
  EXPECT_EQ(std::memcmp(bytes.data(), "RASCKPT1", 8), 0);
  Checkpoint back = parse_checkpoint(bytes);
  EXPECT_EQ(back.config_hash, sample_checkpoint().config_hash);
  ASSERT_EQ(back.records.size(), 3u);
  EXPECT_EQ(back.records[0].value.precision(), Precision::kF32);
  EXPECT_EQ(back.records[2].value.rank(), 0);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  auto bytes = serialize_checkpoint(sample_checkpoint());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_checkpoint(bad), Error);
  for (std::size_t cut : {5ul, 20ul, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + cut);
    try {
      parse_checkpoint(t);
      FAIL() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kModelLoad);
    }
  }
}

TEST(Checkpoint, MissingFileIsModelLoadFailure) {
  try {
    load_checkpoint("/nonexistent/dir/model.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kModelLoad);
  }
}

TEST(Checkpoint, ModelRoundTripPreservesParametersAndFingerprint) {
  ModelConfig cfg = ModelConfig::toy();
  cfg.precision = Precision::kF32;
  CodecModel model(cfg);
  model.lambda = 5.5;
  const std::string dir = testing::temp_dir("ckpt");
  save_model(dir + "/m.ckpt", model);
  CodecModel back = load_model(dir + "/m.ckpt");
  ASSERT_EQ(back.store().all().size(), model.store().all().size());
  for (std::size_t i = 0; i < model.store().all().size(); ++i) {
    const auto& a = model.store().all()[i];
    const auto& b = back.store().all()[i];
    ASSERT_EQ(a.name(), b.name());
    for (std::int64_t k = 0; k < a.numel(); ++k) ASSERT_EQ(a.values()[k], b.values()[k]) << a.name();
  }
  EXPECT_EQ(back.lambda, 5.5);
  EXPECT_EQ(model_fingerprint(back), model_fingerprint(model));
  EXPECT_EQ(config_hash(back.config()), config_hash(model.config()));
}

TEST(Checkpoint, ShapeMismatchIsRejected) {
  ModelConfig cfg = ModelConfig::toy();
  Checkpoint c = to_checkpoint(CodecModel(cfg));
  for (auto& r : c.records) {
    if (r.name == "encoder.input.bias") r.value = Tensor::zeros({r.value.numel() + 1});
  }
  try {
    from_checkpoint(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kModelLoad);
    EXPECT_NE(std::string(e.what()).find("encoder.input.bias"), std::string::npos);
  }
}

TEST(Checkpoint, ConfigHashTracksConfig) {
  ModelConfig a = ModelConfig::toy();
  ModelConfig b = a;
  b.entropy.slice_hidden = 16;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(ModelConfig::toy()));
}

}  // namespace
}  // namespace rasc
