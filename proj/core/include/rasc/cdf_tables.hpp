#pragma once

#include <cstdint>
#include <vector>

#include "rasc/entropy.hpp"
#include "rasc/range_coder.hpp"

namespace rasc {

// 64 scales log-spaced over [0.11, 256].
class ScaleTable {
 public:
  static constexpr int kSize = 64;
  static constexpr double kMin = kSigmaMin;
  static constexpr double kMax = 256.0;

  ScaleTable();
  const std::vector<double>& values() const { return values_; }
  // Index of the smallest scale >= sigma; the largest index for sigma above kMax.
  int index(double sigma) const;

 private:
  std::vector<double> values_;
};

const ScaleTable& scale_table();

// Zero-mean Gaussian table for scale sigma over +-min(64, max(1, ceil(6 sigma)))
// with an escape bucket for the tails.
CdfTable gaussian_table(double sigma);

struct CodingTables {
  std::vector<CdfTable> z;        // one per hyper-latent channel
  std::vector<CdfTable> y;        // one per scale table entry
  std::vector<double> z_medians;  // CDF(median) = 1/2
};

// Deterministic in the model parameters: the encoder and decoder derive the
// same tables from the same checkpoint.
CodingTables build_cdf_tables(const FactorizedDensity& density);

}  // namespace rasc
