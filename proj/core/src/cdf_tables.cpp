#include "rasc/cdf_tables.hpp"

#include <algorithm>
#include <cmath>

#include "rasc/ops.hpp"

namespace rasc {

namespace {

constexpr std::int64_t kMaxGaussianSupport = 64;
constexpr std::int64_t kMaxHyperSupport = 256;
constexpr double kTailMass = 1.0 / 65536.0;

}  // namespace

ScaleTable::ScaleTable() {
  const double lo = std::log(kMin), hi = std::log(kMax);
  for (int i = 0; i < kSize; ++i) values_.push_back(std::exp(lo + (hi - lo) * i / (kSize - 1)));
  values_.front() = kMin;
  values_.back() = kMax;
}

int ScaleTable::index(double sigma) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), sigma);
  if (it == values_.end()) return kSize - 1;
  return static_cast<int>(it - values_.begin());
}

const ScaleTable& scale_table() {
  static const ScaleTable table;
  return table;
}

CdfTable gaussian_table(double sigma) {
  const std::int64_t bound = std::min<std::int64_t>(
      kMaxGaussianSupport, std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(6 * sigma))));
  std::vector<double> pmf;
  double mass = 0.0;
  for (std::int64_t n = -bound; n <= bound; ++n) {
    pmf.push_back(gaussian_pmf(n, 0.0, sigma, true));
    mass += pmf.back();
  }
  return CdfTable::from_pmf(-bound, pmf, true, std::max(0.0, 1.0 - mass));
}

CodingTables build_cdf_tables(const FactorizedDensity& density) {
  NoGradGuard guard;
  CodingTables t;
  for (double s : scale_table().values()) t.y.push_back(gaussian_table(s));

  t.z_medians = density.medians();
  const std::int64_t c = density.channels();
  const std::int64_t span = 2 * kMaxHyperSupport + 1;
  // CDF at the half-integer edges around each rounded median.
  std::vector<double> edges(c * (span + 1));
  std::vector<std::int64_t> centre(c);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    centre[ch] = static_cast<std::int64_t>(ops::round_half_away(t.z_medians[ch]));
    for (std::int64_t k = 0; k <= span; ++k) {
      edges[ch * (span + 1) + k] = static_cast<double>(centre[ch] - kMaxHyperSupport + k) - 0.5;
    }
  }
  Tensor cdf = density.cdf(Tensor::from({c, span + 1}, edges, Precision::kF64));
  auto cv = cdf.values();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* row = cv.data() + ch * (span + 1);
    std::int64_t lo = kMaxHyperSupport, hi = kMaxHyperSupport;
    while (lo > 0 && row[lo] >= kTailMass) --lo;
    while (hi < span - 1 && 1.0 - row[hi + 1] >= kTailMass) ++hi;
    std::vector<double> pmf;
    for (std::int64_t k = lo; k <= hi; ++k) pmf.push_back(std::max(0.0, row[k + 1] - row[k]));
    const double tails = std::max(0.0, row[lo]) + std::max(0.0, 1.0 - row[hi + 1]);
    try {
      t.z.push_back(CdfTable::from_pmf(centre[ch] - kMaxHyperSupport + lo, pmf, true, tails));
    } catch (const Error& e) {
      fail(ErrorKind::kNumeric, "hyper-latent channel " + std::to_string(ch) + ": " + e.what());
    }
  }
  return t;
}

}  // namespace rasc
