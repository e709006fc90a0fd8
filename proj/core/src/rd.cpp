#include "rasc/rd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "rasc/error.hpp"

namespace rasc {

namespace {

// Integral of the polynomial from lo to hi.
double integrate(const std::vector<double>& c, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double p = static_cast<double>(k + 1);
    acc += c[k] / p * (std::pow(hi, p) - std::pow(lo, p));
  }
  return acc;
}

std::vector<double> fit_log_rate(const RdCurve& curve, double centre) {
  std::vector<double> q, r;
  for (const auto& p : curve.points) {
    q.push_back(p.quality - centre);
    r.push_back(std::log(p.kbps));
  }
  return polyfit(q, r, static_cast<int>(std::min<std::size_t>(3, q.size() - 1)));
}

std::pair<double, double> quality_range(const RdCurve& c) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& p : c.points) {
    lo = std::min(lo, p.quality);
    hi = std::max(hi, p.quality);
  }
  return {lo, hi};
}

}  // namespace

void RdCurve::normalize() {
  std::sort(points.begin(), points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.kbps < b.kbps; });
  require(points.size() >= 2, ErrorKind::kInvalidArgument,
          "curve " + label + " needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].kbps > 0 && std::isfinite(points[i].kbps) && std::isfinite(points[i].quality),
            ErrorKind::kInvalidArgument, "curve " + label + " has a non-positive or non-finite point");
    if (i > 0) {
      require(points[i].kbps > points[i - 1].kbps, ErrorKind::kInvalidArgument,
              "curve " + label + " rates must be strictly increasing");
    }
  }
}

double snr_db(std::span<const float> x, std::span<const float> x_hat) {
  const std::size_t n = std::min(x.size(), x_hat.size());
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - x_hat[i];
    signal += static_cast<double>(x[i]) * x[i];
    noise += d * d;
  }
  if (noise == 0.0) return kSnrCapDb;
  if (signal == 0.0) return -kSnrCapDb;
  return std::clamp(10.0 * std::log10(signal / noise), -kSnrCapDb, kSnrCapDb);
}

double kbps(std::size_t payload_bits, double seconds) {
  require(seconds > 0, ErrorKind::kInvalidArgument, "duration must be positive");
  return static_cast<double>(payload_bits) / seconds / 1000.0;
}

RdPoint mean_point(std::span<const RdPoint> points) {
  require(!points.empty(), ErrorKind::kInvalidArgument, "mean of no points");
  RdPoint m;
  for (const auto& p : points) {
    m.kbps += p.kbps;
    m.l_t += p.l_t;
    m.l_f += p.l_f;
    m.snr_db += p.snr_db;
    m.mel_distance += p.mel_distance;
    m.quality += p.quality;
  }
  const double n = static_cast<double>(points.size());
  m.kbps /= n;
  m.l_t /= n;
  m.l_f /= n;
  m.snr_db /= n;
  m.mel_distance /= n;
  m.quality /= n;
  return m;
}

std::vector<double> polyfit(std::span<const double> x, std::span<const double> y, int degree) {
  require(x.size() == y.size() && static_cast<int>(x.size()) > degree && degree >= 0,
          ErrorKind::kInvalidArgument, "polyfit needs more points than the degree");
  Eigen::MatrixXd a(x.size(), degree + 1);
  Eigen::VectorXd b(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = 1.0;
    for (int k = 0; k <= degree; ++k, v *= x[i]) a(i, k) = v;
    b(i) = y[i];
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return std::vector<double>(c.data(), c.data() + c.size());
}

double bd_rate(const RdCurve& a_in, const RdCurve& b_in) {
  RdCurve a = a_in, b = b_in;
  a.normalize();
  b.normalize();
  const auto [a_lo, a_hi] = quality_range(a);
  const auto [b_lo, b_hi] = quality_range(b);
  const double lo = std::max(a_lo, b_lo), hi = std::min(a_hi, b_hi);
  if (!(hi > lo)) {
    std::ostringstream os;
    os << "quality ranges do not overlap: " << a.label << " [" << a_lo << ", " << a_hi << "], "
       << b.label << " [" << b_lo << ", " << b_hi << "]";
    fail(ErrorKind::kInvalidArgument, os.str());
  }
  const double c = 0.5 * (lo + hi);
  const double avg = (integrate(fit_log_rate(a, c), lo - c, hi - c) -
                      integrate(fit_log_rate(b, c), lo - c, hi - c)) /
                     (hi - lo);
  return (std::exp(avg) - 1.0) * 100.0;
}

}  // namespace rasc
