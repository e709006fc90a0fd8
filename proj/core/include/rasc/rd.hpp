#pragma once

#include <span>
#include <string>
#include <vector>

#include "rasc/wav.hpp"

namespace rasc {

inline constexpr double kSnrCapDb = 120.0;

struct RdPoint {
  double kbps = 0.0;
  double l_t = 0.0;
  double l_f = 0.0;
  double snr_db = 0.0;
  double mel_distance = 0.0;
  double quality = 0.0;  // axis used for BD computations (SNR unless replaced)
};

struct RdCurve {
  std::string label;
  std::vector<RdPoint> points;

  // Sorts by kbps and checks kbps is strictly increasing with >= 2 points.
  void normalize();
};

// 10 log10(|x|^2 / |x - x_hat|^2) over the common prefix, capped at 120 dB.
double snr_db(std::span<const float> x, std::span<const float> x_hat);

double kbps(std::size_t payload_bits, double seconds);

// Field-wise arithmetic mean.
RdPoint mean_point(std::span<const RdPoint> points);

// Average rate difference of `a` relative to `b` at equal quality, in percent.
// log(rate) is fit as a polynomial of degree min(3, n - 1) in quality and
// integrated over the overlapping quality interval. Negative means `a`
// needs fewer bits.
double bd_rate(const RdCurve& a, const RdCurve& b);

// Least-squares polynomial coefficients, lowest order first.
std::vector<double> polyfit(std::span<const double> x, std::span<const double> y, int degree);

}  // namespace rasc
