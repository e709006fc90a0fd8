#pragma once

#include <cstdint>
#include <vector>

namespace rasc::testing {

// out[c][t] by direct summation of the weighted average, without any
// running-max rescaling. decay is per channel.
std::vector<double> brute_force_wkv(const std::vector<double>& k, const std::vector<double>& v,
                                    const std::vector<double>& decay,
                                    const std::vector<double>& bonus, int channels, int steps);

// Standard normal CDF by composite Simpson integration of the density.
double simpson_normal_cdf(double x);

// P(n - 1/2 < N(0, sigma^2) <= n + 1/2) from the Simpson oracle.
double simpson_gaussian_mass(double n, double sigma);

struct CurvePoint {
  double rate;
  double quality;
};

// BD-rate with piecewise-linear log-rate interpolation and trapezoidal
// integration on a fine grid over the overlapping quality interval.
double trapezoid_bd_rate(std::vector<CurvePoint> a, std::vector<CurvePoint> b);

}  // namespace rasc::testing
