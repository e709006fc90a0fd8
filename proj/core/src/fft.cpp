#include "rasc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "rasc/error.hpp"

namespace rasc::fft {

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// The FFTW planner is not thread-safe; execution of an existing plan is.
const Plans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  Plans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), spec.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, spec.data(), real.data(), flags);
  require(p.forward && p.inverse, ErrorKind::kNumeric, "FFTW planning failed for n=" + std::to_string(n));
  return cache.emplace(n, p).first->second;
}

}  // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  const int n = static_cast<int>(in.size());
  require(out.size() == static_cast<std::size_t>(n / 2 + 1), ErrorKind::kShape, "rfft: output size");
  std::vector<double> buf(in.begin(), in.end());
  fftw_execute_dft_r2c(plans_for(n).forward, buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft_unnormalized(std::span<const std::complex<double>> in, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  require(in.size() == static_cast<std::size_t>(n / 2 + 1), ErrorKind::kShape, "irfft: input size");
  // c2r destroys its input.
  std::vector<std::complex<double>> buf(in.begin(), in.end());
  buf.front().imag(0.0);
  if (n % 2 == 0) buf.back().imag(0.0);
  fftw_execute_dft_c2r(plans_for(n).inverse, reinterpret_cast<fftw_complex*>(buf.data()),
                       out.data());
}

}  // namespace rasc::fft
