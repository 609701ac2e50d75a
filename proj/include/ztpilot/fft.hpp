#pragma once

// Thin wrapper around Eigen's FFT. The toolkit works in the unitary
// convention (1/sqrt(N) both ways) so that transforms preserve l2 norm.

#include <unsupported/Eigen/FFT>

#include <cmath>

#include "types.hpp"

namespace ztpilot {

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}
}  // namespace detail

// X[f] = sum_k x[k] e^{-2pi i f k / N}  (unnormalized)
inline cvec fft_raw(const cvec& x) {
  cvec out;
  detail::fft_engine().fwd(out, x);
  return out;
}

// x[k] = (1/N) sum_f X[f] e^{+2pi i f k / N}
inline cvec ifft_raw(const cvec& x) {
  cvec out;
  detail::fft_engine().inv(out, x);
  return out;
}

inline cvec unitary_fft(const cvec& x) {
  return fft_raw(x) / std::sqrt(static_cast<double>(x.size()));
}

inline cvec unitary_ifft(const cvec& x) {
  return ifft_raw(x) * std::sqrt(static_cast<double>(x.size()));
}

}  // namespace ztpilot
