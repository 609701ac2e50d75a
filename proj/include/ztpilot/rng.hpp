#pragma once

// Deterministic random draws built on mt19937_64 raw output only, so results
// are reproducible across standard library implementations (std distributions
// are not pinned by the standard).

#include <cmath>
#include <cstdint>
#include <random>

#include "types.hpp"

namespace ztpilot {

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  // [0, 1) with 53 bits
  double uniform01() { return std::ldexp(static_cast<double>(gen_() >> 11), -53); }

  // uniform integer in [lo, hi]
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform01() * static_cast<double>(hi - lo + 1));
  }

  // standard complex Gaussian CN(0,1): |z|^2 ~ Exp(1), phase uniform
  cxd complex_gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::polar(std::sqrt(-std::log(u1)), 2.0 * kPi * u2);
  }

  cxd unit_phase() { return std::polar(1.0, 2.0 * kPi * uniform01()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ztpilot
