#pragma once

// Low-PAPR constraint: the F3 cost (peak-to-average power of the TD pilot)
// and the gradient reduction that attacks the largest TD magnitude peaks and
// maps the step back to the preimage space through pinv(A). The zero tail is
// structural, so the ratio is taken over the n_fft - t_zero live samples; a
// full-vector figure is reported alongside.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "optimizer.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace ztpilot {

struct PaprConfig {
  int n_papr_reductions = 0;   // outer passes per optimizer iteration
  int n_peaks_td = 4;          // TD peaks attacked per pass
  double h_step_papr = 5e-3;
  double magnitude_floor = 0.0;  // absolute threshold; 0 selects the adaptive floor
  double floor_scale = 1.5;      // adaptive floor = scale * mean live |y_td|

  void validate() const {
    if (n_papr_reductions < 0)
      throw std::invalid_argument("n_papr_reductions must be non-negative");
    if (n_peaks_td < 1) throw std::invalid_argument("n_peaks_td must be at least 1");
    if (h_step_papr <= 0.0) throw std::invalid_argument("h_step_papr must be positive");
    if (magnitude_floor < 0.0) throw std::invalid_argument("magnitude_floor must not be negative");
    if (magnitude_floor == 0.0 && floor_scale <= 0.0)
      throw std::invalid_argument("effective magnitude floor must be positive");
  }
};

namespace detail {

inline double papr_of_range(const cvec& td, Eigen::Index count) {
  double peak = 0.0, sum = 0.0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const double pw = std::norm(td(k));
    peak = std::max(peak, pw);
    sum += pw;
  }
  if (sum <= 0.0) throw ZeroInput("papr_cost: zero pilot");
  return peak / (sum / static_cast<double>(count));
}

}  // namespace detail

// F3(x) = max |A x|^2 / mean |A x|^2 over the live (non-tail) samples; >= 1.
inline double papr_cost(const ZeroTailSubspace& sub, const cvec& x) {
  const cvec td = sub.to_time_domain(x);
  return detail::papr_of_range(td, sub.dims().n_fft - sub.dims().t_zero);
}

// Same ratio over all n_fft samples (diluted by the structural zero tail).
inline double papr_cost_full(const ZeroTailSubspace& sub, const cvec& x) {
  const cvec td = sub.to_time_domain(x);
  return detail::papr_of_range(td, sub.dims().n_fft);
}

// Sparse TD gradient: the complex samples at the n_peaks_td largest
// magnitudes exceeding the floor, zero elsewhere. Stepping against it shrinks
// each selected peak along its own phase (steepest descent of |y_k|^2).
inline cvec papr_td_gradient(const cvec& td, int t_zero, const PaprConfig& cfg) {
  const Eigen::Index live = td.size() - t_zero;
  double floor = cfg.magnitude_floor;
  if (floor <= 0.0) {
    double mean_mag = 0.0;
    for (Eigen::Index k = 0; k < live; ++k) mean_mag += std::abs(td(k));
    mean_mag /= static_cast<double>(live);
    floor = cfg.floor_scale * mean_mag;
  }

  std::vector<Eigen::Index> above;
  for (Eigen::Index k = 0; k < td.size(); ++k)
    if (std::abs(td(k)) > floor) above.push_back(k);
  const std::size_t keep = std::min<std::size_t>(above.size(), static_cast<size_t>(cfg.n_peaks_td));
  std::partial_sort(above.begin(), above.begin() + static_cast<long>(keep), above.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double ma = std::abs(td(a)), mb = std::abs(td(b));
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });

  cvec g = cvec::Zero(td.size());
  for (std::size_t i = 0; i < keep; ++i) g(above[i]) = td(above[i]);
  return g;
}

// One reduction pass: TD gradient at the worst peaks, mapped to the
// preimage space via pinv(A), one step, renormalize. A pilot with no sample
// above the floor is returned unchanged.
inline cvec papr_reduction_pass(const ZeroTailSubspace& sub, const cvec& x,
                                const PaprConfig& cfg) {
  cfg.validate();
  const cvec td = sub.to_time_domain(x);
  if (td.squaredNorm() <= 0.0) throw ZeroInput("papr_reduction_pass: zero pilot");
  const cvec g_td = papr_td_gradient(td, sub.dims().t_zero, cfg);
  if (g_td.isZero(0.0)) return x;
  const cvec g_fd = sub.pinv_apply(g_td);
  cvec x_new = x - cfg.h_step_papr * g_fd;
  const double norm = sub.to_time_domain(x_new).norm();
  if (norm > 0.0) x_new /= norm;
  return x_new;
}

// synthesize() with n_papr_reductions PAPR passes spliced in after each
// correlation-driven pilot update. With zero passes the trajectory is the
// plain synthesize run.
inline SynthesisResult interleaved_synthesis(const OptimizerConfig& ocfg, const PaprConfig& pcfg,
                                             const LagWindow& window,
                                             const ZeroTailSubspace& sub) {
  pcfg.validate();
  if (pcfg.n_papr_reductions == 0) return synthesize(ocfg, window, sub);
  const IterationHook hook = [&](std::size_t p, PilotSet& set, TraceRecord& rec) {
    for (int i = 0; i < pcfg.n_papr_reductions; ++i)
      set.preimages[p] = papr_reduction_pass(sub, set.preimages[p], pcfg);
    set.refresh_pilot(sub, p);
    rec.papr_db = power_db(papr_cost(sub, set.preimages[p]));
  };
  SynthesisResult res = synthesize(ocfg, window, sub, hook);
  res.trace.has_papr = true;
  return res;
}

}  // namespace ztpilot
