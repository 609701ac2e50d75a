#pragma once

// Alternating min-max pilot search. Pilots take turns; each turn scans the
// pilot's ACF/MCF suppression windows for the worst peaks, descends their
// gradient (single max peak, or a weighted stack of the top peaks), then
// renormalizes to unit TD energy. The round converges when no pilot moved
// farther than epsilon in preimage space over a full pass.

#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "correlation.hpp"
#include "rng.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace ztpilot {

enum class DescentMethod { MaxPeak, WeightedPeaks };
enum class StepStrategy { ShrinkOnWorse, Schedule, CostProportional };

struct StepParams {
  double h0 = 0.5;             // initial step size
  double shrink_divisor = 2.0; // ShrinkOnWorse: h /= a on a worse step
  double schedule_tau = 100.0; // Schedule: h = h0 / (1 + iter/tau)
  double cost_coeff = 1.0;     // CostProportional: h = clamp(c * F, h_min, h_max)
  double h_min = 1e-7;
  double h_max = 1.0;

  void validate() const {
    if (h0 <= 0.0) throw std::invalid_argument("h0 must be positive");
    if (shrink_divisor <= 1.0) throw std::invalid_argument("shrink divisor must exceed 1");
    if (schedule_tau <= 0.0) throw std::invalid_argument("schedule_tau must be positive");
    if (cost_coeff <= 0.0) throw std::invalid_argument("cost_coeff must be positive");
    if (h_min <= 0.0 || h_max < h_min) throw std::invalid_argument("need 0 < h_min <= h_max");
  }
};

struct OptimizerConfig {
  int n_pilots = 4;
  DescentMethod method = DescentMethod::MaxPeak;
  int n_peaks = 1;
  double alpha_acf = 1.0;  // component weight for ACF peaks
  double alpha_mcf = 1.0;  // component weight for MCF peaks
  std::vector<double> beta_weights;  // per-rank weights; empty = 1/k
  double learn_rate = 1.0;           // gradient averaging mix; 1 = no averaging
  StepStrategy step_strategy = StepStrategy::ShrinkOnWorse;
  StepParams step;
  double epsilon = 1e-6;
  long max_iters = 20000;
  std::uint64_t seed = 1;

  double beta(int rank) const {
    if (beta_weights.empty()) return 1.0 / static_cast<double>(rank);
    return beta_weights[static_cast<size_t>(rank - 1)];
  }

  double alpha(int component) const {
    return component == kAcfComponent ? alpha_acf : alpha_mcf;
  }

  void validate() const {
    if (n_pilots < 0) throw std::invalid_argument("n_pilots must be non-negative");
    if (n_peaks < 1) throw std::invalid_argument("n_peaks must be at least 1");
    if (alpha_acf < 0.0 || alpha_mcf < 0.0)
      throw std::invalid_argument("alpha weights must be non-negative");
    if (!beta_weights.empty()) {
      if (static_cast<int>(beta_weights.size()) < n_peaks)
        throw std::invalid_argument("beta_weights must cover n_peaks ranks");
      for (size_t i = 0; i < beta_weights.size(); ++i) {
        if (beta_weights[i] < 0.0)
          throw std::invalid_argument("beta weights must be non-negative");
        if (i > 0 && beta_weights[i] > beta_weights[i - 1])
          throw std::invalid_argument("beta weights must be non-increasing in rank");
      }
    }
    if (learn_rate < 0.0 || learn_rate > 1.0)
      throw std::invalid_argument("learn_rate must be in [0, 1]");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
    step.validate();
  }
};

struct PilotSet {
  std::vector<cvec> preimages;
  std::vector<cvec> fd_pilots;  // V0 x
  std::vector<cvec> td_pilots;  // A x, unit energy
  std::uint64_t seed = 0;
  long iterations = 0;
  bool converged = false;

  std::size_t size() const { return preimages.size(); }

  void refresh_pilot(const ZeroTailSubspace& sub, std::size_t p) {
    fd_pilots[p] = sub.to_frequency_domain(preimages[p]);
    td_pilots[p] = sub.to_time_domain(preimages[p]);
  }

  void refresh(const ZeroTailSubspace& sub) {
    fd_pilots.resize(preimages.size());
    td_pilots.resize(preimages.size());
    for (std::size_t p = 0; p < preimages.size(); ++p) refresh_pilot(sub, p);
  }
};

struct TraceRecord {
  long iteration = 0;
  int pilot = 0;
  double worst_peak = 0.0;     // over the whole set, after this step
  double worst_peak_db = 0.0;
  double step_size = 0.0;
  double wall_ms = 0.0;
  double papr_db = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  bool has_papr = false;
};

// i.i.d. standard complex Gaussian preimages, normalized to unit TD energy.
inline PilotSet init_pilots(const OptimizerConfig& cfg, const ZeroTailSubspace& sub) {
  cfg.validate();
  PilotSet set;
  set.seed = cfg.seed;
  SeededRng rng(cfg.seed);
  const int dim = sub.dims().preimage_dim();
  for (int p = 0; p < cfg.n_pilots; ++p) {
    cvec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = rng.complex_gaussian();
    const double norm = sub.to_time_domain(x).norm();
    if (norm > 0.0) x /= norm;
    set.preimages.push_back(std::move(x));
  }
  set.refresh(sub);
  return set;
}

// g^(n) = learn_rate * g + (1 - learn_rate) * g^(n-1)
inline crow apply_gradient_averaging(const crow& current, const crow& previous,
                                     double learn_rate) {
  if (current.size() != previous.size())
    throw DimensionMismatch("gradient averaging: length mismatch");
  if (learn_rate < 0.0 || learn_rate > 1.0)
    throw std::invalid_argument("learn_rate must be in [0, 1]");
  return learn_rate * current + (1.0 - learn_rate) * previous;
}

struct StepSizeState {
  double h_prev = 0.0;
  long iter = 0;
  double f_now = 0.0;
  double f_prev = 0.0;
};

inline double next_step_size(StepStrategy strategy, const StepSizeState& st,
                             const StepParams& p) {
  if (st.h_prev <= 0.0) throw std::invalid_argument("h_prev must be positive");
  switch (strategy) {
    case StepStrategy::ShrinkOnWorse:
      return st.f_now > st.f_prev ? st.h_prev / p.shrink_divisor : st.h_prev;
    case StepStrategy::Schedule:
      return p.h0 / (1.0 + static_cast<double>(st.iter) / p.schedule_tau);
    case StepStrategy::CostProportional:
      return std::clamp(p.cost_coeff * st.f_now, p.h_min, p.h_max);
  }
  return st.h_prev;
}

// Per-pilot persistent optimizer state (step sizes, averaged gradients).
struct DescentState {
  std::vector<double> h;
  std::vector<crow> grad_avg;  // size 0 until the pilot's first step
  long iteration = 0;

  static DescentState make(const OptimizerConfig& cfg) {
    DescentState st;
    st.h.assign(static_cast<size_t>(cfg.n_pilots), cfg.step.h0);
    st.grad_avg.resize(static_cast<size_t>(cfg.n_pilots));
    return st;
  }
};

struct StepRecord {
  int pilot = -1;
  bool applied = false;   // false when the suppression window is empty
  bool accepted = false;  // false when ShrinkOnWorse rolled the step back
  int component = 0;      // targeted top peak
  int lag = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;  // candidate objective, pre-rollback
  double h_used = 0.0;
};

namespace detail {

inline double method_objective(const OptimizerConfig& cfg, const std::vector<PeakEntry>& peaks) {
  if (peaks.empty()) return 0.0;
  if (cfg.method == DescentMethod::MaxPeak) return peaks[0].value;
  double acc = 0.0;
  for (size_t k = 0; k < peaks.size(); ++k)
    acc += cfg.alpha(peaks[k].component) * cfg.beta(static_cast<int>(k) + 1) * peaks[k].value;
  return acc;
}

// Map a peak's MCF component id back to the interfering pilot's set index.
inline std::size_t component_to_pilot(int component, std::size_t pilot_index) {
  const int other = component - kAcfComponent - 1;  // position among the others
  return static_cast<std::size_t>(other) < pilot_index ? static_cast<std::size_t>(other)
                                                       : static_cast<std::size_t>(other) + 1;
}

// Re-evaluate the cost of one scanned peak entry on the current TD pilots.
inline double entry_cost(const PilotSet& set, std::size_t p, const PeakEntry& entry) {
  const cvec& u = set.td_pilots[p];
  const double energy = u.squaredNorm();
  const cvec& v = entry.component == kAcfComponent
                      ? u
                      : set.td_pilots[component_to_pilot(entry.component, p)];
  return std::norm(cyclic_dot(u, v, entry.lag)) / (energy * energy);
}

// The targeted cost the step-size rule compares: the same peak entries,
// re-evaluated (with their weights under WeightedPeaks).
inline double targeted_cost(const OptimizerConfig& cfg, const PilotSet& set, std::size_t p,
                            const std::vector<PeakEntry>& peaks) {
  if (peaks.empty()) return 0.0;
  if (cfg.method == DescentMethod::MaxPeak) return entry_cost(set, p, peaks[0]);
  double acc = 0.0;
  for (size_t k = 0; k < peaks.size(); ++k)
    acc += cfg.alpha(peaks[k].component) * cfg.beta(static_cast<int>(k) + 1) *
           entry_cost(set, p, peaks[k]);
  return acc;
}

}  // namespace detail

// One descent step for one pilot: scan peaks, assemble the (weighted)
// gradient, update against it, renormalize, and apply the step-size policy.
// ShrinkOnWorse restores the previous preimage when the objective rose.
inline StepRecord descent_step(const ZeroTailSubspace& sub, PilotSet& set, std::size_t p,
                               const LagWindow& window, const OptimizerConfig& cfg,
                               DescentState& state) {
  StepRecord rec;
  rec.pilot = static_cast<int>(p);
  const int n_peaks = cfg.method == DescentMethod::MaxPeak ? 1 : cfg.n_peaks;
  const auto peaks = detail::peak_scan_td(set.td_pilots, p, window, n_peaks);
  if (peaks.empty()) return rec;
  rec.applied = true;
  rec.component = peaks[0].component;
  rec.lag = peaks[0].lag;
  rec.objective_before = detail::targeted_cost(cfg, set, p, peaks);

  crow grad;
  for (size_t k = 0; k < peaks.size(); ++k) {
    const auto& peak = peaks[k];
    crow gk;
    if (peak.component == kAcfComponent) {
      gk = acf_gradient(sub, set.preimages[p], peak.lag);
    } else {
      const std::size_t j = detail::component_to_pilot(peak.component, p);
      gk = mcf_gradient(sub, set.preimages[p], std::span<const cvec>(&set.preimages[j], 1),
                        peak.lag);
    }
    const double weight = cfg.method == DescentMethod::MaxPeak
                              ? 1.0
                              : cfg.alpha(peak.component) * cfg.beta(static_cast<int>(k) + 1);
    if (k == 0)
      grad = weight * gk;
    else
      grad += weight * gk;
  }

  const crow avg_snapshot = state.grad_avg[p];
  if (state.grad_avg[p].size() == 0)
    state.grad_avg[p] = grad;  // first step seeds the running average
  else
    state.grad_avg[p] = apply_gradient_averaging(grad, state.grad_avg[p], cfg.learn_rate);

  double h = state.h[p];
  switch (cfg.step_strategy) {
    case StepStrategy::ShrinkOnWorse:
      break;  // h shrinks only on rejected steps, below
    case StepStrategy::Schedule:
      h = next_step_size(cfg.step_strategy, {state.h[p], state.iteration, 0.0, 0.0}, cfg.step);
      break;
    case StepStrategy::CostProportional:
      h = next_step_size(cfg.step_strategy, {state.h[p], state.iteration, rec.objective_before, 0.0},
                         cfg.step);
      break;
  }
  rec.h_used = h;

  const cvec x_old = set.preimages[p];
  cvec x_new = x_old - h * state.grad_avg[p].adjoint();
  const double norm = sub.to_time_domain(x_new).norm();
  if (norm > 0.0) x_new /= norm;
  set.preimages[p] = std::move(x_new);
  set.refresh_pilot(sub, p);

  // The step descends the scanned peaks, so the worse/better comparison
  // re-evaluates those same (component, lag) entries on the updated pilot.
  rec.objective_after = detail::targeted_cost(cfg, set, p, peaks);

  if (cfg.step_strategy == StepStrategy::ShrinkOnWorse &&
      rec.objective_after > rec.objective_before) {
    set.preimages[p] = x_old;
    set.refresh_pilot(sub, p);
    state.grad_avg[p] = avg_snapshot;
    state.h[p] = h / cfg.step.shrink_divisor;
    rec.accepted = false;
  } else {
    state.h[p] = h;
    rec.accepted = true;
  }
  return rec;
}

// Single-max-peak descent step.
inline StepRecord descent_step_maxpeak(const ZeroTailSubspace& sub, PilotSet& set, std::size_t p,
                                       const LagWindow& window, OptimizerConfig cfg,
                                       DescentState& state) {
  cfg.method = DescentMethod::MaxPeak;
  return descent_step(sub, set, p, window, cfg, state);
}

// Lagrange-like weighted-peaks step over the top n_peaks.
inline StepRecord descent_step_weighted(const ZeroTailSubspace& sub, PilotSet& set, std::size_t p,
                                        const LagWindow& window, OptimizerConfig cfg,
                                        DescentState& state) {
  cfg.method = DescentMethod::WeightedPeaks;
  return descent_step(sub, set, p, window, cfg, state);
}

// Worst single peak across every pilot's suppression sets (the min-max
// objective the trace reports).
inline double worst_peak_value(std::span<const cvec> tds, const LagWindow& window) {
  double worst = 0.0;
  for (std::size_t p = 0; p < tds.size(); ++p) {
    const auto peaks = detail::peak_scan_td(tds, p, window, 1);
    if (!peaks.empty() && peaks[0].value > worst) worst = peaks[0].value;
  }
  return worst;
}

struct SynthesisResult {
  PilotSet set;
  ConvergenceTrace trace;
  double initial_worst_peak = 0.0;
  double final_worst_peak = 0.0;
  bool converged = false;
  long iterations = 0;
};

// Called after each pilot update; lets the PAPR stage splice extra passes in.
using IterationHook = std::function<void(std::size_t pilot, PilotSet&, TraceRecord&)>;

// Round-robin pilot search with per-round convergence on the max preimage
// displacement. Non-convergence is not an error: the best-so-far set is
// returned with converged = false.
inline SynthesisResult synthesize(const OptimizerConfig& cfg, const LagWindow& window,
                                  const ZeroTailSubspace& sub, const IterationHook& hook = {}) {
  cfg.validate();
  window.validate();
  if (window.outer_halfwidth() >= sub.dims().n_fft)
    throw std::invalid_argument("t_max/2 must be smaller than n_fft");

  SynthesisResult res;
  res.set = init_pilots(cfg, sub);
  const std::size_t n = res.set.size();
  const auto t0 = std::chrono::steady_clock::now();

  res.initial_worst_peak = worst_peak_value(res.set.td_pilots, window);
  double best_worst = res.initial_worst_peak;
  std::vector<cvec> best_preimages = res.set.preimages;

  if (n == 0 || cfg.max_iters == 0) {
    res.final_worst_peak = res.initial_worst_peak;
    res.converged = n == 0;
    res.set.converged = res.converged;
    return res;
  }

  DescentState state = DescentState::make(cfg);
  std::vector<cvec> round_start = res.set.preimages;

  for (long iter = 0; iter < cfg.max_iters; ++iter) {
    const std::size_t p = static_cast<std::size_t>(iter) % n;
    state.iteration = iter;
    const StepRecord step = descent_step(sub, res.set, p, window, cfg, state);

    TraceRecord tr;
    tr.iteration = iter;
    tr.pilot = static_cast<int>(p);
    tr.step_size = step.h_used;
    if (hook) hook(p, res.set, tr);

    const double worst = worst_peak_value(res.set.td_pilots, window);
    tr.worst_peak = worst;
    tr.worst_peak_db = power_db(worst);
    tr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count();
    res.trace.records.push_back(tr);

    if (worst < best_worst) {
      best_worst = worst;
      best_preimages = res.set.preimages;
    }

    if (p == n - 1) {
#ifndef NDEBUG
      for (std::size_t q = 0; q < n; ++q) {
        assert(std::abs(res.set.td_pilots[q].norm() - 1.0) <= 1e-10);
        assert(res.set.td_pilots[q].tail(sub.dims().t_zero).cwiseAbs().maxCoeff() <=
               1e-9 * res.set.td_pilots[q].cwiseAbs().maxCoeff());
      }
#endif
      double disp = 0.0;
      for (std::size_t q = 0; q < n; ++q)
        disp = std::max(disp, (res.set.preimages[q] - round_start[q]).norm());
      round_start = res.set.preimages;
      if (disp < cfg.epsilon) {
        res.converged = true;
        break;
      }
    }
  }

  res.iterations = static_cast<long>(res.trace.records.size());
  if (!res.converged) {
    const double current = worst_peak_value(res.set.td_pilots, window);
    if (best_worst < current) {
      res.set.preimages = best_preimages;
      res.set.refresh(sub);
    }
  }
  res.final_worst_peak = worst_peak_value(res.set.td_pilots, window);
  res.set.iterations = res.iterations;
  res.set.converged = res.converged;
  return res;
}

}  // namespace ztpilot
