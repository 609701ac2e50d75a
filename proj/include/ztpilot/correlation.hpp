#pragma once

// Cyclic correlation profiles, the ACF/MCF cost components F1 and F2, and
// their analytic gradients. Correlations are always cyclic:
//
//   R_{a,b}(n) = sum_k conj(a[(k+n) mod N]) b[k]
//
// so R at lag 0 is the plain inner product <a, b>. Costs normalize squared
// correlation magnitude by squared energy E(x) = ||A x||^2; the optimizer
// keeps pilots at unit TD energy so E = 1 at every observable point.
//
// Gradients follow the Wirtinger convention: the returned row vector is
// dF/dx with conj(x) held constant, so for the real-valued costs the update
// x <- x - h * g^H is a descent direction.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fft.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace ztpilot {

struct LagWindow {
  int t_min = 0;  // inner exclusion zone source, samples
  int t_max = 0;  // outer window source, samples

  void validate() const {
    if (t_min < 0) throw std::invalid_argument("t_min must be non-negative");
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    if (t_min >= t_max) throw std::invalid_argument("t_min must be smaller than t_max");
  }

  int inner_halfwidth() const { return t_min / 2; }
  int outer_halfwidth() const { return t_max / 2; }

  // ACF suppression set: [-t_max/2, t_max/2] minus [-t_min/2, t_min/2].
  bool acf_contains(int n) const {
    return std::abs(n) <= outer_halfwidth() && std::abs(n) > inner_halfwidth();
  }

  // MCF suppression set: [-t_max/2, t_max/2] including lag 0.
  bool mcf_contains(int n) const { return std::abs(n) <= outer_halfwidth(); }

  std::vector<int> acf_lags() const {
    std::vector<int> lags;
    for (int n = -outer_halfwidth(); n <= outer_halfwidth(); ++n)
      if (acf_contains(n)) lags.push_back(n);
    return lags;
  }

  std::vector<int> mcf_lags() const {
    std::vector<int> lags;
    for (int n = -outer_halfwidth(); n <= outer_halfwidth(); ++n) lags.push_back(n);
    return lags;
  }

  bool operator==(const LagWindow&) const = default;
};

// Negative lags map to cyclic index n_fft + n.
inline Eigen::Index lag_to_index(int lag, Eigen::Index n) {
  Eigen::Index idx = static_cast<Eigen::Index>(lag) % n;
  return idx < 0 ? idx + n : idx;
}

// out[k] = v[(k + lag) mod N]
inline cvec cyclic_shift(const cvec& v, int lag) {
  const Eigen::Index n = v.size();
  const Eigen::Index s = lag_to_index(lag, n);
  cvec out(n);
  out.head(n - s) = v.segment(s, n - s);
  out.tail(s) = v.head(s);
  return out;
}

// Single-lag correlation sum_k conj(a[(k+lag) mod N]) b[k].
inline cxd cyclic_dot(const cvec& a, const cvec& b, int lag) {
  const Eigen::Index n = a.size();
  if (b.size() != n) throw DimensionMismatch("cyclic_dot: length mismatch");
  const Eigen::Index s = lag_to_index(lag, n);
  cxd acc = a.segment(s, n - s).dot(b.head(n - s));  // Eigen dot conjugates the left side
  acc += a.head(s).dot(b.tail(s));
  return acc;
}

// O(N^2) reference path.
inline cvec cyclic_xcorr_direct(const cvec& a, const cvec& b) {
  const Eigen::Index n = a.size();
  if (b.size() != n) throw DimensionMismatch("cyclic_xcorr: length mismatch");
  cvec r(n);
  for (Eigen::Index lag = 0; lag < n; ++lag) r(lag) = cyclic_dot(a, b, static_cast<int>(lag));
  return r;
}

// Full cyclic cross-correlation, r[n] = R_{a,b}(n) for n = 0..N-1 (negative
// lags live at index N+n). FFT path for lengths above 64.
inline cvec cyclic_xcorr(const cvec& a, const cvec& b) {
  const Eigen::Index n = a.size();
  if (b.size() != n) throw DimensionMismatch("cyclic_xcorr: length mismatch");
  if (n <= 64) return cyclic_xcorr_direct(a, b);
  const cvec q = ifft_raw(fft_raw(a).conjugate().cwiseProduct(fft_raw(b)));
  // q[m] = sum_k conj(a[k]) b[k+m]  =>  r[n] = q[(N-n) mod N]
  cvec r(n);
  r(0) = q(0);
  for (Eigen::Index lag = 1; lag < n; ++lag) r(lag) = q(n - lag);
  return r;
}

// --- cost components ---

// F1(x, n) = |R_xx(n)|^2 / R_xx(0)^2 for the TD image u = A x.
inline double acf_cost(const ZeroTailSubspace& sub, const cvec& x, int lag) {
  const cvec u = sub.to_time_domain(x);
  const double energy = u.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("acf_cost: zero pilot");
  return std::norm(cyclic_dot(u, u, lag)) / (energy * energy);
}

inline double acf_cost(const ZeroTailSubspace& sub, const cvec& x, int lag,
                       const LagWindow& window) {
  if (!window.acf_contains(lag))
    throw LagOutsideWindow("lag " + std::to_string(lag) + " outside ACF suppression set");
  return acf_cost(sub, x, lag);
}

// F2(x, n) = sum_i |R_{x,x_i}(n)|^2 / E(x)^2 over the interfering preimages.
inline double mcf_cost(const ZeroTailSubspace& sub, const cvec& x,
                       std::span<const cvec> others, int lag) {
  if (others.empty()) return 0.0;
  const cvec u = sub.to_time_domain(x);
  const double energy = u.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("mcf_cost: zero pilot");
  double acc = 0.0;
  for (const cvec& xi : others) acc += std::norm(cyclic_dot(u, sub.to_time_domain(xi), lag));
  return acc / (energy * energy);
}

inline double mcf_cost(const ZeroTailSubspace& sub, const cvec& x,
                       std::span<const cvec> others, int lag, const LagWindow& window) {
  if (!window.mcf_contains(lag))
    throw LagOutsideWindow("lag " + std::to_string(lag) + " outside MCF suppression set");
  return mcf_cost(sub, x, others, lag);
}

// --- analytic gradients ---

// dF1/dx. With u = A x, R = R_uu(n), E = ||u||^2 and s± the cyclic shifts of
// u by ±n, the row vector is w^H A for
//   w = (R s+ + conj(R) s-) / E^2 - (2 |R|^2 / E^3) u.
inline crow acf_gradient(const ZeroTailSubspace& sub, const cvec& x, int lag) {
  const cvec u = sub.to_time_domain(x);
  const double energy = u.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("acf_gradient: zero pilot");
  const cxd r = cyclic_dot(u, u, lag);
  const double e2 = energy * energy;
  cvec w = (r * cyclic_shift(u, lag) + std::conj(r) * cyclic_shift(u, -lag)) / e2;
  w -= (2.0 * std::norm(r) / (e2 * energy)) * u;
  return sub.adjoint_apply(w).adjoint();
}

inline crow acf_gradient(const ZeroTailSubspace& sub, const cvec& x, int lag,
                         const LagWindow& window) {
  if (!window.acf_contains(lag))
    throw LagOutsideWindow("lag " + std::to_string(lag) + " outside ACF suppression set");
  return acf_gradient(sub, x, lag);
}

// dF2/dx, summed over the interfering preimages. Per other i with
// u_i = A x_i and R_i = R_{u,u_i}(n):
//   w_i = conj(R_i) shift(u_i, -n) / E^2 - (2 |R_i|^2 / E^3) u.
inline crow mcf_gradient(const ZeroTailSubspace& sub, const cvec& x,
                         std::span<const cvec> others, int lag) {
  const int dim = sub.dims().preimage_dim();
  if (others.empty()) return crow::Zero(dim);
  const cvec u = sub.to_time_domain(x);
  const double energy = u.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("mcf_gradient: zero pilot");
  const double e2 = energy * energy;
  cvec w = cvec::Zero(u.size());
  double total_sq = 0.0;
  for (const cvec& xi : others) {
    const cvec ui = sub.to_time_domain(xi);
    const cxd ri = cyclic_dot(u, ui, lag);
    w += std::conj(ri) * cyclic_shift(ui, -lag);
    total_sq += std::norm(ri);
  }
  w /= e2;
  w -= (2.0 * total_sq / (e2 * energy)) * u;
  return sub.adjoint_apply(w).adjoint();
}

inline crow mcf_gradient(const ZeroTailSubspace& sub, const cvec& x,
                         std::span<const cvec> others, int lag, const LagWindow& window) {
  if (!window.mcf_contains(lag))
    throw LagOutsideWindow("lag " + std::to_string(lag) + " outside MCF suppression set");
  return mcf_gradient(sub, x, others, lag);
}

// --- peak scanning ---

// Component ids: 1 is the pilot's own ACF; MCF components against the other
// pilots get 2, 3, ... in set order (skipping the pilot itself).
inline constexpr int kAcfComponent = 1;

struct PeakEntry {
  int component = 0;
  int lag = 0;
  double value = 0.0;
};

namespace detail {

inline bool peak_order(const PeakEntry& a, const PeakEntry& b) {
  if (a.value != b.value) return a.value > b.value;
  if (std::abs(a.lag) != std::abs(b.lag)) return std::abs(a.lag) < std::abs(b.lag);
  if (a.component != b.component) return a.component < b.component;
  return a.lag < b.lag;
}

// Scan over precomputed TD pilots; energies are taken from the vectors.
inline std::vector<PeakEntry> peak_scan_td(std::span<const cvec> tds, std::size_t pilot_index,
                                           const LagWindow& window, int n_peaks) {
  window.validate();
  if (n_peaks < 1) throw std::invalid_argument("n_peaks must be at least 1");
  const cvec& u = tds[pilot_index];
  const double energy = u.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("peak_scan: zero pilot");
  const double e2 = energy * energy;
  const Eigen::Index n = u.size();

  std::vector<PeakEntry> entries;
  const cvec acf = cyclic_xcorr(u, u);
  for (int lag : window.acf_lags())
    entries.push_back({kAcfComponent, lag, std::norm(acf(lag_to_index(lag, n))) / e2});

  int component = kAcfComponent + 1;
  for (std::size_t j = 0; j < tds.size(); ++j) {
    if (j == pilot_index) continue;
    const cvec mcf = cyclic_xcorr(u, tds[j]);
    for (int lag : window.mcf_lags())
      entries.push_back({component, lag, std::norm(mcf(lag_to_index(lag, n))) / e2});
    ++component;
  }

  std::sort(entries.begin(), entries.end(), peak_order);
  if (static_cast<int>(entries.size()) > n_peaks) entries.resize(static_cast<size_t>(n_peaks));
  return entries;
}

}  // namespace detail

// The n_peaks largest cost values across the pilot's ACF and per-other MCF
// components, each over its own suppression lag set. Ties break toward the
// smaller |lag|, then the smaller component id. Returns fewer entries when
// the window is smaller than n_peaks.
inline std::vector<PeakEntry> peak_scan(const ZeroTailSubspace& sub,
                                        std::span<const cvec> preimages,
                                        std::size_t pilot_index, const LagWindow& window,
                                        int n_peaks) {
  if (pilot_index >= preimages.size())
    throw DimensionMismatch("peak_scan: pilot index out of range");
  std::vector<cvec> tds;
  tds.reserve(preimages.size());
  for (const cvec& x : preimages) tds.push_back(sub.to_time_domain(x));
  return detail::peak_scan_td(tds, pilot_index, window, n_peaks);
}

// --- correlation profiles ---

struct CorrelationProfile {
  std::vector<int> lags;        // -outer .. +outer
  std::vector<double> values;   // normalized squared correlation magnitude
  std::vector<bool> excluded;   // inside the t_min exclusion zone
  int component = kAcfComponent;
  double main_peak = 0.0;       // value at the reference lag 0
  double max_side_peak = 0.0;   // max over the suppression lag set
  int max_side_lag = 0;
};

namespace detail {

inline CorrelationProfile build_profile(const cvec& raw_sq, const LagWindow& window,
                                        double norm, bool exclude_inner, int component) {
  CorrelationProfile p;
  p.component = component;
  const Eigen::Index n = raw_sq.size();
  const int outer = window.outer_halfwidth();
  bool first = true;
  for (int lag = -outer; lag <= outer; ++lag) {
    const double v = raw_sq(lag_to_index(lag, n)).real() / norm;
    const bool inner = exclude_inner && std::abs(lag) <= window.inner_halfwidth();
    p.lags.push_back(lag);
    p.values.push_back(v);
    p.excluded.push_back(inner);
    if (lag == 0 && !exclude_inner) p.main_peak = v;
    if (!inner && (first || v > p.max_side_peak)) {
      p.max_side_peak = v;
      p.max_side_lag = lag;
      first = false;
    }
  }
  return p;
}

inline cvec squared_xcorr(const cvec& a, const cvec& b) {
  cvec r = cyclic_xcorr(a, b);
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = cxd(std::norm(r(i)), 0.0);
  return r;
}

}  // namespace detail

// ACF profile of a TD pilot: values |R(n)|^2 / R(0)^2, main peak exactly 1,
// side peaks over the window minus the inner exclusion zone.
inline CorrelationProfile acf_profile(const cvec& td, const LagWindow& window) {
  window.validate();
  const double energy = td.squaredNorm();
  if (energy <= 0.0) throw ZeroInput("acf_profile: zero pilot");
  auto p = detail::build_profile(detail::squared_xcorr(td, td), window, energy * energy,
                                 /*exclude_inner=*/true, kAcfComponent);
  p.main_peak = 1.0;
  return p;
}

// Pairwise MCF profile: |R_ab(n)|^2 / (E_a E_b) over the full window. The
// main peak is the unit-normalized auto peak the receiver locks to.
inline CorrelationProfile mcf_pair_profile(const cvec& td_a, const cvec& td_b,
                                           const LagWindow& window, int component) {
  window.validate();
  const double ea = td_a.squaredNorm();
  const double eb = td_b.squaredNorm();
  if (ea <= 0.0 || eb <= 0.0) throw ZeroInput("mcf_pair_profile: zero pilot");
  auto p = detail::build_profile(detail::squared_xcorr(td_a, td_b), window, ea * eb,
                                 /*exclude_inner=*/false, component);
  p.main_peak = 1.0;
  return p;
}

// Profile of a pilot against a received mixture, normalized so the lag-0
// sync peak is 1. Side peaks exclude the inner timing-precision zone.
inline CorrelationProfile mixture_profile(const cvec& td_pilot, const cvec& td_mixture,
                                          const LagWindow& window, int component = 0) {
  window.validate();
  if (td_pilot.size() != td_mixture.size())
    throw DimensionMismatch("mixture_profile: length mismatch");
  const cvec raw = detail::squared_xcorr(td_pilot, td_mixture);
  const double main = raw(0).real();
  if (main <= 0.0) throw ZeroInput("mixture_profile: zero sync peak");
  auto p = detail::build_profile(raw, window, main, /*exclude_inner=*/true, component);
  p.main_peak = 1.0;
  return p;
}

}  // namespace ztpilot
