#pragma once

// Pilot set measurement: windowed ACF/MCF dB metrics, the worst-case mixture
// correlation, channel-overlap evaluation through a seeded tapped-delay-line
// model, PAPR figures, and the slot-savings / time-conversion arithmetic.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "correlation.hpp"
#include "optimizer.hpp"
#include "papr.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace ztpilot {

struct ChannelTap {
  int delay = 0;  // samples
  cxd gain{1.0, 0.0};
};

struct ChannelModel {
  std::vector<ChannelTap> taps;
  double path_loss_db = 0.0;
  std::uint64_t seed = 0;

  void validate(const LagWindow& window) const {
    if (taps.empty()) throw InvalidChannel("channel needs at least one tap");
    for (const auto& tap : taps) {
      if (tap.delay < 0) throw InvalidChannel("tap delay must be non-negative");
      if (2 * tap.delay >= window.t_max)
        throw InvalidChannel("tap delay " + std::to_string(tap.delay) +
                             " must stay below t_max/2");
    }
  }
};

// Seeded multipath draw: a unit LOS tap at delay 0, then echoes at random
// delays in [1, max_delay] with magnitude stepping down tap_decay_db per tap
// and uniform phase. Gains are normalized to unit total power.
inline ChannelModel make_random_channel(std::uint64_t seed, int n_taps, int max_delay,
                                        double tap_decay_db) {
  if (n_taps < 1) throw InvalidChannel("need at least one tap");
  if (n_taps > 1 && max_delay < 1) throw InvalidChannel("echo taps need max_delay >= 1");
  ChannelModel ch;
  ch.seed = seed;
  SeededRng rng(seed);
  ch.taps.push_back({0, cxd(1.0, 0.0)});
  for (int t = 1; t < n_taps; ++t) {
    const int delay = rng.uniform_int(1, max_delay);
    const double mag = std::pow(10.0, -tap_decay_db * static_cast<double>(t) / 20.0);
    ch.taps.push_back({delay, mag * rng.unit_phase()});
  }
  double power = 0.0;
  for (const auto& tap : ch.taps) power += std::norm(tap.gain);
  const double scale = 1.0 / std::sqrt(power);
  for (auto& tap : ch.taps) tap.gain *= scale;
  return ch;
}

// Cyclic tapped-delay-line convolution plus path-loss scaling.
inline cvec apply_channel(const cvec& td, const ChannelModel& ch) {
  if (ch.taps.empty()) throw InvalidChannel("channel needs at least one tap");
  cvec out = cvec::Zero(td.size());
  for (const auto& tap : ch.taps) out += tap.gain * cyclic_shift(td, -tap.delay);
  return std::pow(10.0, -ch.path_loss_db / 20.0) * out;
}

// 10 log10(main / max side) on the power profile.
inline double main_to_side_db(const CorrelationProfile& profile) {
  bool any_side = false;
  for (bool ex : profile.excluded)
    if (!ex) {
      any_side = true;
      break;
    }
  if (!any_side) throw NoSidePeaks("profile has an empty suppression set");
  const double side = std::max(profile.max_side_peak, 1e-40);
  return 10.0 * std::log10(profile.main_peak / side);
}

// Correlate each pilot against the weighted sum of all pilots (optionally
// with per-link cyclic delays) and report the windowed main-to-side dB.
// Equal unit weights and zero delays reproduce the worst case.
inline std::vector<double> mixture_metric(std::span<const cvec> tds, const LagWindow& window,
                                          std::span<const double> weights,
                                          std::span<const int> delays = {}) {
  if (tds.empty()) return {};
  if (weights.size() != tds.size())
    throw DimensionMismatch("mixture weights: one weight per pilot required");
  if (!delays.empty() && delays.size() != tds.size())
    throw DimensionMismatch("mixture delays: one delay per pilot required");
  cvec mix = cvec::Zero(tds[0].size());
  for (std::size_t i = 0; i < tds.size(); ++i) {
    const int d = delays.empty() ? 0 : delays[i];
    mix += weights[i] * (d == 0 ? tds[i] : cyclic_shift(tds[i], -d));
  }
  std::vector<double> out;
  out.reserve(tds.size());
  for (const cvec& td : tds) out.push_back(main_to_side_db(mixture_profile(td, mix, window)));
  return out;
}

// Pass each pilot through its own channel, sum, and correlate the clean
// pilots against the received signal.
inline std::vector<double> channel_overlap_eval(std::span<const cvec> tds,
                                                std::span<const ChannelModel> channels,
                                                const LagWindow& window) {
  if (channels.size() != tds.size()) throw InvalidChannel("one channel per pilot required");
  for (const auto& ch : channels) ch.validate(window);
  if (tds.empty()) return {};
  cvec rx = cvec::Zero(tds[0].size());
  for (std::size_t i = 0; i < tds.size(); ++i) rx += apply_channel(tds[i], channels[i]);
  std::vector<double> out;
  out.reserve(tds.size());
  for (const cvec& td : tds) out.push_back(main_to_side_db(mixture_profile(td, rx, window)));
  return out;
}

// Slot reduction vs the 3-pairs-per-slot baseline: 100 (1 - 3/n) percent.
inline double slot_savings(int n_pilots) {
  if (n_pilots < 3) throw std::invalid_argument("slot_savings needs n_pilots >= 3");
  return 100.0 * (1.0 - 3.0 / static_cast<double>(n_pilots));
}

// Zero tail left by the baseline scheme occupying a fraction of the band.
inline double baseline_zero_tail_us(int n_sc, double occupied_fraction, double delta_f_hz,
                                    int n_fft) {
  if (occupied_fraction < 0.0 || occupied_fraction > 1.0)
    throw std::invalid_argument("occupied_fraction must lie in [0, 1]");
  if (delta_f_hz <= 0.0 || n_fft <= 0) throw std::invalid_argument("invalid grid parameters");
  return 1e6 * static_cast<double>(n_sc) * (1.0 - occupied_fraction) /
         (delta_f_hz * static_cast<double>(n_fft));
}

struct TimeConversions {
  double precision_ns = 0.0;   // (1 + t_min) / (2 df n_fft)
  double max_offset_us = 0.0;  // t_max / (2 df n_fft)
  double tail_us = 0.0;        // t_zero / (df n_fft)
};

inline TimeConversions time_conversions(int t_min, int t_max, int t_zero, double delta_f_hz,
                                        int n_fft) {
  if (delta_f_hz <= 0.0 || n_fft <= 0) throw std::invalid_argument("invalid grid parameters");
  const double denom = delta_f_hz * static_cast<double>(n_fft);
  TimeConversions tc;
  tc.precision_ns = 1e9 * (1.0 + static_cast<double>(t_min)) / (2.0 * denom);
  tc.max_offset_us = 1e6 * static_cast<double>(t_max) / (2.0 * denom);
  tc.tail_us = 1e6 * static_cast<double>(t_zero) / denom;
  return tc;
}

struct EvalOptions {
  std::vector<double> mixture_weights;  // empty = all ones
  std::vector<int> mixture_delays;      // empty = all zero
  std::vector<ChannelModel> channels;   // empty = skip channel eval
  double sanity_slack_db = 3.1;         // mixture vs best-pair bound
  bool check_sanity = true;
};

struct EvalReport {
  std::vector<double> acf_db;
  std::vector<std::vector<double>> mcf_db;  // pairwise, diagonal NaN
  std::vector<double> mixture_db;
  std::vector<double> channel_db;  // empty unless channels were given
  std::vector<double> papr_db;
  std::vector<double> papr_full_db;
  double worst_acf_db = std::numeric_limits<double>::quiet_NaN();
  double worst_mixture_db = std::numeric_limits<double>::quiet_NaN();
  double mean_mixture_db = std::numeric_limits<double>::quiet_NaN();
  double worst_channel_db = std::numeric_limits<double>::quiet_NaN();
  double worst_papr_db = std::numeric_limits<double>::quiet_NaN();
  double slot_savings_pct = std::numeric_limits<double>::quiet_NaN();
  bool sanity_ok = true;
  std::string sanity_note;
  std::string config_snapshot;  // filled by the caller
};

inline EvalReport evaluate_pilot_set(const ZeroTailSubspace& sub, const PilotSet& set,
                                     const LagWindow& window, const EvalOptions& opt = {}) {
  window.validate();
  EvalReport rep;
  const std::size_t n = set.size();
  if (n == 0) return rep;

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t p = 0; p < n; ++p) {
    try {
      rep.acf_db.push_back(main_to_side_db(acf_profile(set.td_pilots[p], window)));
    } catch (const NoSidePeaks&) {
      rep.acf_db.push_back(nan);
    }
  }

  rep.mcf_db.assign(n, std::vector<double>(n, nan));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      rep.mcf_db[i][j] = main_to_side_db(
          mcf_pair_profile(set.td_pilots[i], set.td_pilots[j], window, kAcfComponent + 1));
    }

  std::vector<double> weights = opt.mixture_weights;
  if (weights.empty()) weights.assign(n, 1.0);
  rep.mixture_db = mixture_metric(set.td_pilots, window, weights, opt.mixture_delays);

  if (!opt.channels.empty())
    rep.channel_db = channel_overlap_eval(set.td_pilots, opt.channels, window);

  for (std::size_t p = 0; p < n; ++p) {
    rep.papr_db.push_back(power_db(papr_cost(sub, set.preimages[p])));
    rep.papr_full_db.push_back(power_db(papr_cost_full(sub, set.preimages[p])));
  }

  auto worst_of = [](const std::vector<double>& v) {
    double w = std::numeric_limits<double>::infinity();
    for (double x : v)
      if (!std::isnan(x)) w = std::min(w, x);
    return std::isinf(w) ? std::numeric_limits<double>::quiet_NaN() : w;
  };
  rep.worst_acf_db = worst_of(rep.acf_db);
  rep.worst_mixture_db = worst_of(rep.mixture_db);
  if (!rep.channel_db.empty()) rep.worst_channel_db = worst_of(rep.channel_db);
  double mean = 0.0;
  for (double x : rep.mixture_db) mean += x;
  rep.mean_mixture_db = mean / static_cast<double>(n);
  double worst_papr = 0.0;
  for (double x : rep.papr_db) worst_papr = std::max(worst_papr, x);
  rep.worst_papr_db = worst_papr;
  if (n >= 3) rep.slot_savings_pct = slot_savings(static_cast<int>(n));

  if (opt.check_sanity && n >= 2) {
    for (std::size_t p = 0; p < n; ++p) {
      double worst_pair = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (j != p) worst_pair = std::min(worst_pair, rep.mcf_db[p][j]);
      if (rep.mixture_db[p] > worst_pair + opt.sanity_slack_db) {
        rep.sanity_ok = false;
        rep.sanity_note = "pilot " + std::to_string(p) + " mixture " +
                          std::to_string(rep.mixture_db[p]) + " dB exceeds worst pair " +
                          std::to_string(worst_pair) + " dB + " +
                          std::to_string(opt.sanity_slack_db) + " dB slack";
        break;
      }
    }
  }
  return rep;
}

}  // namespace ztpilot
