// Acceptance suite. Each criterion prints one PASS/FAIL line; run the whole
// binary or a single criterion via its tag ([c1]..[c10], [c12]). The
// full-scale stretch run is hidden behind [.c11] (hours-scale, manual).

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <ztpilot/evaluator.hpp>
#include <ztpilot/papr.hpp>
#include <ztpilot/pilot_file.hpp>

#include "test_helpers.hpp"

using namespace ztpilot;
using ztest::random_cvec;
using ztest::xcorr_naive;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool ok = true;
  ~Criterion() {
    std::printf("[acceptance] C%d %s: %s\n", id, name.c_str(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::printf("  C%d check failed: %s\n", id, what.c_str());
    }
  }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Desk-scale setup shared by criteria 7, 8, 10, 12.
const LagWindow kDeskWindow{2, 32};

OptimizerConfig desk_cfg(int n_pilots) {
  OptimizerConfig cfg;
  cfg.n_pilots = n_pilots;
  cfg.method = DescentMethod::MaxPeak;
  cfg.step_strategy = StepStrategy::ShrinkOnWorse;
  cfg.step.h0 = 0.5;
  cfg.step.shrink_divisor = 2.0;
  cfg.epsilon = 1e-6;
  cfg.max_iters = 5000;
  cfg.seed = 42;
  return cfg;
}

const ZeroTailSubspace& desk_sub() {
  static const auto sub = ZeroTailSubspace::build({256, 200, 80});
  return sub;
}

const SynthesisResult& desk4() {
  static const auto res = synthesize(desk_cfg(4), kDeskWindow, desk_sub());
  return res;
}

double worst_mixture_db(const PilotSet& set, const LagWindow& w) {
  const std::vector<double> weights(set.size(), 1.0);
  const auto dbs = mixture_metric(set.td_pilots, w, weights);
  return *std::min_element(dbs.begin(), dbs.end());
}

}  // namespace

TEST_CASE("C1 zero tail at desk dims", "[c1]") {
  Criterion c{1, "zero-tail property"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto sub = ZeroTailSubspace::build({256, 200, 80});
  for (unsigned seed = 0; seed < 100; ++seed) {
    const cvec x = random_cvec(120, seed);
    const cvec td = sub.to_time_domain(x);
    const double peak = td.cwiseAbs().maxCoeff();
    const double tail = td.tail(80).cwiseAbs().maxCoeff();
    c.expect(tail <= 1e-9 * peak,
             "tail " + std::to_string(tail) + " above 1e-9 * " + std::to_string(peak));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s exceeds 5 s");
  REQUIRE(c.ok);
}

TEST_CASE("C2 analytic gradients vs finite differences", "[c2]") {
  Criterion c{2, "gradient oracle"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto sub = ZeroTailSubspace::build({32, 16, 4});
  const double h = 1e-6;
  for (unsigned draw = 0; draw < 100; ++draw) {
    const cvec x = random_cvec(12, 10 + draw);
    const int lag = static_cast<int>(draw % 15) - 7;
    const cvec dir = random_cvec(12, 9000 + draw).normalized();

    double analytic = 0.0, fd = 0.0;
    if (draw % 2 == 0) {
      const int acf_lag = lag == 0 ? 1 : lag;
      analytic = 2.0 * (acf_gradient(sub, x, acf_lag) * dir).real()(0, 0);
      fd = (acf_cost(sub, cvec(x + h * dir), acf_lag) -
            acf_cost(sub, cvec(x - h * dir), acf_lag)) /
           (2.0 * h);
    } else {
      std::vector<cvec> others{random_cvec(12, 700 + draw), random_cvec(12, 800 + draw)};
      analytic = 2.0 * (mcf_gradient(sub, x, others, lag) * dir).real()(0, 0);
      fd = (mcf_cost(sub, cvec(x + h * dir), others, lag) -
            mcf_cost(sub, cvec(x - h * dir), others, lag)) /
           (2.0 * h);
    }
    const double err = std::abs(analytic - fd) / std::max(std::abs(fd), 1e-9);
    c.expect(err <= 1e-5, "draw " + std::to_string(draw) + " relative error " +
                              std::to_string(err));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s exceeds 30 s");
  REQUIRE(c.ok);
}

TEST_CASE("C3 FFT correlation vs direct sum", "[c3]") {
  Criterion c{3, "correlation oracle"};
  const auto t0 = std::chrono::steady_clock::now();
  for (unsigned pair = 0; pair < 50; ++pair) {
    const int n = 65 + static_cast<int>((pair * 191) / 49);  // 65..256
    const cvec a = random_cvec(n, 2 * pair);
    const cvec b = random_cvec(n, 2 * pair + 1);
    const cvec fast = cyclic_xcorr(a, b);
    const cvec slow = xcorr_naive(a, b);
    const double err = (fast - slow).cwiseAbs().maxCoeff() / slow.cwiseAbs().maxCoeff();
    c.expect(err <= 1e-10, "length " + std::to_string(n) + " error " + std::to_string(err));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s exceeds 5 s");
  REQUIRE(c.ok);
}

TEST_CASE("C4 pseudo-inverse consistency", "[c4]") {
  Criterion c{4, "pseudo-inverse"};
  const auto sub = ZeroTailSubspace::build({64, 32, 8});
  const cmat id = sub.dense_pinv() * sub.dense_a();
  const double id_err = (id - cmat::Identity(24, 24)).cwiseAbs().maxCoeff();
  c.expect(id_err <= 1e-8, "||pinv(A) A - I|| = " + std::to_string(id_err));
  for (unsigned seed = 0; seed < 20; ++seed) {
    const cvec x = random_cvec(24, 40 + seed);
    const double err = (sub.pinv_apply(sub.to_time_domain(x)) - x).norm() / x.norm();
    c.expect(err <= 1e-8, "round trip error " + std::to_string(err));
  }
  REQUIRE(c.ok);
}

TEST_CASE("C5 bitwise-deterministic pilot files", "[c5]") {
  Criterion c{5, "determinism"};
  const auto sub = ZeroTailSubspace::build({64, 32, 8});
  const LagWindow w{2, 16};
  SynthesisConfig scfg;
  scfg.dims = {64, 32, 8};
  scfg.window = w;
  scfg.optimizer.n_pilots = 2;
  scfg.optimizer.seed = 42;
  scfg.optimizer.max_iters = 300;

  auto emit = [&](const std::string& path) {
    const auto res = synthesize(scfg.optimizer, w, sub);
    PilotFileData data;
    data.config = scfg;
    data.metrics.seed = scfg.optimizer.seed;
    data.metrics.iterations = res.iterations;
    data.metrics.converged = res.converged;
    data.metrics.initial_worst_peak_db = power_db(res.initial_worst_peak);
    data.metrics.final_worst_peak_db = power_db(res.final_worst_peak);
    data.preimages = res.set.preimages;
    data.fd_pilots = res.set.fd_pilots;
    data.td_pilots = res.set.td_pilots;
    save_pilot_file(path, data);
  };
  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "zt_accept_run1.zt").string();
  const std::string p2 = (dir / "zt_accept_run2.zt").string();
  emit(p1);
  emit(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  c.expect(s1.str() == s2.str(), "pilot files differ between identical runs");
  c.expect(!s1.str().empty(), "pilot file is empty");
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  REQUIRE(c.ok);
}

TEST_CASE("C6 reduction equivalence over 100 iterations", "[c6]") {
  Criterion c{6, "reduction equivalence"};
  const auto sub = ZeroTailSubspace::build({64, 32, 8});
  const LagWindow w{2, 16};
  OptimizerConfig mp;
  mp.n_pilots = 3;
  mp.seed = 42;
  mp.max_iters = 100;
  OptimizerConfig wp = mp;
  wp.method = DescentMethod::WeightedPeaks;
  wp.n_peaks = 1;
  wp.alpha_acf = 1.0;
  wp.alpha_mcf = 1.0;
  wp.beta_weights = {1.0};

  const auto r1 = synthesize(mp, w, sub);
  const auto r2 = synthesize(wp, w, sub);
  c.expect(r1.trace.records.size() == r2.trace.records.size(), "trace lengths differ");
  for (size_t i = 0; i < r1.trace.records.size(); ++i)
    if (r1.trace.records[i].worst_peak != r2.trace.records[i].worst_peak) {
      c.expect(false, "trajectories diverge at iteration " + std::to_string(i));
      break;
    }
  for (size_t p = 0; p < 3; ++p) {
    const double diff = (r1.set.preimages[p] - r2.set.preimages[p]).cwiseAbs().maxCoeff();
    c.expect(diff == 0.0, "final preimage " + std::to_string(p) + " differs by " +
                              std::to_string(diff));
  }
  REQUIRE(c.ok);
}

TEST_CASE("C7 desk-scale convergence", "[c7]") {
  Criterion c{7, "desk-scale convergence"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto& res = desk4();
  const double initial_db = power_db(res.initial_worst_peak);
  const double final_db = power_db(res.final_worst_peak);
  const double gain = initial_db - final_db;
  std::printf("  C7 worst peak %.3f dB -> %.3f dB (gain %.2f dB) in %ld iterations\n",
              initial_db, final_db, gain, res.iterations);
  c.expect(res.iterations <= 5000, "iteration budget exceeded");
  c.expect(gain >= 6.0, "gain " + std::to_string(gain) + " dB below the 6 dB bar");
  // Regression floor frozen from the recorded first run (25.73 dB with this
  // exact configuration); allow margin for FP drift across toolchains.
  c.expect(gain >= 24.0, "gain " + std::to_string(gain) + " dB below the recorded 24.0 dB floor");
  const double secs = seconds_since(t0);
  c.expect(secs < 300.0, "runtime " + std::to_string(secs) + " s exceeds 5 min");
  REQUIRE(c.ok);
}

TEST_CASE("C8 mixture metric degrades from 4 to 8 pilots", "[c8]") {
  Criterion c{8, "multiplexing trend"};
  const double mix4 = worst_mixture_db(desk4().set, kDeskWindow);
  const auto res8 = synthesize(desk_cfg(8), kDeskWindow, desk_sub());
  const double mix8 = worst_mixture_db(res8.set, kDeskWindow);
  std::printf("  C8 worst mixture: 4 pilots %.2f dB, 8 pilots %.2f dB\n", mix4, mix8);
  c.expect(mix8 < mix4, "8-pilot metric " + std::to_string(mix8) +
                            " dB does not degrade vs 4-pilot " + std::to_string(mix4) + " dB");
  REQUIRE(c.ok);
}

TEST_CASE("C9 slot and timing arithmetic", "[c9]") {
  Criterion c{9, "slot and timing arithmetic"};
  c.expect(std::abs(slot_savings(4) - 25.0) == 0.0, "slot_savings(4)");
  c.expect(std::abs(slot_savings(8) - 62.5) == 0.0, "slot_savings(8)");
  c.expect(std::abs(slot_savings(64) - 95.3) <= 0.05, "slot_savings(64)");
  c.expect(std::abs(baseline_zero_tail_us(3300, 0.75, 30e3, 4096) - 6.7) <= 0.05,
           "baseline zero tail");
  const auto tc = time_conversions(2, 370, 1750, 30e3, 4096);
  c.expect(std::abs(tc.precision_ns - 12.2) <= 0.3, "precision " + std::to_string(tc.precision_ns));
  c.expect(std::abs(tc.max_offset_us - 1.505) <= 0.01,
           "max offset " + std::to_string(tc.max_offset_us));
  c.expect(std::abs(tc.tail_us - 14.24) <= 0.1, "tail " + std::to_string(tc.tail_us));
  REQUIRE(c.ok);
}

TEST_CASE("C10 PAPR reduction trade-off", "[c10]") {
  Criterion c{10, "PAPR trade-off"};
  const auto t0 = std::chrono::steady_clock::now();

  const auto& off = desk4();
  PaprConfig pcfg;
  pcfg.n_papr_reductions = 1;
  pcfg.n_peaks_td = 4;
  pcfg.h_step_papr = 5e-3;
  const auto on = interleaved_synthesis(desk_cfg(4), pcfg, kDeskWindow, desk_sub());

  auto worst_papr = [&](const PilotSet& set) {
    double worst = 0.0;
    for (const auto& x : set.preimages)
      worst = std::max(worst, power_db(papr_cost(desk_sub(), x)));
    return worst;
  };
  const double papr_off = worst_papr(off.set);
  const double papr_on = worst_papr(on.set);
  const double mix_off = worst_mixture_db(off.set, kDeskWindow);
  const double mix_on = worst_mixture_db(on.set, kDeskWindow);
  std::printf("  C10 papr %.2f -> %.2f dB; mixture %.2f -> %.2f dB\n", papr_off, papr_on,
              mix_off, mix_on);
  c.expect(papr_on < papr_off, "PAPR did not strictly decrease");
  c.expect(mix_off - mix_on <= 2.0,
           "correlation degraded by " + std::to_string(mix_off - mix_on) + " dB (> 2 dB)");
  const double secs = seconds_since(t0);
  c.expect(secs < 600.0, "runtime " + std::to_string(secs) + " s exceeds 10 min");
  REQUIRE(c.ok);
}

// Full-scale dims; the 1750x3300 SVD (~72 s) plus 20000 iterations
// (~67 ms each) make this a ~25-minute single-core manual job:
//   ./acceptance_tests "[.c11]" -s
// The target is one-sided: at most 2 dB below the 18.2 dB reference, since
// exceeding the reference is success for a figure of merit. Recorded first
// run: 35.04 dB worst mixture in 28 minutes.
TEST_CASE("C11 full-scale stretch", "[.c11]") {
  Criterion c{11, "full-scale stretch"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto sub = ZeroTailSubspace::build({4096, 3300, 1750});
  std::printf("  C11 subspace built in %.1f s (V0 %ld x %ld)\n", seconds_since(t0),
              static_cast<long>(sub.v0().rows()), static_cast<long>(sub.v0().cols()));
  std::fflush(stdout);
  OptimizerConfig cfg = desk_cfg(4);
  cfg.max_iters = 20000;
  const LagWindow w{2, 370};
  const auto res = synthesize(cfg, w, sub);
  const double mix = worst_mixture_db(res.set, w);
  std::printf("  C11 worst mixture %.2f dB (reference 18.2 dB), runtime %.1f s\n", mix,
              seconds_since(t0));
  c.expect(mix >= 18.2 - 2.0, "mixture " + std::to_string(mix) + " dB below target");
  REQUIRE(c.ok);
}

TEST_CASE("C12 channel overlap regression", "[c12]") {
  Criterion c{12, "channel overlap"};
  const auto& res = desk4();
  std::vector<ChannelModel> channels;
  for (int p = 0; p < 4; ++p)
    channels.push_back(make_random_channel(1000 + static_cast<unsigned>(p), 3, 8, 30.0));
  const auto chan_dbs = channel_overlap_eval(res.set.td_pilots, channels, kDeskWindow);
  const double worst_chan = *std::min_element(chan_dbs.begin(), chan_dbs.end());
  const double worst_mix = worst_mixture_db(res.set, kDeskWindow);
  const double degradation = worst_mix - worst_chan;
  std::printf("  C12 clean mixture %.2f dB, through channels %.2f dB (degradation %.2f dB)\n",
              worst_mix, worst_chan, degradation);
  c.expect(degradation <= 3.0,
           "degradation " + std::to_string(degradation) + " dB exceeds 3 dB");
  // Regression floor frozen from the recorded first run (0.22 dB).
  c.expect(degradation <= 1.5, "degradation above the recorded 1.5 dB baseline");
  REQUIRE(c.ok);
}
