#include <catch2/catch_amalgamated.hpp>

#include <ztpilot/evaluator.hpp>
#include <ztpilot/fft.hpp>
#include <ztpilot/papr.hpp>

#include "test_helpers.hpp"

using namespace ztpilot;
using ztest::random_cvec;

namespace {
const ZeroTailSubspace& sub64() {
  static const auto sub = ZeroTailSubspace::build({64, 32, 8});
  return sub;
}
}  // namespace

TEST_CASE("papr_cost closed-form cases", "[papr]") {
  const auto full = ZeroTailSubspace::build({8, 8, 0});

  SECTION("flat TD envelope gives exactly 1") {
    const cvec flat_td = cvec::Ones(8);
    const cvec x = unitary_fft(flat_td);  // preimage = FD vector at t_zero = 0
    CHECK(papr_cost(full, x) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("TD impulse gives n_fft") {
    const cvec x = cvec::Ones(8);  // FD all-ones -> TD impulse
    CHECK(papr_cost(full, x) == Catch::Approx(8.0).margin(1e-10));
  }
  SECTION("zero input throws") {
    CHECK_THROWS_AS(papr_cost(full, cvec::Zero(8)), ZeroInput);
  }
}

TEST_CASE("papr_cost matches the direct formula over live samples", "[papr]") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const cvec x = random_cvec(24, seed);
    const cvec td = sub64().to_time_domain(x);
    double peak = 0.0, sum = 0.0;
    for (int k = 0; k < 56; ++k) {  // n_fft - t_zero live samples
      peak = std::max(peak, std::norm(td(k)));
      sum += std::norm(td(k));
    }
    const double want = peak / (sum / 56.0);
    CHECK(papr_cost(sub64(), x) == Catch::Approx(want).epsilon(1e-12));
    CHECK(papr_cost(sub64(), x) >= 1.0);
    // full-vector figure is diluted by the zero tail
    CHECK(papr_cost_full(sub64(), x) > papr_cost(sub64(), x));
  }
}

TEST_CASE("papr_cost scale invariance", "[papr][property]") {
  const cvec x = random_cvec(24, 3);
  const double base = papr_cost(sub64(), x);
  for (const cxd alpha : {cxd(2.0, 0.0), cxd(0.0, -3.0), cxd(0.7, 0.2)})
    CHECK(papr_cost(sub64(), cvec(alpha * x)) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("TD gradient support set", "[papr]") {
  PaprConfig cfg;
  cfg.n_peaks_td = 3;
  cfg.h_step_papr = 0.01;
  const cvec x = random_cvec(24, 8);
  const cvec td = sub64().to_time_domain(x);

  const cvec g = papr_td_gradient(td, 8, cfg);
  // effective floor: 1.5 * mean live magnitude
  double mean_mag = 0.0;
  for (int k = 0; k < 56; ++k) mean_mag += std::abs(td(k));
  mean_mag /= 56.0;
  const double floor = cfg.floor_scale * mean_mag;

  int nonzero = 0;
  for (int k = 0; k < 64; ++k) {
    if (std::abs(g(k)) > 0.0) {
      ++nonzero;
      CHECK(std::abs(td(k)) > floor);
      CHECK(g(k) == td(k));  // gradient entry is the complex sample itself
    }
  }
  CHECK(nonzero <= 3);
  CHECK(nonzero >= 1);
}

TEST_CASE("reduction pass contracts", "[papr]") {
  PaprConfig cfg;
  cfg.n_peaks_td = 2;
  cfg.h_step_papr = 0.01;

  SECTION("flat envelope is returned unchanged") {
    const auto full = ZeroTailSubspace::build({8, 8, 0});
    const cvec x = unitary_fft(cvec::Ones(8)).normalized();
    const cvec out = papr_reduction_pass(full, x, cfg);
    CHECK((out - x).norm() == 0.0);  // no sample exceeds 1.5x mean
  }
  SECTION("a dominant peak shrinks papr after one pass") {
    cvec x = random_cvec(24, 17);
    x /= sub64().to_time_domain(x).norm();
    const double before = papr_cost(sub64(), x);
    const cvec out = papr_reduction_pass(sub64(), x, cfg);
    CHECK(papr_cost(sub64(), out) < before);
    CHECK(std::abs(sub64().to_time_domain(out).norm() - 1.0) <= 1e-10);
  }
  SECTION("zero-tail is preserved across passes") {
    cvec x = random_cvec(24, 18);
    x /= sub64().to_time_domain(x).norm();
    for (int i = 0; i < 5; ++i) x = papr_reduction_pass(sub64(), x, cfg);
    const cvec td = sub64().to_time_domain(x);
    CHECK(td.tail(8).cwiseAbs().maxCoeff() <= 1e-9 * td.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("papr decreases monotonically across passes on a frozen pilot", "[papr]") {
  PaprConfig cfg;
  cfg.n_peaks_td = 4;
  cfg.h_step_papr = 0.01;
  cvec x = random_cvec(24, 23);
  x /= sub64().to_time_domain(x).norm();
  double prev = papr_cost(sub64(), x);
  const double initial = prev;
  for (int pass = 0; pass < 50; ++pass) {
    x = papr_reduction_pass(sub64(), x, cfg);
    const double cur = papr_cost(sub64(), x);
    CHECK(cur <= prev + 1e-9);
    prev = cur;
  }
  CHECK(prev < initial);
}

TEST_CASE("interleaved synthesis with zero reductions equals the plain run", "[papr]") {
  OptimizerConfig ocfg;
  ocfg.n_pilots = 2;
  ocfg.seed = 42;
  ocfg.max_iters = 80;
  const LagWindow w{2, 16};
  PaprConfig pcfg;
  pcfg.n_papr_reductions = 0;

  const auto plain = synthesize(ocfg, w, sub64());
  const auto inter = interleaved_synthesis(ocfg, pcfg, w, sub64());
  for (size_t p = 0; p < 2; ++p)
    CHECK((plain.set.preimages[p] - inter.set.preimages[p]).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(inter.trace.has_papr);
}

TEST_CASE("interleaved synthesis records papr and trades correlation for papr", "[papr]") {
  OptimizerConfig ocfg;
  ocfg.n_pilots = 2;
  ocfg.seed = 7;
  ocfg.max_iters = 4000;
  ocfg.epsilon = 1e-8;
  const LagWindow w{2, 16};

  PaprConfig pcfg;
  pcfg.n_papr_reductions = 2;
  pcfg.n_peaks_td = 8;
  pcfg.h_step_papr = 0.05;

  const auto off = synthesize(ocfg, w, sub64());
  const auto on = interleaved_synthesis(ocfg, pcfg, w, sub64());
  REQUIRE(on.trace.has_papr);
  CHECK_FALSE(std::isnan(on.trace.records.back().papr_db));

  auto worst_papr = [&](const PilotSet& set) {
    double worst = 0.0;
    for (const auto& x : set.preimages) worst = std::max(worst, power_db(papr_cost(sub64(), x)));
    return worst;
  };
  auto worst_mix = [&](const PilotSet& set) {
    const std::vector<double> weights(set.size(), 1.0);
    const auto dbs = mixture_metric(set.td_pilots, w, weights);
    return *std::min_element(dbs.begin(), dbs.end());
  };

  const double papr_off = worst_papr(off.set), papr_on = worst_papr(on.set);
  const double mix_off = worst_mix(off.set), mix_on = worst_mix(on.set);
  // Trade-off direction: papr improves, correlation does not improve (0.1 dB slack).
  CHECK(papr_on < papr_off);
  CHECK(mix_on <= mix_off + 0.1);
}
