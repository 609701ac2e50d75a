// ztpilot command-line front end: synthesize pilot sets, evaluate stored
// sets, and print the timing/slot arithmetic for a configuration.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <ztpilot/config.hpp>
#include <ztpilot/csv.hpp>
#include <ztpilot/evaluator.hpp>
#include <ztpilot/papr.hpp>
#include <ztpilot/pilot_file.hpp>
#include <ztpilot/report_io.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> max_iters;
  std::optional<std::string> method;
  std::optional<std::string> papr;
  std::optional<std::string> out_dir;
};

void apply_overrides(ztpilot::SynthesisConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.optimizer.seed = *ov.seed;
  if (ov.max_iters) cfg.optimizer.max_iters = *ov.max_iters;
  if (ov.method) {
    if (*ov.method == "maxpeak") cfg.optimizer.method = ztpilot::DescentMethod::MaxPeak;
    else if (*ov.method == "weighted") cfg.optimizer.method = ztpilot::DescentMethod::WeightedPeaks;
    else throw ztpilot::ConfigError("--method expects maxpeak|weighted");
  }
  if (ov.papr) {
    if (*ov.papr == "off") cfg.papr.reset();
    else if (*ov.papr == "on") {
      if (!cfg.papr) cfg.papr = ztpilot::PaprConfig{};
      if (cfg.papr->n_papr_reductions == 0) cfg.papr->n_papr_reductions = 1;
    } else {
      throw ztpilot::ConfigError("--papr expects on|off");
    }
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  cfg.validate();
}

ztpilot::ZeroTailSubspace build_or_load_subspace(const ztpilot::SynthesisConfig& cfg,
                                                 const std::string& cache_path) {
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    auto sub = ztpilot::ZeroTailSubspace::load_cache(cache_path, cfg.placement());
    if (sub.dims() == cfg.dims) return sub;
    std::cerr << "warning: subspace cache dims mismatch, rebuilding\n";
  }
  auto sub = ztpilot::ZeroTailSubspace::build(cfg.dims, cfg.placement());
  if (!cache_path.empty()) sub.save_cache(cache_path);
  return sub;
}

std::vector<double> parse_weights(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
  return out;
}

int cmd_synthesize(const std::string& config_path, const Overrides& ov,
                   const std::string& cache_path) {
  auto cfg = ztpilot::parse_config_file(config_path);
  apply_overrides(cfg, ov);
  std::filesystem::create_directories(cfg.out_dir);

  const auto sub = build_or_load_subspace(cfg, cache_path);
  ztpilot::SynthesisResult res;
  if (cfg.papr && cfg.papr->n_papr_reductions > 0)
    res = ztpilot::interleaved_synthesis(cfg.optimizer, *cfg.papr, cfg.window, sub);
  else
    res = ztpilot::synthesize(cfg.optimizer, cfg.window, sub);

  if (!res.converged)
    std::cerr << "warning: did not converge within " << cfg.optimizer.max_iters
              << " iterations; best-so-far set written\n";

  ztpilot::EvalOptions eopt;
  auto report = ztpilot::evaluate_pilot_set(sub, res.set, cfg.window, eopt);
  report.config_snapshot = ztpilot::config_to_string(cfg);

  ztpilot::PilotFileData data;
  data.config = cfg;
  data.metrics.seed = cfg.optimizer.seed;
  data.metrics.iterations = res.iterations;
  data.metrics.converged = res.converged;
  data.metrics.initial_worst_peak_db = ztpilot::power_db(res.initial_worst_peak);
  data.metrics.final_worst_peak_db = ztpilot::power_db(res.final_worst_peak);
  data.metrics.mixture_worst_db = report.worst_mixture_db;
  data.metrics.papr_worst_db = report.worst_papr_db;
  data.preimages = res.set.preimages;
  data.fd_pilots = res.set.fd_pilots;
  data.td_pilots = res.set.td_pilots;

  const auto out = std::filesystem::path(cfg.out_dir);
  ztpilot::save_pilot_file((out / "pilots.zt").string(), data);
  ztpilot::write_trace_csv((out / "trace.csv").string(), res.trace);
  ztpilot::atomic_write((out / "report.txt").string(),
                        [&](std::ostream& os) { ztpilot::write_report_text(os, report); });
  {
    auto j = ztpilot::report_to_json(report);
    j["converged"] = res.converged;
    j["iterations"] = res.iterations;
    j["initial_worst_peak_db"] = data.metrics.initial_worst_peak_db;
    j["final_worst_peak_db"] = data.metrics.final_worst_peak_db;
    ztpilot::atomic_write((out / "report.json").string(),
                          [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  }

  std::cout << "pilots: " << (out / "pilots.zt").string() << "\n";
  std::cout << "converged: " << (res.converged ? "yes" : "no") << " after " << res.iterations
            << " iterations\n";
  std::cout << "worst peak: " << ztpilot::power_db(res.initial_worst_peak) << " dB -> "
            << ztpilot::power_db(res.final_worst_peak) << " dB\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& pilots_path, const std::string& channels_path,
                 const std::string& weights_csv, const Overrides& ov,
                 const std::string& cache_path) {
  auto data = ztpilot::load_pilot_file(pilots_path);
  auto& cfg = data.config;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  std::filesystem::create_directories(cfg.out_dir);

  const auto sub = build_or_load_subspace(cfg, cache_path);

  // Integrity: re-derive FD/TD from the stored preimages.
  ztpilot::PilotSet set;
  set.preimages = data.preimages;
  set.refresh(sub);
  set.seed = data.metrics.seed;
  set.iterations = data.metrics.iterations;
  set.converged = data.metrics.converged;
  for (std::size_t p = 0; p < set.size(); ++p) {
    const double scale = std::max(1.0, data.td_pilots[p].norm());
    if ((set.fd_pilots[p] - data.fd_pilots[p]).norm() > 1e-10 * scale ||
        (set.td_pilots[p] - data.td_pilots[p]).norm() > 1e-10 * scale)
      throw ztpilot::IoError("pilot file integrity check failed for pilot " + std::to_string(p));
  }

  ztpilot::EvalOptions eopt;
  if (!weights_csv.empty()) eopt.mixture_weights = parse_weights(weights_csv);
  if (!channels_path.empty())
    eopt.channels = ztpilot::parse_channel_file(channels_path, set.size());

  auto report = ztpilot::evaluate_pilot_set(sub, set, cfg.window, eopt);
  report.config_snapshot = ztpilot::config_to_string(cfg);

  const auto out = std::filesystem::path(cfg.out_dir);
  ztpilot::write_report_json((out / "eval_report.json").string(), report);
  ztpilot::atomic_write((out / "eval_report.txt").string(),
                        [&](std::ostream& os) { ztpilot::write_report_text(os, report); });

  // Plot data: FD/TD magnitudes, ACF/MCF profiles, mixture (and channel) profiles.
  std::vector<double> weights = eopt.mixture_weights;
  if (weights.empty()) weights.assign(set.size(), 1.0);
  ztpilot::cvec mix = ztpilot::cvec::Zero(cfg.dims.n_fft);
  for (std::size_t i = 0; i < set.size(); ++i) mix += weights[i] * set.td_pilots[i];
  for (std::size_t p = 0; p < set.size(); ++p) {
    const std::string tag = "pilot" + std::to_string(p);
    ztpilot::write_vector_csv((out / (tag + "_fd.csv")).string(), set.fd_pilots[p]);
    ztpilot::write_vector_csv((out / (tag + "_td.csv")).string(), set.td_pilots[p]);
    ztpilot::write_profile_csv((out / (tag + "_acf.csv")).string(),
                               ztpilot::acf_profile(set.td_pilots[p], cfg.window));
    ztpilot::write_profile_csv((out / (tag + "_mixture.csv")).string(),
                               ztpilot::mixture_profile(set.td_pilots[p], mix, cfg.window));
    for (std::size_t q = 0; q < set.size(); ++q) {
      if (q == p) continue;
      ztpilot::write_profile_csv(
          (out / (tag + "_mcf_vs" + std::to_string(q) + ".csv")).string(),
          ztpilot::mcf_pair_profile(set.td_pilots[p], set.td_pilots[q], cfg.window,
                                    ztpilot::kAcfComponent + 1 + static_cast<int>(q)));
    }
  }
  if (!eopt.channels.empty()) {
    ztpilot::cvec rx = ztpilot::cvec::Zero(cfg.dims.n_fft);
    for (std::size_t i = 0; i < set.size(); ++i)
      rx += ztpilot::apply_channel(set.td_pilots[i], eopt.channels[i]);
    for (std::size_t p = 0; p < set.size(); ++p)
      ztpilot::write_profile_csv(
          (out / ("pilot" + std::to_string(p) + "_channel.csv")).string(),
          ztpilot::mixture_profile(set.td_pilots[p], rx, cfg.window));
  }

  ztpilot::write_report_text(std::cout, report);

  // Consistency with the metrics stored at synthesis time.
  if (!std::isnan(data.metrics.mixture_worst_db) && weights_csv.empty() &&
      std::abs(report.worst_mixture_db - data.metrics.mixture_worst_db) > 0.01)
    std::cerr << "warning: recomputed mixture metric differs from pilot header by more than 0.01 dB\n";
  return kExitOk;
}

int cmd_info(const std::string& config_path, const std::string& pilots_path) {
  ztpilot::SynthesisConfig cfg;
  if (!config_path.empty())
    cfg = ztpilot::parse_config_file(config_path);
  else if (!pilots_path.empty())
    cfg = ztpilot::load_pilot_file(pilots_path).config;
  else
    throw ztpilot::ConfigError("info needs --config or --pilots");

  const auto tc = ztpilot::time_conversions(cfg.window.t_min, cfg.window.t_max, cfg.dims.t_zero,
                                            cfg.delta_f_hz, cfg.dims.n_fft);
  std::printf("n_fft = %d, n_sc = %d, t_zero = %d, n_pilots = %d\n", cfg.dims.n_fft,
              cfg.dims.n_sc, cfg.dims.t_zero, cfg.optimizer.n_pilots);
  std::printf("precision_ns = %.1f\n", tc.precision_ns);
  std::printf("max_offset_us = %.3f\n", tc.max_offset_us);
  std::printf("tail_us = %.2f\n", tc.tail_us);
  if (cfg.optimizer.n_pilots >= 3)
    std::printf("slot_savings_pct = %.1f%%\n", ztpilot::slot_savings(cfg.optimizer.n_pilots));
  else
    std::printf("slot_savings_pct = n/a (needs at least 3 pilots)\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-tail pilot synthesis toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path, pilots_path, channels_path, weights_csv, cache_path;
  std::uint64_t seed_arg = 0;
  long max_iters_arg = 0;
  std::string method_arg, papr_arg, out_dir_arg;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_arg, "override optimizer seed");
    cmd->add_option("--max-iters", max_iters_arg, "override iteration budget");
    cmd->add_option("--method", method_arg, "maxpeak|weighted");
    cmd->add_option("--papr", papr_arg, "on|off");
    cmd->add_option("--out-dir", out_dir_arg, "output directory");
    cmd->add_option("--subspace-cache", cache_path, "binary subspace cache file (ZTSS)");
  };

  auto* synth = app.add_subcommand("synthesize", "run the pilot search and write the artifacts");
  synth->add_option("--config", config_path, "config file")->required();
  add_common(synth);

  auto* eval = app.add_subcommand("evaluate", "measure a stored pilot set");
  eval->add_option("--pilots", pilots_path, "pilot file")->required();
  eval->add_option("--channels", channels_path, "channel spec file");
  eval->add_option("--mixture-weights", weights_csv, "comma-separated per-pilot gains");
  add_common(eval);

  auto* info = app.add_subcommand("info", "print timing conversions and slot savings");
  info->add_option("--config", config_path, "config file");
  info->add_option("--pilots", pilots_path, "pilot file");

  CLI11_PARSE(app, argc, argv);

  if (CLI::App* active = synth->parsed() ? static_cast<CLI::App*>(synth)
                                         : (eval->parsed() ? static_cast<CLI::App*>(eval) : nullptr)) {
    if (active->count("--seed")) ov.seed = seed_arg;
    if (active->count("--max-iters")) ov.max_iters = max_iters_arg;
    if (active->count("--method")) ov.method = method_arg;
    if (active->count("--papr")) ov.papr = papr_arg;
    if (active->count("--out-dir")) ov.out_dir = out_dir_arg;
  }

  try {
    if (synth->parsed()) return cmd_synthesize(config_path, ov, cache_path);
    if (eval->parsed()) return cmd_evaluate(pilots_path, channels_path, weights_csv, ov, cache_path);
    if (info->parsed()) return cmd_info(config_path, pilots_path);
  } catch (const ztpilot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ztpilot::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
