#pragma once

// Synthesis configuration: a flat key-value text format with [sections],
// '#' comments, and line-precise diagnostics. The emitted snapshot (see
// write_config) parses back to an identical configuration, which is what
// makes pilot files self-describing and reruns bit-identical.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "correlation.hpp"
#include "optimizer.hpp"
#include "papr.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace ztpilot {

enum class PilotPayloadFormat { Text, Binary };

struct SynthesisConfig {
  SubspaceDims dims;
  double delta_f_hz = 30e3;
  LagWindow window{2, 32};
  OptimizerConfig optimizer;
  std::optional<PaprConfig> papr;
  std::vector<int> carrier_placement;  // empty = contiguous-centered
  std::string out_dir = ".";
  PilotPayloadFormat pilot_format = PilotPayloadFormat::Text;

  std::vector<int> placement() const {
    return carrier_placement.empty()
               ? contiguous_centered_placement(dims.n_fft, dims.n_sc)
               : carrier_placement;
  }

  void validate() const {
    dims.validate();
    window.validate();
    optimizer.validate();
    if (papr) papr->validate();
    if (delta_f_hz <= 0.0) throw ConfigError("delta_f_hz must be positive");
    if (window.outer_halfwidth() >= dims.n_fft)
      throw ConfigError("t_max/2 must be smaller than n_fft");
    if (!carrier_placement.empty() &&
        static_cast<int>(carrier_placement.size()) != dims.n_sc)
      throw ConfigError("carrier_placement must list exactly n_sc indices");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline long parse_long(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'", line);
  }
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'", line);
  }
}

inline std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) parts.push_back(trim(cur));
  return parts;
}

}  // namespace detail

inline SynthesisConfig parse_config_text(const std::string& text,
                                         const std::string& source = "<config>") {
  SynthesisConfig cfg;
  std::set<std::string> seen;
  bool papr_section = false;
  PaprConfig papr;

  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + raw + "'", line_no);
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "dims" && section != "grid" && section != "window" &&
          section != "pilots" && section != "optimizer" && section != "papr" &&
          section != "output")
        throw ConfigError("unknown section '" + section + "'", line_no);
      if (section == "papr") papr_section = true;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + raw + "'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string qkey = section + "." + key;
    if (key.empty() || value.empty())
      throw ConfigError("key '" + qkey + "': empty key or value", line_no);
    if (!seen.insert(qkey).second) throw ConfigError("duplicate key '" + qkey + "'", line_no);

    auto as_long = [&] { return detail::parse_long(value, qkey, line_no); };
    auto as_double = [&] { return detail::parse_double(value, qkey, line_no); };

    if (qkey == "dims.n_fft") cfg.dims.n_fft = static_cast<int>(as_long());
    else if (qkey == "dims.n_sc") cfg.dims.n_sc = static_cast<int>(as_long());
    else if (qkey == "dims.t_zero") cfg.dims.t_zero = static_cast<int>(as_long());
    else if (qkey == "grid.delta_f_hz") cfg.delta_f_hz = as_double();
    else if (qkey == "grid.carrier_placement") {
      if (value == "contiguous-centered") cfg.carrier_placement.clear();
      else {
        for (const auto& part : detail::split_csv(value))
          cfg.carrier_placement.push_back(
              static_cast<int>(detail::parse_long(part, qkey, line_no)));
      }
    } else if (qkey == "window.t_min") cfg.window.t_min = static_cast<int>(as_long());
    else if (qkey == "window.t_max") cfg.window.t_max = static_cast<int>(as_long());
    else if (qkey == "pilots.n_pilots") cfg.optimizer.n_pilots = static_cast<int>(as_long());
    else if (qkey == "optimizer.method") {
      if (value == "maxpeak") cfg.optimizer.method = DescentMethod::MaxPeak;
      else if (value == "weighted") cfg.optimizer.method = DescentMethod::WeightedPeaks;
      else throw ConfigError("key 'optimizer.method': expected maxpeak|weighted", line_no);
    } else if (qkey == "optimizer.n_peaks") cfg.optimizer.n_peaks = static_cast<int>(as_long());
    else if (qkey == "optimizer.alpha_acf") cfg.optimizer.alpha_acf = as_double();
    else if (qkey == "optimizer.alpha_mcf") cfg.optimizer.alpha_mcf = as_double();
    else if (qkey == "optimizer.beta_weights") {
      if (value == "auto") cfg.optimizer.beta_weights.clear();
      else
        for (const auto& part : detail::split_csv(value))
          cfg.optimizer.beta_weights.push_back(detail::parse_double(part, qkey, line_no));
    } else if (qkey == "optimizer.learn_rate") cfg.optimizer.learn_rate = as_double();
    else if (qkey == "optimizer.step_strategy") {
      if (value == "shrink") cfg.optimizer.step_strategy = StepStrategy::ShrinkOnWorse;
      else if (value == "schedule") cfg.optimizer.step_strategy = StepStrategy::Schedule;
      else if (value == "cost") cfg.optimizer.step_strategy = StepStrategy::CostProportional;
      else throw ConfigError("key 'optimizer.step_strategy': expected shrink|schedule|cost",
                             line_no);
    } else if (qkey == "optimizer.h0") cfg.optimizer.step.h0 = as_double();
    else if (qkey == "optimizer.shrink_divisor") cfg.optimizer.step.shrink_divisor = as_double();
    else if (qkey == "optimizer.schedule_tau") cfg.optimizer.step.schedule_tau = as_double();
    else if (qkey == "optimizer.cost_coeff") cfg.optimizer.step.cost_coeff = as_double();
    else if (qkey == "optimizer.h_min") cfg.optimizer.step.h_min = as_double();
    else if (qkey == "optimizer.h_max") cfg.optimizer.step.h_max = as_double();
    else if (qkey == "optimizer.epsilon") cfg.optimizer.epsilon = as_double();
    else if (qkey == "optimizer.max_iters") cfg.optimizer.max_iters = as_long();
    else if (qkey == "optimizer.seed") {
      try {
        size_t pos = 0;
        cfg.optimizer.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
      } catch (...) {
        throw ConfigError("key 'optimizer.seed': expected an unsigned integer", line_no);
      }
    }
    else if (qkey == "papr.n_reductions") papr.n_papr_reductions = static_cast<int>(as_long());
    else if (qkey == "papr.n_peaks_td") papr.n_peaks_td = static_cast<int>(as_long());
    else if (qkey == "papr.h_step") papr.h_step_papr = as_double();
    else if (qkey == "papr.magnitude_floor") papr.magnitude_floor = as_double();
    else if (qkey == "papr.floor_scale") papr.floor_scale = as_double();
    else if (qkey == "output.out_dir") cfg.out_dir = value;
    else if (qkey == "output.pilot_format") {
      if (value == "text") cfg.pilot_format = PilotPayloadFormat::Text;
      else if (value == "binary") cfg.pilot_format = PilotPayloadFormat::Binary;
      else throw ConfigError("key 'output.pilot_format': expected text|binary", line_no);
    } else throw ConfigError("unknown key '" + qkey + "'", line_no);
  }

  for (const char* req : {"dims.n_fft", "dims.n_sc", "dims.t_zero", "window.t_min",
                          "window.t_max", "pilots.n_pilots"})
    if (!seen.count(req))
      throw ConfigError(std::string("missing required key '") + req + "' in " + source);

  if (papr_section) cfg.papr = papr;
  cfg.validate();
  return cfg;
}

inline SynthesisConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  try {
    return parse_config_text(buf.str(), path);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Canonical snapshot; parses back to an identical configuration.
inline void write_config(std::ostream& os, const SynthesisConfig& cfg) {
  using detail::fmt_double;
  os << "[dims]\n";
  os << "n_fft = " << cfg.dims.n_fft << "\n";
  os << "n_sc = " << cfg.dims.n_sc << "\n";
  os << "t_zero = " << cfg.dims.t_zero << "\n";
  os << "[grid]\n";
  os << "delta_f_hz = " << fmt_double(cfg.delta_f_hz) << "\n";
  os << "carrier_placement = ";
  if (cfg.carrier_placement.empty()) {
    os << "contiguous-centered\n";
  } else {
    for (size_t i = 0; i < cfg.carrier_placement.size(); ++i)
      os << (i ? "," : "") << cfg.carrier_placement[i];
    os << "\n";
  }
  os << "[window]\n";
  os << "t_min = " << cfg.window.t_min << "\n";
  os << "t_max = " << cfg.window.t_max << "\n";
  os << "[pilots]\n";
  os << "n_pilots = " << cfg.optimizer.n_pilots << "\n";
  os << "[optimizer]\n";
  os << "method = "
     << (cfg.optimizer.method == DescentMethod::MaxPeak ? "maxpeak" : "weighted") << "\n";
  os << "n_peaks = " << cfg.optimizer.n_peaks << "\n";
  os << "alpha_acf = " << fmt_double(cfg.optimizer.alpha_acf) << "\n";
  os << "alpha_mcf = " << fmt_double(cfg.optimizer.alpha_mcf) << "\n";
  os << "beta_weights = ";
  if (cfg.optimizer.beta_weights.empty()) {
    os << "auto\n";
  } else {
    for (size_t i = 0; i < cfg.optimizer.beta_weights.size(); ++i)
      os << (i ? "," : "") << fmt_double(cfg.optimizer.beta_weights[i]);
    os << "\n";
  }
  os << "learn_rate = " << fmt_double(cfg.optimizer.learn_rate) << "\n";
  const char* strat = cfg.optimizer.step_strategy == StepStrategy::ShrinkOnWorse ? "shrink"
                      : cfg.optimizer.step_strategy == StepStrategy::Schedule    ? "schedule"
                                                                                 : "cost";
  os << "step_strategy = " << strat << "\n";
  os << "h0 = " << fmt_double(cfg.optimizer.step.h0) << "\n";
  os << "shrink_divisor = " << fmt_double(cfg.optimizer.step.shrink_divisor) << "\n";
  os << "schedule_tau = " << fmt_double(cfg.optimizer.step.schedule_tau) << "\n";
  os << "cost_coeff = " << fmt_double(cfg.optimizer.step.cost_coeff) << "\n";
  os << "h_min = " << fmt_double(cfg.optimizer.step.h_min) << "\n";
  os << "h_max = " << fmt_double(cfg.optimizer.step.h_max) << "\n";
  os << "epsilon = " << fmt_double(cfg.optimizer.epsilon) << "\n";
  os << "max_iters = " << cfg.optimizer.max_iters << "\n";
  os << "seed = " << cfg.optimizer.seed << "\n";
  if (cfg.papr) {
    os << "[papr]\n";
    os << "n_reductions = " << cfg.papr->n_papr_reductions << "\n";
    os << "n_peaks_td = " << cfg.papr->n_peaks_td << "\n";
    os << "h_step = " << fmt_double(cfg.papr->h_step_papr) << "\n";
    os << "magnitude_floor = " << fmt_double(cfg.papr->magnitude_floor) << "\n";
    os << "floor_scale = " << fmt_double(cfg.papr->floor_scale) << "\n";
  }
  os << "[output]\n";
  os << "out_dir = " << cfg.out_dir << "\n";
  os << "pilot_format = "
     << (cfg.pilot_format == PilotPayloadFormat::Text ? "text" : "binary") << "\n";
}

inline std::string config_to_string(const SynthesisConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

}  // namespace ztpilot
