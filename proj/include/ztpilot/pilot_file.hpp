#pragma once

// Versioned pilot-set persistence. The default payload is text with 17
// significant digits per component, so a reload re-derives the stored FD/TD
// vectors from the preimages to well under 1e-10. The binary payload mode
// stores raw little-endian f64 pairs, mirroring the subspace cache format.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "types.hpp"

namespace ztpilot {

struct PilotFileMetrics {
  std::uint64_t seed = 0;
  long iterations = 0;
  bool converged = false;
  double initial_worst_peak_db = std::numeric_limits<double>::quiet_NaN();
  double final_worst_peak_db = std::numeric_limits<double>::quiet_NaN();
  double mixture_worst_db = std::numeric_limits<double>::quiet_NaN();
  double papr_worst_db = std::numeric_limits<double>::quiet_NaN();
};

struct PilotFileData {
  SynthesisConfig config;
  PilotFileMetrics metrics;
  std::vector<cvec> preimages;
  std::vector<cvec> fd_pilots;
  std::vector<cvec> td_pilots;
};

namespace detail {

inline const char* kPilotMagic = "ZTPILOT-PILOTS";
inline constexpr int kPilotVersion = 1;

inline void write_pair_text(std::ostream& os, const cxd& z) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", z.real(), z.imag());
  os << buf;
}

inline void write_metric(std::ostream& os, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << key << " = " << buf << "\n";
}

inline void write_vector_block(std::ostream& os, const std::string& label, std::size_t pilot,
                               const cvec& v, bool binary) {
  if (binary) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      write_f64_le(os, v(i).real());
      write_f64_le(os, v(i).imag());
    }
  } else {
    os << "pilot " << pilot << " " << label << " " << v.size() << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) write_pair_text(os, v(i));
  }
}

inline cvec read_vector_text(std::istream& is, const std::string& label, std::size_t pilot,
                             Eigen::Index expect) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("pilot file: truncated payload");
  std::istringstream hs(line);
  std::string word, got_label;
  std::size_t got_pilot = 0;
  Eigen::Index len = 0;
  hs >> word >> got_pilot >> got_label >> len;
  if (word != "pilot" || got_pilot != pilot || got_label != label || len != expect)
    throw IoError("pilot file: corrupt payload header '" + line + "'");
  cvec v(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    double re = 0.0, im = 0.0;
    if (!(is >> re >> im)) throw IoError("pilot file: truncated vector data");
    v(i) = cxd(re, im);
  }
  std::getline(is, line);  // consume trailing newline
  return v;
}

inline cvec read_vector_binary(std::istream& is, Eigen::Index len) {
  cvec v(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const double re = read_f64_le(is);
    const double im = read_f64_le(is);
    v(i) = cxd(re, im);
  }
  if (!is) throw IoError("pilot file: truncated binary payload");
  return v;
}

}  // namespace detail

inline void save_pilot_file(const std::string& path, const PilotFileData& data) {
  const bool binary = data.config.pilot_format == PilotPayloadFormat::Binary;
  atomic_write(
      path,
      [&](std::ostream& os) {
        os << detail::kPilotMagic << " " << detail::kPilotVersion << "\n";
        os << "payload_format " << (binary ? "binary" : "text") << "\n";
        os << "begin-config\n";
        write_config(os, data.config);
        os << "end-config\n";
        os << "begin-metrics\n";
        os << "seed = " << data.metrics.seed << "\n";
        os << "iterations = " << data.metrics.iterations << "\n";
        os << "converged = " << (data.metrics.converged ? 1 : 0) << "\n";
        detail::write_metric(os, "initial_worst_peak_db", data.metrics.initial_worst_peak_db);
        detail::write_metric(os, "final_worst_peak_db", data.metrics.final_worst_peak_db);
        detail::write_metric(os, "mixture_worst_db", data.metrics.mixture_worst_db);
        detail::write_metric(os, "papr_worst_db", data.metrics.papr_worst_db);
        os << "end-metrics\n";
        os << "begin-payload\n";
        for (std::size_t p = 0; p < data.preimages.size(); ++p) {
          detail::write_vector_block(os, "preimage", p, data.preimages[p], binary);
          detail::write_vector_block(os, "fd", p, data.fd_pilots[p], binary);
          detail::write_vector_block(os, "td", p, data.td_pilots[p], binary);
        }
        if (!binary) os << "end-payload\n";
      },
      /*binary=*/true);
}

inline PilotFileData load_pilot_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open pilot file: " + path);

  std::string line;
  if (!std::getline(is, line)) throw IoError("pilot file: empty file");
  {
    std::istringstream hs(line);
    std::string magic;
    int version = -1;
    hs >> magic >> version;
    if (magic != detail::kPilotMagic) throw IoError("pilot file: bad magic in " + path);
    if (version != detail::kPilotVersion)
      throw IoError("pilot file: unsupported version " + std::to_string(version));
  }

  if (!std::getline(is, line) || line.rfind("payload_format ", 0) != 0)
    throw IoError("pilot file: missing payload_format");
  const std::string fmt = line.substr(std::string("payload_format ").size());
  if (fmt != "text" && fmt != "binary") throw IoError("pilot file: unknown payload format " + fmt);
  const bool binary = fmt == "binary";

  if (!std::getline(is, line) || line != "begin-config")
    throw IoError("pilot file: missing config section");
  std::string config_text;
  while (std::getline(is, line) && line != "end-config") config_text += line + "\n";
  if (line != "end-config") throw IoError("pilot file: unterminated config section");

  PilotFileData data;
  data.config = parse_config_text(config_text, path);

  if (!std::getline(is, line) || line != "begin-metrics")
    throw IoError("pilot file: missing metrics section");
  while (std::getline(is, line) && line != "end-metrics") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("pilot file: malformed metric '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "seed") data.metrics.seed = std::stoull(value);
    else if (key == "iterations") data.metrics.iterations = std::stol(value);
    else if (key == "converged") data.metrics.converged = value != "0";
    else if (key == "initial_worst_peak_db") data.metrics.initial_worst_peak_db = std::stod(value);
    else if (key == "final_worst_peak_db") data.metrics.final_worst_peak_db = std::stod(value);
    else if (key == "mixture_worst_db") data.metrics.mixture_worst_db = std::stod(value);
    else if (key == "papr_worst_db") data.metrics.papr_worst_db = std::stod(value);
    else throw IoError("pilot file: unknown metric '" + key + "'");
  }
  if (line != "end-metrics") throw IoError("pilot file: unterminated metrics section");

  if (!std::getline(is, line) || line != "begin-payload")
    throw IoError("pilot file: missing payload section");

  const int n = data.config.optimizer.n_pilots;
  const Eigen::Index dim = data.config.dims.preimage_dim();
  const Eigen::Index n_sc = data.config.dims.n_sc;
  const Eigen::Index n_fft = data.config.dims.n_fft;
  for (int p = 0; p < n; ++p) {
    if (binary) {
      data.preimages.push_back(detail::read_vector_binary(is, dim));
      data.fd_pilots.push_back(detail::read_vector_binary(is, n_sc));
      data.td_pilots.push_back(detail::read_vector_binary(is, n_fft));
    } else {
      data.preimages.push_back(detail::read_vector_text(is, "preimage", static_cast<size_t>(p), dim));
      data.fd_pilots.push_back(detail::read_vector_text(is, "fd", static_cast<size_t>(p), n_sc));
      data.td_pilots.push_back(detail::read_vector_text(is, "td", static_cast<size_t>(p), n_fft));
    }
  }
  if (!binary) {
    if (!std::getline(is, line) || line != "end-payload")
      throw IoError("pilot file: unterminated payload section");
  }
  return data;
}

}  // namespace ztpilot
