#pragma once

// CSV emitters for traces, correlation profiles, and pilot vectors. CSV is
// the universal plot-data format here; no plotting dependency ships with the
// toolkit.

#include <cstdio>
#include <ostream>
#include <string>

#include "correlation.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "types.hpp"

namespace ztpilot {

namespace detail {
inline std::string csv_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace) {
  os << "iteration,pilot,worst_peak_db,step_size,wall_ms";
  if (trace.has_papr) os << ",papr_db";
  os << "\n";
  for (const auto& r : trace.records) {
    os << r.iteration << "," << r.pilot << "," << detail::csv_num(r.worst_peak_db) << ","
       << detail::csv_num(r.step_size) << "," << detail::csv_num(r.wall_ms);
    if (trace.has_papr) os << "," << detail::csv_num(r.papr_db);
    os << "\n";
  }
}

inline void write_trace_csv(const std::string& path, const ConvergenceTrace& trace) {
  atomic_write(path, [&](std::ostream& os) { write_trace_csv(os, trace); });
}

inline void write_profile_csv(std::ostream& os, const CorrelationProfile& profile) {
  os << "lag,value,is_excluded,component\n";
  for (std::size_t i = 0; i < profile.lags.size(); ++i)
    os << profile.lags[i] << "," << detail::csv_num(profile.values[i]) << ","
       << (profile.excluded[i] ? 1 : 0) << "," << profile.component << "\n";
}

inline void write_profile_csv(const std::string& path, const CorrelationProfile& profile) {
  atomic_write(path, [&](std::ostream& os) { write_profile_csv(os, profile); });
}

inline void write_vector_csv(std::ostream& os, const cvec& v) {
  os << "index,re,im,abs\n";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << i << "," << detail::csv_num(v(i).real()) << "," << detail::csv_num(v(i).imag()) << ","
       << detail::csv_num(std::abs(v(i))) << "\n";
}

inline void write_vector_csv(const std::string& path, const cvec& v) {
  atomic_write(path, [&](std::ostream& os) { write_vector_csv(os, v); });
}

}  // namespace ztpilot
