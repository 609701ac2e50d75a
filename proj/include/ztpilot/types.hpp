#pragma once

// Shared aliases and error types for the zero-tail pilot toolkit.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ztpilot {

using cxd = std::complex<double>;
using cvec = Eigen::VectorXcd;
using crow = Eigen::RowVectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidPlacement : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateNullspace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LagOutsideWindow : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ZeroInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidChannel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoSidePeaks : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the config parser; carries the offending line for diagnostics.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
  int line;
};

// Power ratio in dB; clamped so degenerate zero peaks stay finite in reports.
inline double power_db(double ratio) {
  constexpr double floor = 1e-40;
  return 10.0 * std::log10(ratio < floor ? floor : ratio);
}

}  // namespace ztpilot
