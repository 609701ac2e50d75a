#pragma once

// Zero-tail subspace construction. The unitary IFFT matrix W is partitioned
// into the occupied-carrier columns W1 and its bottom T rows W21; the right
// singular vectors of W21 with (numerically) zero singular value span the
// preimage space V0. Every preimage x then maps to a frequency-domain pilot
// y = V0 x whose time-domain image A x = W1 V0 x ends in T zero samples.
//
// Because W1 has orthonormal columns and V0 is an orthonormal basis, A has
// orthonormal columns, so the SVD-based least-squares inverse of A collapses
// to its adjoint: pinv(A) = A^H.

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fft.hpp"
#include "io.hpp"
#include "types.hpp"

namespace ztpilot {

struct SubspaceDims {
  int n_fft = 0;    // FFT length, samples
  int n_sc = 0;     // occupied subcarriers
  int t_zero = 0;   // zero-tail length, samples

  int preimage_dim() const { return n_sc - t_zero; }

  void validate() const {
    if (n_fft <= 0) throw std::invalid_argument("n_fft must be positive");
    if (n_sc <= 0) throw std::invalid_argument("n_sc must be positive");
    if (n_sc > n_fft) throw std::invalid_argument("n_sc must not exceed n_fft");
    if (t_zero < 0) throw std::invalid_argument("t_zero must be non-negative");
    if (t_zero >= n_sc)
      throw std::invalid_argument("t_zero must be smaller than n_sc (empty preimage space)");
  }

  bool operator==(const SubspaceDims&) const = default;
};

// Contiguous block of n_sc carriers centered on the grid. Offsets run from
// -floor(n_sc/2) to ceil(n_sc/2)-1, so DC (bin 0) is always occupied and
// negative frequencies wrap to the top bins, as in standard OFDM mapping.
inline std::vector<int> contiguous_centered_placement(int n_fft, int n_sc) {
  std::vector<int> placement(static_cast<size_t>(n_sc));
  const int lo = -(n_sc / 2);
  for (int i = 0; i < n_sc; ++i) placement[static_cast<size_t>(i)] = ((lo + i) % n_fft + n_fft) % n_fft;
  return placement;
}

// Entry of the unitary IFFT matrix, W[k][m] = e^{+2pi i k m / N} / sqrt(N).
inline cxd ifft_matrix_entry(int k, int m, int n_fft) {
  const double phase = 2.0 * kPi * static_cast<double>(static_cast<long long>(k) * m % n_fft) /
                       static_cast<double>(n_fft);
  return std::polar(1.0 / std::sqrt(static_cast<double>(n_fft)), phase);
}

class ZeroTailSubspace {
 public:
  // Dense A / pinv(A) are materialized only when n_fft * preimage_dim stays
  // within this entry budget (2^6 x 2^6); larger problems use the factored
  // V0-then-FFT path. Both paths agree to 1e-10.
  static constexpr std::size_t kDefaultDenseBudget = std::size_t{1} << 12;

  static ZeroTailSubspace build(const SubspaceDims& dims, std::vector<int> placement,
                                double singular_floor = 0.0,
                                std::size_t dense_budget = kDefaultDenseBudget) {
    dims.validate();
    validate_placement(dims, placement);

    ZeroTailSubspace sub;
    sub.dims_ = dims;
    sub.placement_ = std::move(placement);

    if (dims.t_zero == 0) {
      // No tail constraint: the nullspace is the whole preimage space.
      sub.v0_ = cmat::Identity(dims.n_sc, dims.n_sc);
      sub.floor_ = singular_floor > 0.0 ? singular_floor : std::numeric_limits<double>::epsilon();
    } else {
      cmat w21(dims.t_zero, dims.n_sc);
      for (int r = 0; r < dims.t_zero; ++r) {
        const int row = dims.n_fft - dims.t_zero + r;
        for (int c = 0; c < dims.n_sc; ++c)
          w21(r, c) = ifft_matrix_entry(row, sub.placement_[static_cast<size_t>(c)], dims.n_fft);
      }
      Eigen::BDCSVD<cmat> svd(w21, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double smax = sv.size() > 0 ? sv(0) : 0.0;
      sub.floor_ = singular_floor > 0.0
                       ? singular_floor
                       : static_cast<double>(std::max(dims.t_zero, dims.n_sc)) *
                             std::numeric_limits<double>::epsilon() * smax;

      // Columns of V beyond the computed singular values carry implicit zeros.
      int rank = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) >= sub.floor_) ++rank;
      const int nullity = dims.n_sc - rank;
      if (nullity < dims.preimage_dim()) {
        const double kept = rank > 0 ? sv(rank - 1) : 0.0;
        const double dropped = rank < sv.size() ? sv(rank) : 0.0;
        throw DegenerateNullspace(
            "nullspace of W21 smaller than n_sc - t_zero: rank " + std::to_string(rank) +
            " > t_zero " + std::to_string(dims.t_zero) + "; singular-value gap [" +
            std::to_string(dropped) + ", " + std::to_string(kept) + "] vs floor " +
            std::to_string(sub.floor_));
      }
      sub.v0_ = svd.matrixV().rightCols(dims.preimage_dim());
    }

    sub.materialize_dense(dense_budget);
    return sub;
  }

  static ZeroTailSubspace build(const SubspaceDims& dims) {
    return build(dims, contiguous_centered_placement(dims.n_fft, dims.n_sc));
  }

  const SubspaceDims& dims() const { return dims_; }
  const std::vector<int>& carrier_placement() const { return placement_; }
  const cmat& v0() const { return v0_; }
  double singular_floor() const { return floor_; }
  bool has_dense_ops() const { return a_.size() > 0; }

  // y_fd = V0 x, the frequency-domain pilot on the occupied carriers.
  cvec to_frequency_domain(const cvec& x) const {
    check_preimage(x);
    return v0_ * x;
  }

  // A x = W1 V0 x, the time-domain pilot (last t_zero samples ~ 0).
  cvec to_time_domain(const cvec& x) const {
    check_preimage(x);
    if (has_dense_ops()) return a_ * x;
    return scatter_ifft(v0_ * x);
  }

  // Minimum-norm least-squares preimage of a time-domain vector; equals the
  // adjoint apply since A has orthonormal columns.
  cvec pinv_apply(const cvec& y_td) const {
    check_td(y_td);
    if (has_dense_ops()) return apinv_ * y_td;
    return v0_.adjoint() * gather_fft(y_td);
  }

  cvec adjoint_apply(const cvec& y_td) const { return pinv_apply(y_td); }

  // Dense operators, materialized on demand. Small grids multiply out the
  // explicit W1 matrix; larger ones go column-by-column through the FFT.
  cmat dense_a() const {
    if (has_dense_ops()) return a_;
    if (static_cast<std::size_t>(dims_.n_fft) * static_cast<std::size_t>(dims_.n_sc) <=
        (std::size_t{1} << 22))
      return w1_matrix() * v0_;
    cmat a(dims_.n_fft, dims_.preimage_dim());
    for (int j = 0; j < dims_.preimage_dim(); ++j) a.col(j) = scatter_ifft(v0_.col(j));
    return a;
  }

  cmat dense_pinv() const {
    if (has_dense_ops()) return apinv_;
    return dense_a().adjoint();
  }

  // --- binary cache ("ZTSS"): avoids recomputing the SVD at full scale ---

  void save_cache(const std::string& path) const {
    const cmat apinv = dense_pinv();
    atomic_write(
        path,
        [&](std::ostream& os) {
          os.write("ZTSS", 4);
          write_u32_le(os, kCacheVersion);
          write_u32_le(os, static_cast<std::uint32_t>(dims_.n_fft));
          write_u32_le(os, static_cast<std::uint32_t>(dims_.n_sc));
          write_u32_le(os, static_cast<std::uint32_t>(dims_.t_zero));
          write_f64_le(os, floor_);
          write_matrix(os, v0_);
          write_matrix(os, apinv);
        },
        /*binary=*/true);
  }

  // The cache stores dims and operators only; the carrier placement that
  // produced it is supplied by the caller and must match in size.
  static ZeroTailSubspace load_cache(const std::string& path, std::vector<int> placement,
                                     std::size_t dense_budget = kDefaultDenseBudget) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open subspace cache: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "ZTSS")
      throw IoError("bad magic in subspace cache: " + path);
    const std::uint32_t version = read_u32_le(is);
    if (version != kCacheVersion)
      throw IoError("unsupported subspace cache version " + std::to_string(version));

    ZeroTailSubspace sub;
    sub.dims_.n_fft = static_cast<int>(read_u32_le(is));
    sub.dims_.n_sc = static_cast<int>(read_u32_le(is));
    sub.dims_.t_zero = static_cast<int>(read_u32_le(is));
    sub.floor_ = read_f64_le(is);
    sub.dims_.validate();
    validate_placement(sub.dims_, placement);
    sub.placement_ = std::move(placement);
    sub.v0_ = read_matrix(is, sub.dims_.n_sc, sub.dims_.preimage_dim());
    cmat apinv = read_matrix(is, sub.dims_.preimage_dim(), sub.dims_.n_fft);
    if (!is) throw IoError("truncated subspace cache: " + path);
    if (static_cast<std::size_t>(sub.dims_.n_fft) *
            static_cast<std::size_t>(sub.dims_.preimage_dim()) <=
        dense_budget) {
      sub.a_ = apinv.adjoint();
      sub.apinv_ = std::move(apinv);
    }
    return sub;
  }

 private:
  static constexpr std::uint32_t kCacheVersion = 1;

  static void validate_placement(const SubspaceDims& dims, const std::vector<int>& placement) {
    if (static_cast<int>(placement.size()) != dims.n_sc)
      throw InvalidPlacement("carrier placement must list exactly n_sc indices");
    std::vector<char> seen(static_cast<size_t>(dims.n_fft), 0);
    for (int idx : placement) {
      if (idx < 0 || idx >= dims.n_fft)
        throw InvalidPlacement("carrier index out of range: " + std::to_string(idx));
      if (seen[static_cast<size_t>(idx)])
        throw InvalidPlacement("duplicate carrier index: " + std::to_string(idx));
      seen[static_cast<size_t>(idx)] = 1;
    }
  }

  void check_preimage(const cvec& x) const {
    if (x.size() != dims_.preimage_dim())
      throw DimensionMismatch("preimage length " + std::to_string(x.size()) + " != " +
                              std::to_string(dims_.preimage_dim()));
  }

  void check_td(const cvec& y) const {
    if (y.size() != dims_.n_fft)
      throw DimensionMismatch("TD length " + std::to_string(y.size()) + " != n_fft " +
                              std::to_string(dims_.n_fft));
  }

  cvec scatter_ifft(const cvec& fd) const {
    cvec grid = cvec::Zero(dims_.n_fft);
    for (int i = 0; i < dims_.n_sc; ++i) grid(placement_[static_cast<size_t>(i)]) = fd(i);
    return unitary_ifft(grid);
  }

  cvec gather_fft(const cvec& td) const {
    const cvec spec = unitary_fft(td);
    cvec fd(dims_.n_sc);
    for (int i = 0; i < dims_.n_sc; ++i) fd(i) = spec(placement_[static_cast<size_t>(i)]);
    return fd;
  }

  cmat w1_matrix() const {
    cmat w1(dims_.n_fft, dims_.n_sc);
    for (int k = 0; k < dims_.n_fft; ++k)
      for (int c = 0; c < dims_.n_sc; ++c)
        w1(k, c) = ifft_matrix_entry(k, placement_[static_cast<size_t>(c)], dims_.n_fft);
    return w1;
  }

  void materialize_dense(std::size_t dense_budget) {
    const std::size_t entries = static_cast<std::size_t>(dims_.n_fft) *
                                static_cast<std::size_t>(dims_.preimage_dim());
    if (entries == 0 || entries > dense_budget) return;
    a_ = w1_matrix() * v0_;
    apinv_ = a_.adjoint();
  }

  static void write_matrix(std::ostream& os, const cmat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        write_f64_le(os, m(r, c).real());
        write_f64_le(os, m(r, c).imag());
      }
  }

  static cmat read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    cmat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double re = read_f64_le(is);
        const double im = read_f64_le(is);
        m(r, c) = cxd(re, im);
      }
    return m;
  }

  SubspaceDims dims_;
  std::vector<int> placement_;
  cmat v0_;
  cmat a_;      // dense A, empty above the budget
  cmat apinv_;  // dense pinv(A) = A^H, empty above the budget
  double floor_ = 0.0;
};

}  // namespace ztpilot
