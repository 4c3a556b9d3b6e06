#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "nestrec/core.hpp"

namespace nestrec {

/// Column-compressing matrix Psi (m x p1).
struct SensingMatrix {
  Matrix data;
  double variance_scale = 1.0;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
};

/// m x p1 matrix with iid N(0, 1/m) entries.
SensingMatrix gaussian_sensing(Index p1, Index m, std::uint64_t seed);

/// Identity sensing matrix of size p.
SensingMatrix identity_sensing(Index p);

enum class RankOperatorKind { gaussian_dense, rank_one_quadratic };

/// Linear map from rows() x cols() matrices to R^n given by inner products
/// with n frames. Gaussian frames are stored explicitly; rank-one frames
/// w_i w_i^T are kept as their generating vectors and also expanded so that
/// solvers can treat both kinds as an explicit (rows*cols) x n frame matrix.
class RankOperator {
public:
  /// `frames` is (m*p2) x n, column i holding vec(W_i) in column-major order.
  static RankOperator dense(Matrix frames, Index m, Index p2, double variance_scale);

  /// `probes` is m x n, column i holding w_i. Consumes m x m matrices.
  static RankOperator rank_one(Matrix probes);

  RankOperatorKind kind() const { return kind_; }
  Index n() const { return frames_.cols(); }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  double variance_scale() const { return variance_scale_; }

  Vector apply(const Matrix& b) const;
  Matrix adjoint(const Vector& y) const;

  /// Frame i as a rows() x cols() matrix.
  Matrix frame(Index i) const;

  /// (rows*cols) x n; column i is vec(frame(i)).
  const Matrix& frame_matrix() const { return frames_; }

  /// m x n generating vectors of a rank-one operator (empty for dense).
  const Matrix& probes() const { return probes_; }

private:
  RankOperatorKind kind_ = RankOperatorKind::gaussian_dense;
  Index rows_ = 0;
  Index cols_ = 0;
  double variance_scale_ = 1.0;
  Matrix frames_;
  Matrix probes_;
};

/// n frames of size m x p2 with iid N(0, 1/n) entries.
RankOperator gaussian_rank_operator(Index m, Index p2, Index n, std::uint64_t seed);

/// n standard-normal probe vectors of length m.
RankOperator gaussian_rank_one_operator(Index m, Index n, std::uint64_t seed);

/// A(X) = W(Psi X) or, with psi2, A(X) = W(Psi X Psi2^T).
struct NestedOperator {
  SensingMatrix psi;
  RankOperator w;
  std::optional<SensingMatrix> psi2;

  Index input_rows() const { return psi.cols(); }
  Index input_cols() const;
  Index n() const { return w.n(); }

  /// Throws DimensionError when the inner dimensions disagree.
  void validate() const;
};

/// Inner compression Psi X (Psi2^T).
Matrix compress(const NestedOperator& op, const Matrix& x);

Vector apply(const NestedOperator& op, const Matrix& x);

/// A^*(y) = Psi^T W^*(y) (Psi2).
Matrix adjoint(const NestedOperator& op, const Vector& y);

enum class RipStructureKind { row_sparse, low_rank };

struct RipStructure {
  RipStructureKind kind = RipStructureKind::row_sparse;
  Index level = 1;

  static RipStructure row_sparse(Index k) { return {RipStructureKind::row_sparse, k}; }
  static RipStructure low_rank(Index r) { return {RipStructureKind::low_rank, r}; }
};

/// Empirical restricted-isometry probe. delta_lower_bound is the largest
/// observed |‖op(X)‖² / ‖X‖² − 1| over random unit-norm structured X; it is a
/// lower bound on the true constant, never a certificate.
struct RipEstimate {
  RipStructure structure;
  double delta_lower_bound = 0.0;
  Index trials = 0;
  double worst_case_ratio = 1.0;
};

/// Probes Psi with unit-Frobenius p1 x cols matrices having k nonzero rows.
RipEstimate estimate_rip(const SensingMatrix& psi, Index k, Index cols, Index trials,
                         std::uint64_t seed);

/// Probes W with unit-Frobenius rank-r matrices.
RipEstimate estimate_rip(const RankOperator& w, Index r, Index trials, std::uint64_t seed);

/// Row-sparse structure probes Psi (with W's column count); low-rank probes W.
RipEstimate estimate_rip(const NestedOperator& op, RipStructure structure, Index trials,
                         std::uint64_t seed);

/// Union of two probe sets.
RipEstimate merge(const RipEstimate& a, const RipEstimate& b);

/// (1 + delta_W)(1 + delta_Psi): working value of the upper isometry constant
/// of the nested operator over simultaneously structured matrices.
double gamma_bound(const RipEstimate& psi_estimate, const RipEstimate& w_estimate);

/// Writes manifest.json, psi.nrm, optional psi2.nrm and one NRM1 file per
/// frame under frames/ (rank-one frames are stored as m x 1 vectors).
void save_operator(const std::filesystem::path& dir, const NestedOperator& op,
                   std::uint64_t seed);

NestedOperator load_operator(const std::filesystem::path& dir);

} // namespace nestrec
