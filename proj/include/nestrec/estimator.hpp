#pragma once

#include <cstdint>
#include <optional>

#include "nestrec/core.hpp"
#include "nestrec/model.hpp"
#include "nestrec/operators.hpp"
#include "nestrec/solvers.hpp"

namespace nestrec {

enum class StageMethod { admm, iht };

struct RecoveryConfig {
  /// Stage-1 radius constant: sigma * sqrt(n + c1 r (m v p2)).
  double c1 = 4.0;
  /// Stage-2 radius constant: c2 * sigma * sqrt(r (m v p2)).
  double c2 = 4.0;
  /// Project the final estimate onto rank-r, k-row-sparse matrices.
  bool postprocess = true;
  StageMethod stage1 = StageMethod::admm;
  StageMethod stage2 = StageMethod::admm;
  SolverConfig solver = SolverConfig::noisy();

  void validate() const;
};

struct RecoveryResult {
  Matrix xhat;
  Matrix bhat;
  SolveReport stage1_report;
  SolveReport stage2_report;
  /// Column-sparsity stage of the doubly-sparse pipeline, when it ran.
  std::optional<SolveReport> stage3_report;
  std::optional<double> frobenius_error;
  /// ||Xhat - X*||_F^2 / sigma^2, set when truth is given and sigma > 0.
  std::optional<double> normalized_sq_error;

  bool converged() const {
    return stage1_report.converged && stage2_report.converged &&
           (!stage3_report || stage3_report->converged);
  }
};

double stage1_radius(double sigma, Index n, Index r, Index m, Index p2, double c1);
double stage2_radius(double sigma, Index r, Index m, Index p2, double c2);

/// Low-rank stage on W, then row-sparse stage on Psi, then optional
/// projection. `truth`, when given, fills the error fields.
RecoveryResult recover(const Vector& y, const NestedOperator& op, const ProblemDims& dims,
                       double sigma, const RecoveryConfig& cfg, const Matrix* truth = nullptr);

/// Doubly-sparse variant for A(X) = W(Psi1 X Psi2^T): low-rank stage on W,
/// row-sparse stage against Psi1, then a column-sparse stage against Psi2 on
/// the transpose. `k2` bounds the number of nonzero columns. When Psi2 is an
/// exact identity the column stage is skipped.
RecoveryResult recover_doubly_sparse(const Vector& y, const NestedOperator& op,
                                     const ProblemDims& dims, Index k2, double sigma,
                                     const RecoveryConfig& cfg, const Matrix* truth = nullptr);

struct NoiseBandResult {
  double empirical = 0.0;
  /// 1 - 2 exp(-min(nu/4, nu^2/(16 n))).
  double analytic_floor = 0.0;
  Index trials = 0;
  Index hits = 0;
};

/// Fraction of draws z ~ N(0, sigma^2 I_n) with
/// sigma^2 (n - nu) <= ||z||^2 <= sigma^2 (n + nu).
NoiseBandResult noise_band_check(double sigma, Index n, double nu, Index trials,
                                 std::uint64_t seed);

} // namespace nestrec
