#pragma once

#include <functional>

#include "nestrec/core.hpp"
#include "nestrec/operators.hpp"

namespace nestrec {

struct SolverConfig {
  Index max_iters = 2000;
  /// Relative stopping tolerance (ADMM residuals, IHT relative change).
  double tol = 1e-8;
  /// Initial ADMM penalty; rebalanced during the run when adaptive_rho is set.
  double admm_rho = 1.0;
  bool adaptive_rho = true;
  /// Constraint radii are never taken below radius_floor * ||data||.
  double radius_floor = 1e-9;
  /// IHT step multiplier. With iht_normalized the multiplier scales the
  /// exact line-search step on the current structure's tangent space.
  double iht_step = 1.0;
  bool iht_normalized = true;

  static SolverConfig noise_free() { return {}; }
  static SolverConfig noisy() {
    SolverConfig cfg;
    cfg.tol = 1e-6;
    return cfg;
  }

  /// Throws DomainError on tol <= 0, max_iters < 1 or admm_rho <= 0.
  void validate() const;
};

struct SolveReport {
  Index iters_used = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// max(0, ||residual|| - radius) at the returned estimate.
  double constraint_violation = 0.0;
  double objective = 0.0;
  bool converged = false;
  double radius = 0.0;
};

struct StageSolution {
  Matrix estimate;
  SolveReport report;
};

/// Called with every IHT iterate.
using IterateObserver = std::function<void(const Matrix&)>;

/// min ||B||_*  s.t.  ||W(B) - y||_2 <= radius, by ADMM on the splitting
/// {B = Z (singular-value shrinkage), W(B) = v (ball projection)}.
/// Returns the shrinkage variable, which is exactly low rank. On
/// non-convergence the iterate with the smallest scaled residual is returned
/// and report.converged is false.
StageSolution solve_lowrank_stage(const RankOperator& w, const Vector& y, double radius,
                                  const SolverConfig& cfg);

/// min ||X||_{1,2}  s.t.  ||Psi X - B||_F <= radius; same ADMM scheme with
/// row-wise shrinkage.
StageSolution solve_rowsparse_stage(const SensingMatrix& psi, const Matrix& b, double radius,
                                    const SolverConfig& cfg);

/// Singular value projection: B <- best_rank_r(B + step * W^*(y - W(B))).
/// Throws NumericalError when ||B|| exceeds 1e6 ||y||.
StageSolution iht_lowrank(const RankOperator& w, const Vector& y, Index r,
                          const SolverConfig& cfg, const IterateObserver& observer = {});

/// Hard-thresholded Landweber iteration onto k-row-sparse matrices.
StageSolution iht_rowsparse(const SensingMatrix& psi, const Matrix& b, Index k,
                            const SolverConfig& cfg, const IterateObserver& observer = {});

} // namespace nestrec
