#include "nestrec/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "nestrec/proximal.hpp"
#include "nestrec/random.hpp"

namespace nestrec {

void RecoveryConfig::validate() const {
  if (!(c1 > 0.0)) throw DomainError("RecoveryConfig: c1 must be > 0");
  if (!(c2 > 0.0)) throw DomainError("RecoveryConfig: c2 must be > 0");
  solver.validate();
}

double stage1_radius(double sigma, Index n, Index r, Index m, Index p2, double c1) {
  if (!(sigma >= 0.0)) throw DomainError("stage1_radius: sigma must be >= 0");
  const double width = static_cast<double>(std::max(m, p2));
  return sigma * std::sqrt(static_cast<double>(n) + c1 * static_cast<double>(r) * width);
}

double stage2_radius(double sigma, Index r, Index m, Index p2, double c2) {
  if (!(sigma >= 0.0)) throw DomainError("stage2_radius: sigma must be >= 0");
  const double width = static_cast<double>(std::max(m, p2));
  return c2 * sigma * std::sqrt(static_cast<double>(r) * width);
}

namespace {

StageSolution run_lowrank(const RankOperator& w, const Vector& y, double radius, Index r,
                          const RecoveryConfig& cfg) {
  if (cfg.stage1 == StageMethod::iht) {
    StageSolution sol = iht_lowrank(w, y, r, cfg.solver);
    sol.report.radius = radius;
    sol.report.constraint_violation = std::max(0.0, sol.report.primal_residual - radius);
    return sol;
  }
  return solve_lowrank_stage(w, y, radius, cfg.solver);
}

StageSolution run_rowsparse(const SensingMatrix& psi, const Matrix& b, double radius, Index k,
                            const RecoveryConfig& cfg) {
  if (cfg.stage2 == StageMethod::iht) {
    StageSolution sol = iht_rowsparse(psi, b, k, cfg.solver);
    sol.report.radius = radius;
    sol.report.constraint_violation = std::max(0.0, sol.report.primal_residual - radius);
    return sol;
  }
  return solve_rowsparse_stage(psi, b, radius, cfg.solver);
}

void check_consistent(const Vector& y, const NestedOperator& op, const ProblemDims& dims) {
  dims.validate();
  op.validate();
  if (op.input_rows() != dims.p1 || op.input_cols() != dims.p2 || op.psi.rows() != dims.m ||
      op.n() != dims.n || y.size() != dims.n)
    throw DimensionError("recover: operator, measurements and dims disagree");
}

void fill_errors(RecoveryResult& result, const Matrix* truth, double sigma) {
  if (!truth) return;
  if (truth->rows() != result.xhat.rows() || truth->cols() != result.xhat.cols())
    throw DimensionError("recover: truth has the wrong shape");
  const double err = (result.xhat - *truth).norm();
  result.frobenius_error = err;
  if (sigma > 0.0) result.normalized_sq_error = err * err / (sigma * sigma);
}

} // namespace

RecoveryResult recover(const Vector& y, const NestedOperator& op, const ProblemDims& dims,
                       double sigma, const RecoveryConfig& cfg, const Matrix* truth) {
  cfg.validate();
  check_consistent(y, op, dims);
  if (op.psi2 && !(op.psi2->rows() == op.psi2->cols() && op.psi2->data.isIdentity(0.0)))
    throw DimensionError("recover: operator has a non-identity Psi2; use recover_doubly_sparse");
  const Index width_cols = op.w.cols();

  RecoveryResult result;
  const double r1 = stage1_radius(sigma, dims.n, dims.r, dims.m, width_cols, cfg.c1);
  StageSolution s1 = run_lowrank(op.w, y, r1, dims.r, cfg);
  result.bhat = std::move(s1.estimate);
  result.stage1_report = s1.report;

  const double r2 = stage2_radius(sigma, dims.r, dims.m, width_cols, cfg.c2);
  StageSolution s2 = run_rowsparse(op.psi, result.bhat, r2, dims.k, cfg);
  result.xhat = std::move(s2.estimate);
  result.stage2_report = s2.report;

  if (cfg.postprocess) result.xhat = top_k_rows(best_rank_r(result.xhat, dims.r), dims.k);
  fill_errors(result, truth, sigma);
  return result;
}

RecoveryResult recover_doubly_sparse(const Vector& y, const NestedOperator& op,
                                     const ProblemDims& dims, Index k2, double sigma,
                                     const RecoveryConfig& cfg, const Matrix* truth) {
  cfg.validate();
  if (!op.psi2) throw DimensionError("recover_doubly_sparse: operator has no Psi2");
  check_consistent(y, op, dims);
  if (k2 < dims.r || k2 > dims.p2) throw DimensionError("recover_doubly_sparse: need r <= k2 <= p2");
  const SensingMatrix& psi2 = *op.psi2;
  const Index m2 = psi2.rows();

  RecoveryResult result;
  const double r1 = stage1_radius(sigma, dims.n, dims.r, dims.m, m2, cfg.c1);
  StageSolution s1 = run_lowrank(op.w, y, r1, dims.r, cfg);
  result.bhat = std::move(s1.estimate);
  result.stage1_report = s1.report;

  // Rows: Psi1 Y = Bhat with Y = X Psi2^T (p1 x m2).
  const double r2 = stage2_radius(sigma, dims.r, dims.m, m2, cfg.c2);
  StageSolution s2 = run_rowsparse(op.psi, result.bhat, r2, dims.k, cfg);
  result.stage2_report = s2.report;

  const bool identity = psi2.rows() == psi2.cols() && psi2.data.isIdentity(0.0);
  if (identity) {
    result.xhat = std::move(s2.estimate);
  } else {
    // Columns: Psi2 X^T = Y^T.
    const Matrix yt = s2.estimate.transpose();
    StageSolution s3 = run_rowsparse(psi2, yt, 2.0 * r2, k2, cfg);
    result.stage3_report = s3.report;
    result.xhat = s3.estimate.transpose();
  }

  if (cfg.postprocess) {
    result.xhat = top_k_rows(best_rank_r(result.xhat, dims.r), dims.k);
    result.xhat = top_k_rows(result.xhat.transpose(), k2).transpose();
  }
  fill_errors(result, truth, sigma);
  return result;
}

NoiseBandResult noise_band_check(double sigma, Index n, double nu, Index trials,
                                 std::uint64_t seed) {
  if (!(nu > 0.0)) throw DomainError("noise_band_check: nu must be > 0");
  if (!(sigma >= 0.0)) throw DomainError("noise_band_check: sigma must be >= 0");
  if (n < 1 || trials < 1) throw DimensionError("noise_band_check: n and trials must be positive");
  NoiseBandResult out;
  out.trials = trials;
  const double dn = static_cast<double>(n);
  out.analytic_floor = 1.0 - 2.0 * std::exp(-std::min(nu / 4.0, nu * nu / (16.0 * dn)));
  const double s2 = sigma * sigma;
  const double lower = s2 * (dn - nu);
  const double upper = s2 * (dn + nu);
  for (Index t = 0; t < trials; ++t) {
    Engine engine = make_engine(seed, "noise-band", static_cast<std::uint64_t>(t));
    const double energy = gaussian_vector(n, sigma, engine).squaredNorm();
    if (lower <= energy && energy <= upper) ++out.hits;
  }
  out.empirical = static_cast<double>(out.hits) / static_cast<double>(trials);
  return out;
}

} // namespace nestrec
