#include "nestrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nestrec/proximal.hpp"

namespace nestrec {

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw DomainError("SolverConfig: tol must be > 0");
  if (max_iters < 1) throw DomainError("SolverConfig: max_iters must be >= 1");
  if (!(admm_rho > 0.0)) throw DomainError("SolverConfig: admm_rho must be > 0");
  if (!(radius_floor >= 0.0)) throw DomainError("SolverConfig: radius_floor must be >= 0");
  if (!(iht_step > 0.0)) throw DomainError("SolverConfig: iht_step must be > 0");
}

namespace {

// Linear map A x = a_t^T x acting on the columns of x. Solves
// (I + A^T A) b = a + A^T c and returns A b alongside, using two passes over
// a_t per call: Woodbury on the smaller Gram matrix A A^T when A is wide,
// a direct Cholesky of I + A^T A otherwise.
class QuadraticSplit {
public:
  explicit QuadraticSplit(const Matrix& a_t) : a_t_(a_t), woodbury_(a_t.cols() <= a_t.rows()) {
    const Index dim = woodbury_ ? a_t.cols() : a_t.rows();
    gram_ = Matrix::Zero(dim, dim);
    if (woodbury_)
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(a_t.transpose());
    else
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(a_t);
    gram_ = gram_.selfadjointView<Eigen::Lower>();
    chol_.compute(Matrix::Identity(dim, dim) + gram_);
    if (chol_.info() != Eigen::Success) throw NumericalError("ADMM factorization failed");
  }

  Matrix apply(const Matrix& x) const { return a_t_.transpose() * x; }

  void solve_and_apply(const Matrix& a, const Matrix& c, Matrix& b, Matrix& ab) const {
    if (woodbury_) {
      const Matrix a_rhs = a_t_.transpose() * a + gram_ * c;
      const Matrix t = chol_.solve(a_rhs);
      b = a + a_t_ * (c - t);
      ab = a_rhs - gram_ * t;
    } else {
      b = chol_.solve(a + a_t_ * c);
      ab = a_t_.transpose() * b;
    }
  }

private:
  const Matrix& a_t_;
  bool woodbury_;
  Matrix gram_;
  Eigen::LLT<Matrix> chol_;
};

double joint_norm(const Matrix& a, const Matrix& b) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

double effective_radius(double radius, double data_norm, const SolverConfig& cfg) {
  if (!(radius >= 0.0)) throw DomainError("constraint radius must be >= 0");
  return std::max(radius, cfg.radius_floor * data_norm);
}

// min norm(x) s.t. ||A x - center|| <= radius. `prox(v, tau)` is the prox of
// tau * norm.
template <typename Prox, typename Norm>
StageSolution admm_constrained(const QuadraticSplit& split, const Matrix& center, double radius,
                               Index in_rows, Index in_cols, Prox prox, Norm norm,
                               const SolverConfig& cfg) {
  const Index out_rows = center.rows();
  const Index q = in_cols;
  Matrix z = Matrix::Zero(in_rows, q);
  Matrix u_z = Matrix::Zero(in_rows, q);
  Matrix v = project_l2_ball(Matrix::Zero(out_rows, q), center, radius);
  Matrix u_v = Matrix::Zero(out_rows, q);
  Matrix b, ab;

  double rho = cfg.admm_rho;
  const double abs_tol = 1e-14 * (1.0 + center.norm());

  StageSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  SolveReport report;
  report.radius = radius;

  for (Index it = 1; it <= cfg.max_iters; ++it) {
    split.solve_and_apply(z - u_z, v - u_v, b, ab);
    const Matrix z_prev = z;
    const Matrix v_prev = v;
    z = prox(b + u_z, 1.0 / rho);
    v = project_l2_ball(ab + u_v, center, radius);
    u_z += b - z;
    u_v += ab - v;

    const double primal = joint_norm(b - z, ab - v);
    const double dual = rho * joint_norm(z - z_prev, v - v_prev);
    const double eps_primal = cfg.tol * std::max(joint_norm(b, ab), joint_norm(z, v)) + abs_tol;
    const double eps_dual = cfg.tol * rho * joint_norm(u_z, u_v) + abs_tol;
    const double score = std::max(primal / eps_primal, dual / eps_dual);

    report.iters_used = it;
    report.primal_residual = primal;
    report.dual_residual = dual;
    if (score < best_score) {
      best_score = score;
      best.estimate = z;
      best.report = report;
    }
    if (score <= 1.0) {
      best.estimate = z;
      best.report = report;
      best.report.converged = true;
      break;
    }
    if (cfg.adaptive_rho && it % 5 == 0) {
      const double pr = primal / eps_primal;
      const double du = dual / eps_dual;
      if (pr > 10.0 * du) {
        rho *= 2.0;
        u_z /= 2.0;
        u_v /= 2.0;
      } else if (du > 10.0 * pr) {
        rho /= 2.0;
        u_z *= 2.0;
        u_v *= 2.0;
      }
    }
  }
  best.report.iters_used = report.iters_used;
  best.report.objective = norm(best.estimate);
  const double misfit = (split.apply(best.estimate) - center).norm();
  best.report.constraint_violation = std::max(0.0, misfit - radius);
  return best;
}

SolveReport trivial_report(double radius, double residual) {
  SolveReport r;
  r.converged = true;
  r.radius = radius;
  r.primal_residual = 0.0;
  r.constraint_violation = std::max(0.0, residual - radius);
  return r;
}

void check_divergence(double norm, double data_norm) {
  if (!std::isfinite(norm) || (data_norm > 0.0 && norm > 1e6 * data_norm) ||
      (data_norm == 0.0 && norm > 0.0))
    throw NumericalError("IHT diverged");
}

// Leading r singular triplets.
struct Truncated {
  Matrix u, v;
  Vector s;
};

Truncated truncated_svd(const Matrix& b, Index r) {
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed to converge");
  const Index keep = std::min<Index>(r, svd.singularValues().size());
  return {svd.matrixU().leftCols(keep), svd.matrixV().leftCols(keep),
          svd.singularValues().head(keep)};
}

} // namespace

StageSolution solve_lowrank_stage(const RankOperator& w, const Vector& y, double radius,
                                  const SolverConfig& cfg) {
  cfg.validate();
  if (y.size() != w.n()) throw DimensionError("solve_lowrank_stage: |y| must equal n");
  radius = effective_radius(radius, y.norm(), cfg);
  if (y.norm() <= radius)
    return {Matrix::Zero(w.rows(), w.cols()), trivial_report(radius, y.norm())};

  const Index rows = w.rows();
  const Index cols = w.cols();
  QuadraticSplit split(w.frame_matrix());
  auto prox = [rows, cols](const Matrix& x, double tau) -> Matrix {
    const Matrix shaped = svd_soft_threshold(Eigen::Map<const Matrix>(x.data(), rows, cols), tau);
    return Eigen::Map<const Matrix>(shaped.data(), shaped.size(), 1);
  };
  auto norm = [rows, cols](const Matrix& x) {
    return nuclear_norm(Eigen::Map<const Matrix>(x.data(), rows, cols));
  };
  StageSolution sol = admm_constrained(split, Matrix(y), radius, rows * cols, 1, prox, norm, cfg);
  sol.estimate = Eigen::Map<const Matrix>(sol.estimate.data(), rows, cols);
  return sol;
}

StageSolution solve_rowsparse_stage(const SensingMatrix& psi, const Matrix& b, double radius,
                                    const SolverConfig& cfg) {
  cfg.validate();
  if (b.rows() != psi.rows()) throw DimensionError("solve_rowsparse_stage: B must have m rows");
  radius = effective_radius(radius, b.norm(), cfg);
  if (b.norm() <= radius)
    return {Matrix::Zero(psi.cols(), b.cols()), trivial_report(radius, b.norm())};

  const Matrix psi_t = psi.data.transpose();
  QuadraticSplit split(psi_t);
  auto prox = [](const Matrix& x, double tau) -> Matrix { return row_soft_threshold(x, tau); };
  auto norm = [](const Matrix& x) { return l12_norm(x); };
  return admm_constrained(split, b, radius, psi.cols(), b.cols(), prox, norm, cfg);
}

StageSolution iht_lowrank(const RankOperator& w, const Vector& y, Index r, const SolverConfig& cfg,
                          const IterateObserver& observer) {
  cfg.validate();
  if (y.size() != w.n()) throw DimensionError("iht_lowrank: |y| must equal n");
  if (r < 1 || r > std::min(w.rows(), w.cols()))
    throw DimensionError("iht_lowrank: need 1 <= r <= min(m, p2)");
  const double y_norm = y.norm();
  Matrix b = Matrix::Zero(w.rows(), w.cols());
  Truncated basis;
  StageSolution sol;

  for (Index it = 1; it <= cfg.max_iters; ++it) {
    const Vector residual = y - w.apply(b);
    const Matrix grad = w.adjoint(residual);
    if (grad.squaredNorm() == 0.0) {
      sol.report.converged = true;
      sol.report.iters_used = it;
      break;
    }
    double step = cfg.iht_step;
    if (cfg.iht_normalized) {
      if (it == 1) basis = truncated_svd(grad, r);
      const Matrix uu_g = basis.u * (basis.u.transpose() * grad);
      const Matrix tangent = uu_g + (grad - uu_g) * basis.v * basis.v.transpose();
      const double denom = w.apply(tangent).squaredNorm();
      if (denom > 0.0) step *= tangent.squaredNorm() / denom;
    }
    basis = truncated_svd(b + step * grad, r);
    Matrix next = basis.u * basis.s.asDiagonal() * basis.v.transpose();
    check_divergence(next.norm(), y_norm);
    const double change = (next - b).norm() / std::max(next.norm(), 1e-300);
    b = std::move(next);
    if (observer) observer(b);
    sol.report.iters_used = it;
    if (change <= cfg.tol) {
      sol.report.converged = true;
      break;
    }
  }
  sol.report.primal_residual = (y - w.apply(b)).norm();
  sol.report.objective = sol.report.primal_residual;
  sol.estimate = std::move(b);
  return sol;
}

StageSolution iht_rowsparse(const SensingMatrix& psi, const Matrix& b, Index k,
                            const SolverConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  if (b.rows() != psi.rows()) throw DimensionError("iht_rowsparse: B must have m rows");
  if (k < 1 || k > psi.cols()) throw DimensionError("iht_rowsparse: need 1 <= k <= p1");
  const double b_norm = b.norm();
  Matrix x = Matrix::Zero(psi.cols(), b.cols());
  std::vector<Index> support;
  StageSolution sol;

  for (Index it = 1; it <= cfg.max_iters; ++it) {
    const Matrix grad = psi.data.transpose() * (b - psi.data * x);
    if (grad.squaredNorm() == 0.0) {
      sol.report.converged = true;
      sol.report.iters_used = it;
      break;
    }
    double step = cfg.iht_step;
    if (cfg.iht_normalized) {
      if (it == 1) support = top_k_row_indices(grad, k);
      Matrix restricted = Matrix::Zero(grad.rows(), grad.cols());
      for (Index i : support) restricted.row(i) = grad.row(i);
      const double denom = (psi.data * restricted).squaredNorm();
      if (denom > 0.0) step *= restricted.squaredNorm() / denom;
    }
    const Matrix moved = x + step * grad;
    support = top_k_row_indices(moved, k);
    Matrix next = Matrix::Zero(x.rows(), x.cols());
    for (Index i : support) next.row(i) = moved.row(i);
    check_divergence(next.norm(), b_norm);
    const double change = (next - x).norm() / std::max(next.norm(), 1e-300);
    x = std::move(next);
    if (observer) observer(x);
    sol.report.iters_used = it;
    if (change <= cfg.tol) {
      sol.report.converged = true;
      break;
    }
  }
  sol.report.primal_residual = (b - psi.data * x).norm();
  sol.report.objective = sol.report.primal_residual;
  sol.estimate = std::move(x);
  return sol;
}

} // namespace nestrec
