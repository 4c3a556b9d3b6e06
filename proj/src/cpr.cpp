#include "nestrec/cpr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "nestrec/proximal.hpp"
#include "nestrec/random.hpp"

namespace nestrec {

PhaselessInstance generate_cpr(Index p, Index k, Index m, Index n, double sigma,
                               std::uint64_t seed) {
  if (p < 1 || m < 1 || n < 1) throw DimensionError("generate_cpr: p, m, n must be positive");
  if (k < 0 || k > p) throw DimensionError("generate_cpr: need 0 <= k <= p");
  if (!(sigma >= 0.0)) throw DomainError("generate_cpr: sigma must be >= 0");

  PhaselessInstance inst;
  inst.psi = gaussian_sensing(p, m, derive_seed(seed, "cpr-psi"));
  Engine probe_engine = make_engine(seed, "cpr-probes");
  inst.probes = gaussian_matrix(m, n, 1.0, probe_engine);

  Engine x_engine = make_engine(seed, "cpr-signal");
  Vector x = Vector::Zero(p);
  for (Index i : random_subset(p, k, x_engine)) x(i) = std::normal_distribution<double>()(x_engine);

  Engine noise_engine = make_engine(seed, "cpr-noise");
  const Vector z = gaussian_vector(n, sigma, noise_engine);
  const Vector proj = inst.probes.transpose() * (inst.psi.data * x);
  inst.y = proj.array().square().matrix() + z;
  inst.epsilon = z.norm();
  inst.x_true = std::move(x);
  return inst;
}

NestedOperator lifted_operator(const PhaselessInstance& inst) {
  return NestedOperator{inst.psi, RankOperator::rank_one(inst.probes), inst.psi};
}

double phaseless_loss(const Matrix& a, const Vector& y, const Vector& z) {
  const Vector r = (a.transpose() * z).array().square().matrix() - y;
  return 0.5 * r.squaredNorm() / static_cast<double>(y.size());
}

Vector wirtinger_flow(const Matrix& a, const Vector& y, Index iters, const WirtingerConfig& cfg) {
  if (a.cols() < 1 || a.rows() < 1) throw DimensionError("wirtinger_flow: need n >= 1 vectors");
  if (y.size() != a.cols()) throw DimensionError("wirtinger_flow: |y| must equal the vector count");
  if (iters < 0 || cfg.power_iters < 1) throw DomainError("wirtinger_flow: bad iteration counts");
  const double n = static_cast<double>(y.size());
  const double mean_y = y.mean();
  if (!(mean_y > 0.0)) throw NumericalError("wirtinger_flow: spectral initialization needs mean(y) > 0");

  // Power iteration on (1/n) A diag(y) A^T from a fixed start.
  Engine engine = make_engine(0x5eedULL, "wf-power");
  Vector v = gaussian_vector(a.rows(), 1.0, engine);
  v.normalize();
  for (Index t = 0; t < cfg.power_iters; ++t) {
    Vector next = a * (y.cwiseProduct(a.transpose() * v)) / n;
    const double norm = next.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericalError("wirtinger_flow: spectral initialization collapsed");
    v = next / norm;
  }
  Vector z = std::sqrt(mean_y) * v;
  const double z0_sq = z.squaredNorm();

  for (Index t = 1; t <= iters; ++t) {
    const double mu = std::min(1.0 - std::exp(-static_cast<double>(t) / cfg.ramp), cfg.mu_max);
    const Vector az = a.transpose() * z;
    const Vector weights = (az.array().square() - y.array()) * az.array();
    z -= (mu / z0_sq) * (a * weights) / n;
  }
  return z;
}

Vector wirtinger_flow(const PhaselessInstance& inst, Index iters, const WirtingerConfig& cfg) {
  return wirtinger_flow(inst.psi.data.transpose() * inst.probes, inst.y, iters, cfg);
}

namespace {

// Leading eigenvector of a symmetric matrix hard-thresholded to its k
// largest-magnitude entries, scaled by sqrt of the eigenvalue (zero if it is
// not positive).
Vector sparse_rank_one(const Matrix& m, Index k) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("cpr: eigendecomposition failed");
  const Index top = sym.rows() - 1;
  const double lambda = eig.eigenvalues()(top);
  Vector x = Vector::Zero(sym.rows());
  if (!(lambda > 0.0)) return x;
  const Vector u = eig.eigenvectors().col(top);
  for (Index i : top_k_row_indices(u, k)) x(i) = u(i);
  const double norm = x.norm();
  if (norm == 0.0) return x;
  // Best rank-one fit of sym restricted to the kept entries.
  const Vector unit = x / norm;
  const double scale = unit.dot(sym * unit);
  return scale > 0.0 ? Vector(std::sqrt(scale) * unit) : Vector(Vector::Zero(sym.rows()));
}

Matrix lifted_l1(const Matrix& psi, const Matrix& bhat, double radius, const CprConfig& cfg) {
  // ADMM on {X = Z (entrywise shrinkage), Psi X Psi^T = V (ball projection)}.
  // The X-update inverts I + (Psi^T Psi) (x) (Psi^T Psi) in the eigenbasis of
  // Psi^T Psi.
  const Index p = psi.cols();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(psi.transpose() * psi);
  if (eig.info() != Eigen::Success) throw NumericalError("cpr: eigendecomposition failed");
  const Matrix& q = eig.eigenvectors();
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Matrix denom = (1.0 + (lam * lam.transpose()).array()).matrix();

  const double scale = std::max(bhat.norm(), 1e-300);
  Matrix x = Matrix::Zero(p, p), z = x, u1 = x;
  Matrix v = Matrix::Zero(bhat.rows(), bhat.cols()), u2 = v;
  double rho = 1.0;
  for (Index it = 0; it < cfg.l1_iters; ++it) {
    const Matrix rhs = (z - u1) + psi.transpose() * (v - u2) * psi;
    x = q * ((q.transpose() * rhs * q).array() / denom.array()).matrix() * q.transpose();
    const Matrix ax = psi * x * psi.transpose();
    const Matrix z_old = z, v_old = v;
    z = ((x + u1).array().abs() - 1.0 / rho).max(0.0) * (x + u1).array().sign();
    const Matrix shifted = ax + u2 - bhat;
    const double dist = shifted.norm();
    v = dist <= radius ? Matrix(ax + u2) : Matrix(bhat + (radius / dist) * shifted);
    u1 += x - z;
    u2 += ax - v;

    const double primal = std::sqrt((x - z).squaredNorm() + (ax - v).squaredNorm());
    const double dual =
        rho * std::sqrt((z - z_old).squaredNorm() + (psi.transpose() * (v - v_old) * psi).squaredNorm());
    if (primal <= cfg.l1_tol * scale && dual <= cfg.l1_tol * scale) break;
    if (it % 5 == 4) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u1 /= 2.0;
        u2 /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u1 *= 2.0;
        u2 *= 2.0;
      }
    }
  }
  return z;
}

} // namespace

CprResult cpr_two_stage(const PhaselessInstance& inst, Index k, const CprConfig& cfg) {
  if (k < 1 || k > inst.p()) throw DimensionError("cpr_two_stage: need 1 <= k <= p");
  if (inst.y.size() != inst.n()) throw DimensionError("cpr_two_stage: |y| must equal n");
  if (cfg.iht_iters < 0 || cfg.l1_iters < 0) throw DomainError("cpr_two_stage: negative iteration count");
  if (!(cfg.radius_constant >= 0.0)) throw DomainError("cpr_two_stage: radius constant must be >= 0");
  const Matrix& psi = inst.psi.data;

  CprResult out;
  out.bhat = wirtinger_flow(inst.probes, inst.y, cfg.wf_iters, cfg.wf);
  const Matrix bhat = out.bhat * out.bhat.transpose();
  out.stage2_radius =
      cfg.radius_constant * inst.epsilon / std::sqrt(static_cast<double>(inst.n()));
  const double radius = std::max(out.stage2_radius, 1e-9 * bhat.norm());

  Vector x = sparse_rank_one(lifted_l1(psi, bhat, radius, cfg), k);
  Matrix lifted = x * x.transpose();
  for (Index it = 0; it < cfg.iht_iters; ++it) {
    const Matrix grad = psi.transpose() * (bhat - psi * lifted * psi.transpose()) * psi;
    // Exact line search along the gradient restricted to the current support.
    Matrix restricted = Matrix::Zero(grad.rows(), grad.cols());
    for (Index i = 0; i < x.size(); ++i)
      for (Index j = 0; j < x.size(); ++j)
        if (x(i) != 0.0 && x(j) != 0.0) restricted(i, j) = grad(i, j);
    const double denom = (psi * restricted * psi.transpose()).squaredNorm();
    const double step = denom > 0.0 ? restricted.squaredNorm() / denom : 1.0;

    x = sparse_rank_one(lifted + step * grad, k);
    lifted = x * x.transpose();
  }

  out.xhat = x;
  out.xhat_lifted = lifted;
  out.stage2_residual = (psi * lifted * psi.transpose() - bhat).norm();
  out.within_radius = out.stage2_residual <= radius;
  return out;
}

double lifted_relative_error(const Matrix& xhat_lifted, const Vector& x) {
  const Matrix truth = x * x.transpose();
  const double denom = truth.norm();
  if (denom == 0.0) return xhat_lifted.norm();
  return (xhat_lifted - truth).norm() / denom;
}

} // namespace nestrec
