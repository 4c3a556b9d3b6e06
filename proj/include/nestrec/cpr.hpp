#pragma once

// Compressive phase retrieval: y_i = <Psi^T w_i, x>^2 + z_i with a sparse x.
// Lifting turns each measurement into <w_i w_i^T, Psi x x^T Psi^T>, so the
// two-stage scheme applies with a rank-one quadratic W.

#include <cstdint>
#include <optional>

#include "nestrec/core.hpp"
#include "nestrec/operators.hpp"

namespace nestrec {

struct PhaselessInstance {
  SensingMatrix psi;     // m x p
  Matrix probes;         // m x n, column i is w_i
  std::optional<Vector> x_true;
  Vector y;
  /// Noise bound; generate_cpr sets it to ||z||_2.
  double epsilon = 0.0;

  Index p() const { return psi.cols(); }
  Index m() const { return psi.rows(); }
  Index n() const { return probes.cols(); }
};

/// Psi with iid N(0, 1/m) entries, standard-normal probes, x supported on a
/// uniform k-subset with standard-normal values, z ~ N(0, sigma^2 I).
PhaselessInstance generate_cpr(Index p, Index k, Index m, Index n, double sigma,
                               std::uint64_t seed);

/// Lifted nested operator X -> [<w_i w_i^T, Psi X Psi^T>].
NestedOperator lifted_operator(const PhaselessInstance& inst);

struct WirtingerConfig {
  Index power_iters = 100;
  /// Step schedule mu_t = min(1 - exp(-t / ramp), mu_max) / ||z0||^2.
  double ramp = 330.0;
  double mu_max = 0.2;
};

/// Real Wirtinger flow on vectors a_i (columns of `a`): spectral
/// initialization from (1/n) sum y_i a_i a_i^T, then `iters` gradient steps on
/// (1/4n) sum (<a_i, z>^2 - y_i)^2. The result is determined up to sign.
/// Throws NumericalError when y carries no energy to initialize from.
Vector wirtinger_flow(const Matrix& a, const Vector& y, Index iters,
                      const WirtingerConfig& cfg = {});

/// Wirtinger flow directly in R^p with a_i = Psi^T w_i.
Vector wirtinger_flow(const PhaselessInstance& inst, Index iters,
                      const WirtingerConfig& cfg = {});

/// 0.5 * mean((<a_i, z>^2 - y_i)^2).
double phaseless_loss(const Matrix& a, const Vector& y, const Vector& z);

struct CprConfig {
  Index wf_iters = 500;
  /// ADMM budget and relative tolerance for the lifted l1 program.
  Index l1_iters = 3000;
  double l1_tol = 1e-8;
  Index iht_iters = 100;
  /// Stage-2 radius constant C in C * epsilon / sqrt(n).
  double radius_constant = 3.0;
  WirtingerConfig wf;
};

struct CprResult {
  Matrix xhat_lifted;  // p x p, xhat xhat^T
  Vector xhat;
  Vector bhat;         // compressed-space estimate of Psi x
  /// ||Psi Xhat Psi^T - bhat bhat^T||_F against C * epsilon / sqrt(n).
  double stage2_residual = 0.0;
  double stage2_radius = 0.0;
  bool within_radius = false;
};

/// Stage 1: Wirtinger flow in R^m on the probes w_i, Bhat = bhat bhat^T.
/// Stage 2: min ||X||_1 s.t. ||Psi X Psi^T - Bhat||_F <= C eps / sqrt(n) by
/// ADMM, projected with P and refined by lifted IHT
/// X <- P(X + mu Psi^T (Bhat - Psi X Psi^T) Psi). P keeps the leading
/// eigenpair, hard-thresholds the eigenvector to k entries and re-lifts; mu is
/// the exact line-search step on the current support. A zero radius is
/// floored at 1e-9 ||Bhat||_F.
CprResult cpr_two_stage(const PhaselessInstance& inst, Index k, const CprConfig& cfg = {});

/// ||X - x x^T||_F / ||x x^T||_F; insensitive to the sign of x.
double lifted_relative_error(const Matrix& xhat_lifted, const Vector& x);

} // namespace nestrec
