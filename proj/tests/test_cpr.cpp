#include <cmath>

#include <gtest/gtest.h>

#include "nestrec/cpr.hpp"
#include "nestrec/random.hpp"

using namespace nestrec;

namespace {

Index desk_m(Index p, Index k) {
  return static_cast<Index>(std::ceil(2.0 * k * (1.0 + std::log(static_cast<double>(p) / k))));
}

double sign_free_error(const Vector& est, const Vector& x) {
  return std::min((est - x).norm(), (est + x).norm()) / x.norm();
}

} // namespace

TEST(GenerateCpr, NoiseFreeMeasurementsAreQuadratic) {
  ASSERT_EQ(desk_m(64, 3), 25);
  const PhaselessInstance inst = generate_cpr(64, 3, 25, 200, 0.0, 1);
  EXPECT_EQ(inst.epsilon, 0.0);
  ASSERT_TRUE(inst.x_true.has_value());
  EXPECT_EQ((inst.x_true->array() != 0.0).count(), 3);
  const Matrix a = inst.psi.data.transpose() * inst.probes;
  for (Index i = 0; i < inst.n(); ++i) {
    const double proj = a.col(i).dot(*inst.x_true);
    EXPECT_NEAR(inst.y(i), proj * proj, 1e-12 * std::max(1.0, proj * proj));
  }
  EXPECT_EQ(inst.p(), 64);
  EXPECT_EQ(inst.m(), 25);
  EXPECT_EQ(inst.n(), 200);
}

TEST(GenerateCpr, ReproducibleAndZeroSignal) {
  const PhaselessInstance a = generate_cpr(64, 3, 25, 200, 0.1, 2);
  const PhaselessInstance b = generate_cpr(64, 3, 25, 200, 0.1, 2);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.psi.data, b.psi.data);
  EXPECT_EQ(a.probes, b.probes);
  EXPECT_NE(generate_cpr(64, 3, 25, 200, 0.1, 3).y, a.y);
  const PhaselessInstance zero = generate_cpr(20, 0, 10, 50, 0.3, 4);
  EXPECT_NEAR(zero.y.norm(), zero.epsilon, 1e-14);
  EXPECT_GT(zero.epsilon, 0.0);
  EXPECT_THROW(generate_cpr(10, 11, 5, 5, 0.0, 1), DimensionError);
  EXPECT_THROW(generate_cpr(10, 2, 5, 5, -1.0, 1), DomainError);
}

TEST(WirtingerFlow, DenseRegimeRecovery) {
  const Index p = 32, n = 10 * p;
  Engine e = make_engine(5, "wf");
  const Matrix a = gaussian_matrix(p, n, 1.0, e);
  const Vector x = gaussian_vector(p, 1.0, e);
  const Vector y = (a.transpose() * x).array().square().matrix();
  const Vector est = wirtinger_flow(a, y, 500);
  EXPECT_LE(sign_free_error(est, x), 1e-3);
  EXPECT_NEAR(phaseless_loss(a, y, est), phaseless_loss(a, y, Vector(-est)), 0.0);
}

TEST(WirtingerFlow, HomogeneousOfDegreeOne) {
  const Index p = 16, n = 10 * p;
  Engine e = make_engine(6, "wf");
  const Matrix a = gaussian_matrix(p, n, 1.0, e);
  const Vector x = gaussian_vector(p, 1.0, e);
  const Vector y = (a.transpose() * x).array().square().matrix();
  const double alpha = 3.0;
  const Vector base = wirtinger_flow(a, y, 200);
  const Vector scaled = wirtinger_flow(a, alpha * alpha * y, 200);
  EXPECT_LE((scaled - alpha * base).norm(), 1e-10 * alpha * base.norm());
}

TEST(WirtingerFlow, ZeroMeasurementsThrow) {
  const PhaselessInstance inst = generate_cpr(20, 0, 10, 50, 0.0, 7);
  EXPECT_THROW(wirtinger_flow(inst, 10), NumericalError);
  EXPECT_THROW(cpr_two_stage(inst, 2), NumericalError);
}

TEST(LiftedOperator, MatchesQuadraticMeasurements) {
  const PhaselessInstance inst = generate_cpr(30, 4, 15, 80, 0.0, 8);
  const NestedOperator op = lifted_operator(inst);
  Engine e = make_engine(9, "x");
  const Vector v = gaussian_vector(30, 1.0, e);
  const Vector lifted = apply(op, Matrix(v * v.transpose()));
  const Vector direct = (inst.probes.transpose() * (inst.psi.data * v)).array().square().matrix();
  EXPECT_LE((lifted - direct).norm(), 1e-10 * direct.norm());
  const Vector truth = apply(op, Matrix(*inst.x_true * inst.x_true->transpose()));
  EXPECT_LE((truth - inst.y).norm(), 1e-10 * inst.y.norm());
}

TEST(CprTwoStage, DeskInstance) {
  const PhaselessInstance inst = generate_cpr(64, 3, 25, 200, 0.0, 10);
  const CprResult res = cpr_two_stage(inst, 3);
  EXPECT_LE(lifted_relative_error(res.xhat_lifted, *inst.x_true), 0.05);
  // Output is x x^T: symmetric, PSD, rank one, k-sparse.
  EXPECT_EQ(res.xhat_lifted, res.xhat_lifted.transpose());
  EXPECT_LE((res.xhat_lifted - res.xhat * res.xhat.transpose()).norm(), 1e-12 * res.xhat_lifted.norm());
  EXPECT_LE((res.xhat.array() != 0.0).count(), 3);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(res.xhat_lifted);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * res.xhat_lifted.norm());
  EXPECT_LE((eig.eigenvalues().array() > 1e-10 * res.xhat_lifted.norm()).count(), 1);
  // Lifted measurements of the estimate are the squared projections.
  const Vector lifted = apply(lifted_operator(inst), res.xhat_lifted);
  const Vector direct =
      (inst.probes.transpose() * (inst.psi.data * res.xhat)).array().square().matrix();
  EXPECT_LE((lifted - direct).norm(), 1e-10 * direct.norm());
}

TEST(CprTwoStage, SignInvariance) {
  const PhaselessInstance inst = generate_cpr(64, 3, 25, 200, 0.0, 11);
  PhaselessInstance flipped = inst;
  flipped.x_true = -*inst.x_true;
  const Vector proj = inst.probes.transpose() * (inst.psi.data * *flipped.x_true);
  flipped.y = proj.array().square().matrix();
  EXPECT_EQ(cpr_two_stage(inst, 3).xhat_lifted, cpr_two_stage(flipped, 3).xhat_lifted);
  EXPECT_DOUBLE_EQ(lifted_relative_error(inst.x_true.value() * inst.x_true->transpose(),
                                         -*inst.x_true),
                   0.0);
}

TEST(CprTwoStage, IdentityInstrumentation) {
  PhaselessInstance inst;
  inst.psi = identity_sensing(4);
  inst.probes = Matrix::Identity(4, 4);
  inst.x_true = Vector::Unit(4, 0) * 3.0;
  inst.y = inst.x_true->array().square().matrix();
  const CprResult res = cpr_two_stage(inst, 1);
  EXPECT_LE(lifted_relative_error(res.xhat_lifted, *inst.x_true), 1e-8);
}

TEST(CprTwoStage, NoisyErrorScalesWithNoiseBound) {
  const double c_prime = 20.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const PhaselessInstance inst = generate_cpr(64, 3, 25, 200, 0.01, 100 + t);
    const CprResult res = cpr_two_stage(inst, 3);
    const Matrix truth = *inst.x_true * inst.x_true->transpose();
    EXPECT_LE((res.xhat_lifted - truth).norm(),
              c_prime * inst.epsilon / std::sqrt(static_cast<double>(inst.n())))
        << "trial " << t;
    EXPECT_GT(res.stage2_radius, 0.0);
  }
}
