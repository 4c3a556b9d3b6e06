#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "nestrec/model.hpp"
#include "nestrec/operators.hpp"
#include "nestrec/random.hpp"

using namespace nestrec;

namespace {

double sample_variance(const Matrix& m) {
  const double mean = m.mean();
  return (m.array() - mean).square().sum() / static_cast<double>(m.size() - 1);
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// y_i = sum_{a,b} W_i(a,b) (Psi X)(a,b), written as explicit loops.
Vector brute_force_apply(const NestedOperator& op, const Matrix& x) {
  const Matrix& psi = op.psi.data;
  Matrix b = Matrix::Zero(psi.rows(), x.cols());
  for (Index a = 0; a < psi.rows(); ++a)
    for (Index c = 0; c < x.cols(); ++c)
      for (Index j = 0; j < psi.cols(); ++j) b(a, c) += psi(a, j) * x(j, c);
  Vector y(op.n());
  for (Index i = 0; i < op.n(); ++i) {
    const Matrix f = op.w.frame(i);
    double s = 0.0;
    for (Index a = 0; a < b.rows(); ++a)
      for (Index c = 0; c < b.cols(); ++c) s += f(a, c) * b(a, c);
    y(i) = s;
  }
  return y;
}

NestedOperator small_gaussian(std::uint64_t seed) {
  return NestedOperator{gaussian_sensing(12, 5, seed), gaussian_rank_operator(5, 4, 30, seed + 1), std::nullopt};
}

NestedOperator small_rank_one(std::uint64_t seed) {
  return NestedOperator{gaussian_sensing(9, 4, seed), gaussian_rank_one_operator(4, 25, seed + 1),
                        gaussian_sensing(9, 4, seed)};
}

NestedOperator small_doubly(std::uint64_t seed) {
  return NestedOperator{gaussian_sensing(10, 4, seed), gaussian_rank_operator(4, 3, 20, seed + 1),
                        gaussian_sensing(7, 3, seed + 2)};
}

} // namespace

TEST(GaussianSensing, EntryVariance) {
  const Index m = static_cast<Index>(std::ceil(5.0 * 10.0 * std::log(100.0)));
  ASSERT_EQ(m, 231);
  const SensingMatrix psi = gaussian_sensing(1000, m, 1);
  EXPECT_EQ(psi.rows(), 231);
  EXPECT_EQ(psi.cols(), 1000);
  EXPECT_NEAR(sample_variance(psi.data) * m, 1.0, 0.05);
  EXPECT_DOUBLE_EQ(psi.variance_scale, 1.0 / 231.0);
}

TEST(GaussianSensing, ScalarAndReproducible) {
  const SensingMatrix one = gaussian_sensing(1, 1, 5);
  EXPECT_EQ(one.rows(), 1);
  EXPECT_DOUBLE_EQ(one.variance_scale, 1.0);
  EXPECT_EQ(gaussian_sensing(30, 7, 9).data, gaussian_sensing(30, 7, 9).data);
  EXPECT_NE(gaussian_sensing(30, 7, 9).data, gaussian_sensing(30, 7, 10).data);
}

TEST(GaussianRankOperator, FramesAndVariance) {
  const RankOperator w = gaussian_rank_operator(30, 30, 240, 3);
  EXPECT_EQ(w.n(), 240);
  EXPECT_EQ(w.frame(0).rows(), 30);
  EXPECT_EQ(w.frame(0).cols(), 30);
  EXPECT_NEAR(sample_variance(w.frame_matrix()) * 240.0, 1.0, 0.05);
  EXPECT_EQ(gaussian_rank_operator(4, 3, 5, 8).frame_matrix(), gaussian_rank_operator(4, 3, 5, 8).frame_matrix());
}

TEST(GaussianRankOperator, SingleMeasurementIsInnerProduct) {
  const RankOperator w = gaussian_rank_operator(3, 4, 1, 2);
  Engine e = make_engine(1, "b");
  const Matrix b = gaussian_matrix(3, 4, 1.0, e);
  const Vector y = w.apply(b);
  ASSERT_EQ(y.size(), 1);
  EXPECT_NEAR(y(0), inner(w.frame(0), b), 1e-12);
}

TEST(NestedApply, ZeroAndCoordinatePicker) {
  const NestedOperator op = small_gaussian(1);
  EXPECT_EQ(apply(op, Matrix::Zero(12, 4)), Vector::Zero(30));

  Matrix probes = Matrix::Zero(3, 2);
  probes(0, 0) = 1.0;
  probes(1, 1) = 1.0;
  const NestedOperator picker{identity_sensing(3), RankOperator::rank_one(probes), identity_sensing(3)};
  Matrix e11 = Matrix::Zero(3, 3);
  e11(0, 0) = 1.0;
  const Vector y = apply(picker, e11);
  EXPECT_DOUBLE_EQ(y(0), 1.0);
  EXPECT_DOUBLE_EQ(y(1), 0.0);
}

TEST(NestedApply, MatchesBruteForce) {
  const NestedOperator op = small_gaussian(4);
  Engine e = make_engine(2, "x");
  const Matrix x = gaussian_matrix(12, 4, 1.0, e);
  const Vector fast = apply(op, x);
  const Vector slow = brute_force_apply(op, x);
  EXPECT_LE((fast - slow).norm(), 1e-12 * slow.norm());
}

TEST(NestedApply, RankOneKindIsQuadraticForm) {
  const NestedOperator op = small_rank_one(6);
  Engine e = make_engine(3, "x");
  const Vector x = gaussian_vector(9, 1.0, e);
  const Vector y = apply(op, Matrix(x * x.transpose()));
  const Matrix a = op.psi.data.transpose() * op.w.probes();
  for (Index i = 0; i < op.n(); ++i) {
    const double proj = a.col(i).dot(x);
    EXPECT_NEAR(y(i), proj * proj, 1e-10 * std::max(1.0, proj * proj));
  }
}

TEST(NestedAdjoint, ZeroAndUnitVectors) {
  const NestedOperator op = small_gaussian(7);
  EXPECT_EQ(adjoint(op, Vector::Zero(30)), Matrix::Zero(12, 4));
  for (Index i : {0, 13, 29}) {
    const Vector e_i = Vector::Unit(30, i);
    const Matrix expected = op.psi.data.transpose() * op.w.frame(i);
    EXPECT_LE((adjoint(op, e_i) - expected).norm(), 1e-13 * expected.norm());
  }
}

TEST(NestedAdjoint, InnerProductIdentityAllKinds) {
  for (const auto& op : {small_gaussian(10), small_rank_one(11), small_doubly(12)}) {
    for (int t = 0; t < 20; ++t) {
      Engine e = make_engine(static_cast<std::uint64_t>(t), "adjoint-pair");
      const Matrix x = gaussian_matrix(op.input_rows(), op.input_cols(), 1.0, e);
      const Vector y = gaussian_vector(op.n(), 1.0, e);
      const double lhs = apply(op, x).dot(y);
      const double rhs = inner(x, adjoint(op, y));
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(NestedApply, Linearity) {
  for (const auto& op : {small_gaussian(20), small_rank_one(21), small_doubly(22)}) {
    Engine e = make_engine(9, "lin");
    const Matrix x = gaussian_matrix(op.input_rows(), op.input_cols(), 1.0, e);
    const Matrix z = gaussian_matrix(op.input_rows(), op.input_cols(), 1.0, e);
    const double a = 1.7, b = -0.3;
    const Vector lhs = apply(op, a * x + b * z);
    const Vector rhs = a * apply(op, x) + b * apply(op, z);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
  }
}

TEST(NestedApply, IdentityPsi2ReducesToSingleSided) {
  const NestedOperator single = small_gaussian(30);
  NestedOperator doubly = single;
  doubly.psi2 = identity_sensing(4);
  Engine e = make_engine(1, "x");
  const Matrix x = gaussian_matrix(12, 4, 1.0, e);
  EXPECT_EQ(apply(single, x), apply(doubly, x));
  const Vector y = gaussian_vector(30, 1.0, e);
  EXPECT_EQ(adjoint(single, y), adjoint(doubly, y));
}

TEST(NestedApply, DimensionChecks) {
  const NestedOperator op = small_gaussian(1);
  EXPECT_THROW(apply(op, Matrix::Zero(11, 4)), DimensionError);
  EXPECT_THROW(adjoint(op, Vector::Zero(29)), DimensionError);
  const NestedOperator bad{gaussian_sensing(12, 6, 1), gaussian_rank_operator(5, 4, 3, 1), std::nullopt};
  EXPECT_THROW(bad.validate(), DimensionError);
}

TEST(Rip, IdentityIsExactIsometry) {
  const RipEstimate a = estimate_rip(identity_sensing(40), 5, 3, 100, 1);
  EXPECT_LE(a.delta_lower_bound, 1e-14);
  Matrix frames = Matrix::Identity(12, 12);
  const RankOperator w = RankOperator::dense(frames, 3, 4, 1.0);
  EXPECT_LE(estimate_rip(w, 2, 100, 1).delta_lower_bound, 1e-14);
}

TEST(Rip, GaussianPsiConcentrates) {
  const SensingMatrix psi = gaussian_sensing(1000, 231, 2);
  const RipEstimate est = estimate_rip(psi, 10, 30, 500, 3);
  EXPECT_EQ(est.trials, 500);
  EXPECT_LT(est.delta_lower_bound, 0.5);
  EXPECT_GE(est.delta_lower_bound, 0.0);
}

TEST(Rip, GaussianWConcentrates) {
  const Index m = 40, p2 = 12, r = 2;
  const RankOperator w = gaussian_rank_operator(m, p2, 4 * r * std::max(m, p2), 4);
  EXPECT_LT(estimate_rip(w, r, 500, 5).delta_lower_bound, 0.5);
}

TEST(Rip, MergedEstimateDominatesParts) {
  const SensingMatrix psi = gaussian_sensing(200, 40, 6);
  const RipEstimate a = estimate_rip(psi, 5, 4, 100, 1);
  const RipEstimate b = estimate_rip(psi, 5, 4, 100, 2);
  const RipEstimate both = merge(a, b);
  EXPECT_EQ(both.trials, 200);
  EXPECT_GE(both.delta_lower_bound, a.delta_lower_bound);
  EXPECT_GE(both.delta_lower_bound, b.delta_lower_bound);
  EXPECT_THROW(merge(a, estimate_rip(psi, 4, 4, 10, 1)), DimensionError);
  const RipEstimate w = estimate_rip(gaussian_rank_operator(6, 4, 80, 1), 2, 50, 1);
  EXPECT_DOUBLE_EQ(gamma_bound(a, w), (1 + a.delta_lower_bound) * (1 + w.delta_lower_bound));
}

TEST(OperatorIo, RoundTripBothKinds) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "nestrec_op_roundtrip";
  for (const auto& op : {small_gaussian(40), small_rank_one(41), small_doubly(42)}) {
    fs::remove_all(dir);
    save_operator(dir, op, 77);
    const NestedOperator back = load_operator(dir);
    EXPECT_EQ(back.psi.data, op.psi.data);
    EXPECT_EQ(back.w.kind(), op.w.kind());
    EXPECT_EQ(back.w.frame_matrix(), op.w.frame_matrix());
    EXPECT_EQ(back.psi2.has_value(), op.psi2.has_value());
    Engine e = make_engine(1, "x");
    const Matrix x = gaussian_matrix(op.input_rows(), op.input_cols(), 1.0, e);
    EXPECT_EQ(apply(back, x), apply(op, x));
  }
  fs::remove_all(dir);
  EXPECT_THROW(load_operator(dir), IoError);
}
