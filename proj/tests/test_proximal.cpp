#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "nestrec/proximal.hpp"
#include "nestrec/random.hpp"

using namespace nestrec;

namespace {

// Checks that `candidate` beats `probes` random perturbations of itself on f.
void expect_local_optimum(const std::function<double(const Matrix&)>& f, const Matrix& candidate,
                          int probes, std::uint64_t seed) {
  Engine e = make_engine(seed, "probe");
  const double base = f(candidate);
  for (int t = 0; t < probes; ++t) {
    const double scale = std::pow(10.0, -1.0 - 3.0 * (t % 4) / 3.0);
    const Matrix other = candidate + gaussian_matrix(candidate.rows(), candidate.cols(), scale, e);
    ASSERT_GE(f(other), base - 1e-12) << "probe " << t;
  }
}

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

} // namespace

TEST(Norms, NuclearAndMixed) {
  EXPECT_NEAR(nuclear_norm(diag2(3, -1)), 4.0, 1e-14);
  Matrix x(2, 2);
  x << 3, 4, 0, 0;
  EXPECT_DOUBLE_EQ(l12_norm(x), 5.0);
  EXPECT_EQ(nuclear_norm(Matrix(0, 0)), 0.0);
}

TEST(SvdSoftThreshold, DiagonalExample) {
  EXPECT_LE((svd_soft_threshold(diag2(3, 1), 2.0) - diag2(1, 0)).norm(), 1e-14);
  Engine e = make_engine(1, "b");
  const Matrix b = gaussian_matrix(5, 4, 1.0, e);
  EXPECT_EQ(svd_soft_threshold(b, 0.0), b);
  EXPECT_THROW(svd_soft_threshold(b, -1.0), DomainError);
  EXPECT_EQ(svd_soft_threshold(b, 100.0), Matrix::Zero(5, 4));
}

TEST(SvdSoftThreshold, RandomProbeOptimality) {
  Engine e = make_engine(2, "b");
  const Matrix b = gaussian_matrix(5, 4, 1.0, e);
  const double tau = 0.3;
  const Matrix z = svd_soft_threshold(b, tau);
  expect_local_optimum(
      [&](const Matrix& c) { return 0.5 * (c - b).squaredNorm() + tau * nuclear_norm(c); }, z,
      10000, 3);
}

TEST(SvdSoftThreshold, NonexpansiveAndNuclearIdentity) {
  Engine e = make_engine(4, "b");
  for (int t = 0; t < 50; ++t) {
    const Matrix a = gaussian_matrix(6, 4, 1.0, e);
    const Matrix b = gaussian_matrix(6, 4, 1.0, e);
    const double tau = 0.5;
    EXPECT_LE((svd_soft_threshold(a, tau) - svd_soft_threshold(b, tau)).norm(),
              (a - b).norm() + 1e-12);
    // Moreau: B = prox(B) + tau * projection onto the spectral-norm ball.
    const Matrix z = svd_soft_threshold(a, tau);
    const Matrix resid = a - z;
    Eigen::JacobiSVD<Matrix> svd(resid);
    EXPECT_LE(svd.singularValues()(0), tau + 1e-12);
    EXPECT_NEAR((resid.array() * z.array()).sum(), tau * nuclear_norm(z), 1e-10);
  }
}

TEST(RowSoftThreshold, Examples) {
  Matrix x(1, 2);
  x << 3, 4;
  EXPECT_EQ(row_soft_threshold(x, 5.0), Matrix::Zero(1, 2));
  const Matrix half = row_soft_threshold(x, 2.5);
  EXPECT_DOUBLE_EQ(half(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(half(0, 1), 2.0);
  EXPECT_EQ(row_soft_threshold(x, 0.0), x);
  EXPECT_THROW(row_soft_threshold(x, -0.1), DomainError);
}

TEST(RowSoftThreshold, RandomProbeOptimality) {
  Engine e = make_engine(5, "x");
  Matrix x = gaussian_matrix(8, 3, 1.0, e);
  x.row(2) *= 0.1;  // ensure a zeroed row
  const double tau = 0.6;
  const Matrix z = row_soft_threshold(x, tau);
  EXPECT_EQ(z.row(2), Eigen::RowVectorXd::Zero(3));
  expect_local_optimum(
      [&](const Matrix& c) { return 0.5 * (c - x).squaredNorm() + tau * l12_norm(c); }, z, 10000,
      6);
}

TEST(RowSoftThreshold, NonexpansiveAndIdempotentAtZeroTau) {
  Engine e = make_engine(7, "x");
  for (int t = 0; t < 50; ++t) {
    const Matrix a = gaussian_matrix(7, 3, 1.0, e);
    const Matrix b = gaussian_matrix(7, 3, 1.0, e);
    EXPECT_LE((row_soft_threshold(a, 0.8) - row_soft_threshold(b, 0.8)).norm(),
              (a - b).norm() + 1e-12);
  }
}

TEST(BestRankR, ExamplesAndIdempotence) {
  EXPECT_LE((best_rank_r(diag2(3, 1), 1) - diag2(3, 0)).norm(), 1e-14);
  Engine e = make_engine(8, "b");
  const Matrix low = gaussian_matrix(6, 2, 1.0, e) * gaussian_matrix(2, 5, 1.0, e);
  EXPECT_LE((best_rank_r(low, 2) - low).norm(), 1e-12 * low.norm());
  EXPECT_LE((best_rank_r(low, 3) - low).norm(), 1e-12 * low.norm());
  const Matrix b = gaussian_matrix(6, 5, 1.0, e);
  const Matrix p = best_rank_r(b, 2);
  EXPECT_LE((best_rank_r(p, 2) - p).norm(), 1e-12 * p.norm());
  EXPECT_EQ(best_rank_r(b, 0), Matrix::Zero(6, 5));
  EXPECT_THROW(best_rank_r(b, 6), DimensionError);
}

TEST(BestRankR, BeatsRandomRankRCandidates) {
  Engine e = make_engine(9, "b");
  const Matrix b = gaussian_matrix(6, 5, 1.0, e);
  const double best = (best_rank_r(b, 2) - b).norm();
  Eigen::JacobiSVD<Matrix> svd(b);
  const auto& s = svd.singularValues();
  EXPECT_NEAR(best, std::sqrt(s.tail(3).squaredNorm()), 1e-12);
  for (int t = 0; t < 1000; ++t) {
    const Matrix cand = gaussian_matrix(6, 2, 1.0, e) * gaussian_matrix(2, 5, 1.0, e);
    // Rescale each candidate optimally before comparing.
    const double alpha = (cand.array() * b.array()).sum() / cand.squaredNorm();
    EXPECT_GE((alpha * cand - b).norm(), best - 1e-12);
  }
}

TEST(TopKRows, ExamplesAndExhaustiveOracle) {
  Matrix x = Matrix::Zero(5, 2);
  x.row(1) << 1, 2;
  x.row(3) << -4, 0;
  EXPECT_EQ(top_k_rows(x, 2), x);
  EXPECT_EQ(top_k_rows(x, 0), Matrix::Zero(5, 2));
  EXPECT_THROW(top_k_rows(x, 6), DimensionError);

  Engine e = make_engine(10, "x");
  const Index p1 = 8, k = 3;
  for (int t = 0; t < 20; ++t) {
    const Matrix m = gaussian_matrix(p1, 3, 1.0, e);
    const Matrix proj = top_k_rows(m, k);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << p1); ++mask) {
      if (__builtin_popcount(mask) != static_cast<int>(k)) continue;
      Matrix cand = Matrix::Zero(p1, 3);
      for (Index i = 0; i < p1; ++i)
        if (mask & (1u << i)) cand.row(i) = m.row(i);
      best = std::min(best, (cand - m).norm());
    }
    EXPECT_NEAR((proj - m).norm(), best, 1e-12);
    EXPECT_EQ(top_k_rows(proj, k), proj);
  }
}

TEST(TopKRows, TiesPreferSmallerIndex) {
  const Matrix ones = Matrix::Ones(4, 1);
  EXPECT_EQ(top_k_row_indices(ones, 2), (std::vector<Index>{0, 1}));
}

TEST(ProjectL2Ball, Examples) {
  Vector v(2), c(2);
  v << 1, 0;
  c << 0, 0;
  EXPECT_EQ(project_l2_ball(v, c, 2.0), v);
  EXPECT_EQ(project_l2_ball(v, c, 0.0), c);
  Vector far(2);
  far << 3, 4;
  const Vector p = project_l2_ball(far, c, 1.0);
  EXPECT_NEAR(p(0), 0.6, 1e-15);
  EXPECT_NEAR(p(1), 0.8, 1e-15);
  EXPECT_THROW(project_l2_ball(v, Vector::Zero(3), 1.0), DimensionError);
  EXPECT_THROW(project_l2_ball(v, c, -1.0), DomainError);
}

TEST(ProjectL2Ball, NearestFeasiblePoint) {
  Engine e = make_engine(11, "v");
  const Vector v = gaussian_vector(5, 3.0, e);
  const Vector c = gaussian_vector(5, 1.0, e);
  const double radius = 0.5;
  const Vector p = project_l2_ball(v, c, radius);
  EXPECT_NEAR((p - c).norm(), radius, 1e-12);
  for (int t = 0; t < 1000; ++t) {
    Vector q = gaussian_vector(5, 1.0, e);
    q = c + radius * std::pow(static_cast<double>(t % 10 + 1) / 10.0, 0.2) * q / q.norm();
    EXPECT_GE((q - v).norm(), (p - v).norm() - 1e-12);
  }
  EXPECT_EQ(project_l2_ball(p, c, radius), p);
}
