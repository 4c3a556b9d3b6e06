#include "nestrec/model.hpp"

#include <algorithm>
#include <string>

#include "nestrec/random.hpp"

namespace nestrec {

Index numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = kRankTolerance * s(0);
  return static_cast<Index>((s.array() > cutoff).count());
}

std::vector<Index> nonzero_rows(const Matrix& m) {
  std::vector<Index> rows;
  for (Index i = 0; i < m.rows(); ++i)
    if ((m.row(i).array() != 0.0).any()) rows.push_back(i);
  return rows;
}

void ProblemDims::validate() const {
  auto fail = [this](const std::string& why) {
    throw DimensionError("invalid dims (p1=" + std::to_string(p1) + ", p2=" + std::to_string(p2) +
                         ", m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                         ", k=" + std::to_string(k) + ", r=" + std::to_string(r) + "): " + why);
  };
  if (p1 < 1 || p2 < 1) fail("p1 and p2 must be positive");
  if (r < 1) fail("r must be at least 1");
  if (r > k) fail("r must not exceed k");
  if (k > p1) fail("k must not exceed p1");
  if (r > p2) fail("r must not exceed p2");
  if (m < 1) fail("m must be at least 1");
  if (n < 1) fail("n must be at least 1");
}

StructuredTarget random_target(const ProblemDims& dims, std::uint64_t seed) {
  dims.validate();
  Engine engine = make_engine(seed, "target");
  StructuredTarget t;
  t.support = random_subset(dims.p1, dims.k, engine);
  const Matrix on_support = gaussian_matrix(dims.k, dims.r, 1.0, engine);
  t.right = gaussian_matrix(dims.p2, dims.r, 1.0, engine);
  t.left = Matrix::Zero(dims.p1, dims.r);
  for (std::size_t i = 0; i < t.support.size(); ++i)
    t.left.row(t.support[i]) = on_support.row(static_cast<Index>(i));
  t.matrix = t.left * t.right.transpose();
  return t;
}

Vector gaussian_noise(Index n, const NoiseModel& model) {
  if (n < 1) throw DimensionError("gaussian_noise: n must be at least 1");
  if (!(model.sigma >= 0.0)) throw DomainError("gaussian_noise: sigma must be >= 0");
  Engine engine = make_engine(model.seed, "noise");
  return gaussian_vector(n, model.sigma, engine);
}

bool satisfies_invariants(const StructuredTarget& t, Index k, Index r) {
  const Matrix product = t.left * t.right.transpose();
  const double scale = std::max(t.matrix.norm(), 1e-300);
  if ((product - t.matrix).norm() > 1e-12 * scale) return false;
  if (!std::is_sorted(t.support.begin(), t.support.end())) return false;
  if (static_cast<Index>(t.support.size()) > k) return false;
  std::vector<bool> in_support(static_cast<std::size_t>(t.matrix.rows()), false);
  for (Index s : t.support) {
    if (s < 0 || s >= t.matrix.rows()) return false;
    in_support[static_cast<std::size_t>(s)] = true;
  }
  for (Index i = 0; i < t.matrix.rows(); ++i)
    if (!in_support[static_cast<std::size_t>(i)] && (t.matrix.row(i).array() != 0.0).any())
      return false;
  return numerical_rank(t.matrix) <= r;
}

} // namespace nestrec
