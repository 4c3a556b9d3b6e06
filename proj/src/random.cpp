#include "nestrec/random.hpp"

#include <algorithm>

namespace nestrec {

Matrix gaussian_matrix(Index rows, Index cols, double stddev, Engine& engine) {
  Matrix out(rows, cols);
  if (stddev == 0.0) {
    out.setZero();
    return out;
  }
  std::normal_distribution<double> normal(0.0, stddev);
  double* data = out.data();
  for (Index i = 0; i < out.size(); ++i) data[i] = normal(engine);
  return out;
}

Vector gaussian_vector(Index size, double stddev, Engine& engine) {
  return gaussian_matrix(size, 1, stddev, engine);
}

std::vector<Index> random_subset(Index n, Index k, Engine& engine) {
  if (k < 0 || k > n) throw DimensionError("random_subset: need 0 <= k <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(engine))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

} // namespace nestrec
