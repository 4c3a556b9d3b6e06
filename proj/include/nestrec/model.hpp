#pragma once

#include <cstdint>
#include <vector>

#include "nestrec/core.hpp"

namespace nestrec {

/// Problem sizes: a p1 x p2 target with at most k nonzero rows and rank at
/// most r, compressed to m rows and observed through n measurements.
struct ProblemDims {
  Index p1 = 0;
  Index p2 = 0;
  Index m = 0;
  Index n = 0;
  Index k = 0;
  Index r = 0;

  /// Throws DimensionError unless 1 <= r <= k <= p1, r <= p2, m >= 1, n >= 1.
  void validate() const;

  /// n << p1 * p2; informational only.
  bool underdetermined() const { return n < p1 * p2; }
  bool rank_below_sparsity() const { return r <= k; }
};

/// Simultaneously row-sparse and low-rank matrix kept with its factors.
struct StructuredTarget {
  Matrix matrix;               // p1 x p2, equals left * right^T
  std::vector<Index> support;  // sorted nonzero-row indices
  Matrix left;                 // p1 x r, zero outside support
  Matrix right;                // p2 x r
};

struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Uniform k-subset of [0, p1) rows, standard-normal factor entries on the
/// support, X = U V^T. Deterministic in (dims, seed).
StructuredTarget random_target(const ProblemDims& dims, std::uint64_t seed);

/// n iid N(0, sigma^2) draws.
Vector gaussian_noise(Index n, const NoiseModel& model);

/// Checks every StructuredTarget invariant against `r` and `k`.
bool satisfies_invariants(const StructuredTarget& t, Index k, Index r);

} // namespace nestrec
