#pragma once

// Constructive side of the minimax lower bound: Hamming packings of supports
// and sign patterns, the two replicated hypothesis classes built from them,
// Gaussian KL divergences, and the Fano-type probability bound.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nestrec/core.hpp"
#include "nestrec/model.hpp"
#include "nestrec/operators.hpp"

namespace nestrec {

/// Fixed-length bit string packed into 64-bit words.
class BitString {
public:
  BitString() = default;
  explicit BitString(Index length);

  Index size() const { return length_; }
  bool test(Index i) const;
  void set(Index i, bool value = true);
  Index weight() const;
  /// Positions holding a one, ascending.
  std::vector<Index> ones() const;

  friend Index hamming(const BitString& a, const BitString& b);
  friend bool operator==(const BitString&, const BitString&) = default;

private:
  Index length_ = 0;
  std::vector<std::uint64_t> words_;
};

Index hamming(const BitString& a, const BitString& b);

struct PackingSet {
  Index universe_size = 0;
  /// Common Hamming weight of the members; empty for unconstrained strings.
  std::optional<Index> weight;
  Index min_distance = 0;
  std::vector<BitString> members;
  bool certified = false;

  double log_count() const;
};

/// Raised when a packing cannot reach its target size; carries what was built.
class CapacityError : public std::runtime_error {
public:
  CapacityError(const std::string& what, Index achieved, double target_log_count)
      : std::runtime_error(what), achieved_(achieved), target_log_count_(target_log_count) {}
  Index achieved() const { return achieved_; }
  double target_log_count() const { return target_log_count_; }

private:
  Index achieved_;
  double target_log_count_;
};

/// Randomized greedy packing: draws uniform candidates (weight-`weight`
/// subsets, or uniform strings when weight is empty), keeps those at Hamming
/// distance >= min_distance from every kept member, and stops once
/// log(count) >= target_log_count. Succeeds only after an exhaustive pairwise
/// re-check. Throws CapacityError when the counting bound rules out the target
/// or retry_budget draws (default 200x the target count) are exhausted.
PackingSet greedy_packing(Index universe_size, std::optional<Index> weight, Index min_distance,
                          double target_log_count, std::uint64_t seed,
                          std::optional<Index> retry_budget = std::nullopt);

/// Exhaustive pairwise check of weights and distances.
bool verify_packing(const PackingSet& set);

/// k-subsets of [p1] with pairwise distance >= ceil(k/4) and
/// log count >= (4/25) k log(p1/k).
PackingSet build_support_packing(Index p1, Index k, std::uint64_t seed);

/// rows x cols sign patterns (bit 1 -> +1, bit 0 -> -1, row-major) with
/// pairwise distance >= ceil(min_fraction rows cols) and
/// log count >= target_rate rows cols.
PackingSet build_sign_packing(Index rows, Index cols, double min_fraction, double target_rate,
                              std::uint64_t seed);

/// rows x cols +-1 matrix encoded by a sign-packing member.
Matrix sign_matrix(const BitString& bits, Index rows, Index cols);

enum class HypothesisKind { row_replicated, col_replicated };

struct HypothesisSet {
  HypothesisKind kind = HypothesisKind::row_replicated;
  double epsilon = 0.0;
  ProblemDims dims;
  std::vector<Matrix> members;

  double log_count() const;
};

/// Members (eps / sqrt(k p2)) * [I_S 0](1 (x) T): ceil(k/r) vertical copies of
/// an r x p2 sign matrix T, truncated to k rows and placed on the support S.
/// Signs must be r x p2 patterns.
HypothesisSet build_hypothesis_row(const ProblemDims& dims, double epsilon,
                                   const PackingSet& supports, const PackingSet& signs);

/// Members (eps / sqrt(k p2)) * I_S (T (x) 1_{1 x ceil(p2/r)}) truncated to p2
/// columns. Signs must be k x r patterns.
HypothesisSet build_hypothesis_col(const ProblemDims& dims, double epsilon,
                                   const PackingSet& supports, const PackingSet& signs);

struct MembershipReport {
  bool ok = false;
  double max_norm_error = 0.0;  // relative deviation of ||X||_F from epsilon
  Index max_rank = 0;
  Index max_rows = 0;
  double min_separation = 0.0;  // smallest pairwise ||X_i - X_j||_F checked
  Index pairs_checked = 0;
};

/// Checks ||X||_F = eps (1e-12 relative), rank <= r, <= k nonzero rows on all
/// members, and pairwise separation >= eps/2 over all pairs (or over a seeded
/// subsample of `subsample` members).
MembershipReport verify_hypotheses(const HypothesisSet& set,
                                   std::optional<Index> subsample = std::nullopt,
                                   std::uint64_t seed = 0);

/// KL(N(A(X), s^2 I) || N(0, s^2 I)) = ||A(X)||^2 / (2 s^2).
double kl_gaussian(const NestedOperator& op, const Matrix& x, double sigma);

/// sqrt(M)/(1+sqrt(M)) * (1 - 2 alpha - sqrt(2 alpha / log M)) for M >= 2 and
/// 0 < alpha < 1/8.
double fano_bound(Index count, double alpha);

/// Same expression parameterized by log M > 0; admits the fractional counts
/// that appear when a crude lower bound on log M is plugged in.
double fano_bound_log(double log_count, double alpha);

struct LowerRate {
  /// 2.5e-3 sigma sqrt((k log(p1/k) + r (k v p2)) / gamma).
  double rate = 0.0;
  /// Hypothesis radius eps = 4 * rate; the Fano statement tests ||Xhat - X*|| >= eps/4.
  double epsilon = 0.0;
};

LowerRate lower_rate(const ProblemDims& dims, double sigma, double gamma);

} // namespace nestrec
