#include "nestrec/minimax.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "nestrec/random.hpp"

namespace nestrec {

BitString::BitString(Index length) : length_(length), words_((length + 63) / 64, 0) {
  if (length < 0) throw DimensionError("BitString: negative length");
}

bool BitString::test(Index i) const {
  if (i < 0 || i >= length_) throw DimensionError("BitString::test: index out of range");
  return (words_[static_cast<std::size_t>(i / 64)] >> (i % 64)) & 1ULL;
}

void BitString::set(Index i, bool value) {
  if (i < 0 || i >= length_) throw DimensionError("BitString::set: index out of range");
  const std::uint64_t bit = 1ULL << (i % 64);
  auto& w = words_[static_cast<std::size_t>(i / 64)];
  w = value ? (w | bit) : (w & ~bit);
}

Index BitString::weight() const {
  Index total = 0;
  for (auto w : words_) total += std::popcount(w);
  return total;
}

std::vector<Index> BitString::ones() const {
  std::vector<Index> out;
  for (Index i = 0; i < length_; ++i)
    if (test(i)) out.push_back(i);
  return out;
}

Index hamming(const BitString& a, const BitString& b) {
  if (a.length_ != b.length_) throw DimensionError("hamming: length mismatch");
  Index d = 0;
  for (std::size_t i = 0; i < a.words_.size(); ++i) d += std::popcount(a.words_[i] ^ b.words_[i]);
  return d;
}

double PackingSet::log_count() const {
  if (members.empty()) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(members.size()));
}

double HypothesisSet::log_count() const {
  if (members.empty()) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(members.size()));
}

namespace {

double log_binomial(Index n, Index k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Smallest member count M with log M >= target.
Index count_for_log(double target) {
  if (target <= 0.0) return 1;
  if (target > 40.0) return std::numeric_limits<Index>::max() / 4;
  auto m = static_cast<Index>(std::ceil(std::exp(target)));
  while (m > 1 && std::log(static_cast<double>(m - 1)) >= target) --m;
  while (std::log(static_cast<double>(m)) < target) ++m;
  return m;
}

BitString draw_candidate(Index n, std::optional<Index> weight, Engine& engine) {
  BitString s(n);
  if (weight) {
    for (Index i : random_subset(n, *weight, engine)) s.set(i);
  } else {
    for (Index i = 0; i < n; ++i) s.set(i, (engine() >> 63) != 0);
  }
  return s;
}

} // namespace

PackingSet greedy_packing(Index universe_size, std::optional<Index> weight, Index min_distance,
                          double target_log_count, std::uint64_t seed,
                          std::optional<Index> retry_budget) {
  if (universe_size < 1) throw DimensionError("greedy_packing: N must be >= 1");
  if (weight && (*weight < 0 || *weight > universe_size))
    throw DimensionError("greedy_packing: need 0 <= D <= N");
  if (min_distance < 0) throw DimensionError("greedy_packing: min_distance must be >= 0");
  if (weight ? min_distance > 2 * *weight : min_distance > universe_size)
    throw DimensionError("greedy_packing: min_distance exceeds the largest possible distance");

  const double capacity = weight ? log_binomial(universe_size, *weight)
                                 : static_cast<double>(universe_size) * std::log(2.0);
  if (target_log_count > capacity + 1e-12)
    throw CapacityError("greedy_packing: target exceeds the number of candidate strings", 0,
                        target_log_count);

  const Index target = count_for_log(target_log_count);
  const Index budget = retry_budget ? *retry_budget : 200 * target;
  if (budget < 0) throw DomainError("greedy_packing: retry budget must be >= 0");

  PackingSet set;
  set.universe_size = universe_size;
  set.weight = weight;
  set.min_distance = min_distance;
  Engine engine = make_engine(seed, "packing");

  for (Index draw = 0; draw < budget && static_cast<Index>(set.members.size()) < target; ++draw) {
    BitString candidate = draw_candidate(universe_size, weight, engine);
    const bool separated =
        std::all_of(set.members.begin(), set.members.end(), [&](const BitString& kept) {
          return hamming(kept, candidate) >= min_distance;
        });
    // Distance 0 means a repeat; a packing never holds duplicates.
    if (separated && (min_distance > 0 || std::find(set.members.begin(), set.members.end(),
                                                    candidate) == set.members.end()))
      set.members.push_back(std::move(candidate));
  }

  if (static_cast<Index>(set.members.size()) < target)
    throw CapacityError("greedy_packing: retry budget exhausted after " +
                            std::to_string(set.members.size()) + " members",
                        static_cast<Index>(set.members.size()), target_log_count);

  set.certified = verify_packing(set);
  if (!set.certified) throw NumericalError("greedy_packing: certification failed");
  return set;
}

bool verify_packing(const PackingSet& set) {
  const auto& ms = set.members;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i].size() != set.universe_size) return false;
    if (set.weight && ms[i].weight() != *set.weight) return false;
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      const Index d = hamming(ms[i], ms[j]);
      if (d == 0 || d < set.min_distance) return false;
    }
  }
  return true;
}

PackingSet build_support_packing(Index p1, Index k, std::uint64_t seed) {
  if (k < 1 || 2 * k > p1) throw DimensionError("build_support_packing: need 1 <= k <= p1/2");
  const double kd = static_cast<double>(k);
  const double target = 4.0 / 25.0 * kd * std::log(static_cast<double>(p1) / kd);
  return greedy_packing(p1, k, (k + 3) / 4, target, derive_seed(seed, "support-packing"));
}

PackingSet build_sign_packing(Index rows, Index cols, double min_fraction, double target_rate,
                              std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw DimensionError("build_sign_packing: empty sign matrix");
  if (!(min_fraction >= 0.0 && min_fraction <= 1.0))
    throw DomainError("build_sign_packing: min_fraction must lie in [0, 1]");
  if (!(target_rate >= 0.0)) throw DomainError("build_sign_packing: target_rate must be >= 0");
  const Index n = rows * cols;
  const auto min_distance = static_cast<Index>(std::ceil(min_fraction * static_cast<double>(n) - 1e-12));
  return greedy_packing(n, std::nullopt, min_distance, target_rate * static_cast<double>(n),
                        derive_seed(seed, "sign-packing"));
}

Matrix sign_matrix(const BitString& bits, Index rows, Index cols) {
  if (bits.size() != rows * cols) throw DimensionError("sign_matrix: bit length != rows*cols");
  Matrix t(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) t(i, j) = bits.test(i * cols + j) ? 1.0 : -1.0;
  return t;
}

namespace {

void check_supports(const ProblemDims& dims, const PackingSet& supports, const char* who) {
  if (supports.universe_size != dims.p1 || supports.weight != dims.k)
    throw DimensionError(std::string(who) + ": supports must be weight-k subsets of [p1]");
}

} // namespace

HypothesisSet build_hypothesis_row(const ProblemDims& dims, double epsilon,
                                   const PackingSet& supports, const PackingSet& signs) {
  dims.validate();
  if (!(epsilon > 0.0)) throw DomainError("build_hypothesis_row: epsilon must be > 0");
  check_supports(dims, supports, "build_hypothesis_row");
  if (signs.universe_size != dims.r * dims.p2)
    throw DimensionError("build_hypothesis_row: signs must be r x p2 patterns");

  HypothesisSet set;
  set.kind = HypothesisKind::row_replicated;
  set.epsilon = epsilon;
  set.dims = dims;
  const double scale = epsilon / std::sqrt(static_cast<double>(dims.k * dims.p2));
  for (const auto& s : supports.members) {
    const std::vector<Index> rows = s.ones();
    for (const auto& bits : signs.members) {
      const Matrix t = sign_matrix(bits, dims.r, dims.p2);
      Matrix x = Matrix::Zero(dims.p1, dims.p2);
      // Support row j carries row (j mod r) of the stacked copies of T.
      for (std::size_t j = 0; j < rows.size(); ++j)
        x.row(rows[j]) = scale * t.row(static_cast<Index>(j) % dims.r);
      set.members.push_back(std::move(x));
    }
  }
  return set;
}

HypothesisSet build_hypothesis_col(const ProblemDims& dims, double epsilon,
                                   const PackingSet& supports, const PackingSet& signs) {
  dims.validate();
  if (!(epsilon > 0.0)) throw DomainError("build_hypothesis_col: epsilon must be > 0");
  check_supports(dims, supports, "build_hypothesis_col");
  if (signs.universe_size != dims.k * dims.r)
    throw DimensionError("build_hypothesis_col: signs must be k x r patterns");

  HypothesisSet set;
  set.kind = HypothesisKind::col_replicated;
  set.epsilon = epsilon;
  set.dims = dims;
  const double scale = epsilon / std::sqrt(static_cast<double>(dims.k * dims.p2));
  const Index width = (dims.p2 + dims.r - 1) / dims.r;
  for (const auto& s : supports.members) {
    const std::vector<Index> rows = s.ones();
    for (const auto& bits : signs.members) {
      const Matrix t = sign_matrix(bits, dims.k, dims.r);
      Matrix x = Matrix::Zero(dims.p1, dims.p2);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (Index j = 0; j < dims.p2; ++j)
          x(rows[i], j) = scale * t(static_cast<Index>(i), j / width);
      set.members.push_back(std::move(x));
    }
  }
  return set;
}

MembershipReport verify_hypotheses(const HypothesisSet& set, std::optional<Index> subsample,
                                   std::uint64_t seed) {
  MembershipReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  const auto& dims = set.dims;
  bool ok = !set.members.empty();
  for (const auto& x : set.members) {
    if (x.rows() != dims.p1 || x.cols() != dims.p2) return rep;
    rep.max_norm_error = std::max(rep.max_norm_error, std::abs(x.norm() - set.epsilon) / set.epsilon);
    rep.max_rank = std::max(rep.max_rank, numerical_rank(x));
    rep.max_rows = std::max(rep.max_rows, static_cast<Index>(nonzero_rows(x).size()));
  }
  ok = ok && rep.max_norm_error <= 1e-12 && rep.max_rank <= dims.r && rep.max_rows <= dims.k;

  std::vector<Index> pick(set.members.size());
  std::iota(pick.begin(), pick.end(), Index{0});
  if (subsample && *subsample < static_cast<Index>(pick.size())) {
    Engine engine = make_engine(seed, "hypothesis-subsample");
    pick = random_subset(static_cast<Index>(set.members.size()), *subsample, engine);
  }
  for (std::size_t a = 0; a < pick.size(); ++a)
    for (std::size_t b = a + 1; b < pick.size(); ++b) {
      const double d = (set.members[pick[a]] - set.members[pick[b]]).norm();
      rep.min_separation = std::min(rep.min_separation, d);
      ++rep.pairs_checked;
    }
  if (rep.pairs_checked > 0) ok = ok && rep.min_separation >= 0.5 * set.epsilon;
  rep.ok = ok;
  return rep;
}

double kl_gaussian(const NestedOperator& op, const Matrix& x, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("kl_gaussian: sigma must be > 0");
  return apply(op, x).squaredNorm() / (2.0 * sigma * sigma);
}

double fano_bound_log(double log_count, double alpha) {
  if (!(log_count > 0.0)) throw DomainError("fano_bound: log M must be > 0");
  if (!(alpha > 0.0 && alpha < 0.125)) throw DomainError("fano_bound: alpha must lie in (0, 1/8)");
  const double root = std::exp(0.5 * log_count);
  const double lead = std::isinf(root) ? 1.0 : root / (1.0 + root);
  return lead * (1.0 - 2.0 * alpha - std::sqrt(2.0 * alpha / log_count));
}

double fano_bound(Index count, double alpha) {
  if (count < 2) throw DomainError("fano_bound: M must be >= 2");
  return fano_bound_log(std::log(static_cast<double>(count)), alpha);
}

LowerRate lower_rate(const ProblemDims& dims, double sigma, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("lower_rate: gamma must be > 0");
  if (!(sigma >= 0.0)) throw DomainError("lower_rate: sigma must be >= 0");
  if (dims.k < 1 || dims.k > dims.p1 || dims.r < 1 || dims.p2 < 1)
    throw DimensionError("lower_rate: need 1 <= k <= p1, r >= 1, p2 >= 1");
  const double k = static_cast<double>(dims.k);
  const double dof = k * std::log(static_cast<double>(dims.p1) / k) +
                     static_cast<double>(dims.r) * static_cast<double>(std::max(dims.k, dims.p2));
  LowerRate out;
  out.rate = 2.5e-3 * sigma * std::sqrt(dof / gamma);
  out.epsilon = 4.0 * out.rate;
  return out;
}

} // namespace nestrec
