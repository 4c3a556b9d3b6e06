#pragma once

// Seeded synthetic experiment grid: per-trial instance generation, recovery,
// aggregation into medians, JSON configuration and CSV persistence.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nestrec/core.hpp"
#include "nestrec/estimator.hpp"
#include "nestrec/model.hpp"
#include "nestrec/operators.hpp"

namespace nestrec {

/// Inclusive integer range lo, lo + step, ..., <= hi.
struct IntRange {
  Index lo = 1;
  Index hi = 1;
  Index step = 1;

  std::vector<Index> values() const;
};

/// m = ceil(coef * k * log(p1 / k)).
struct MRule {
  double coef = 5.0;
  Index operator()(Index p1, Index k) const;
  std::string tag() const;
};

/// n = ceil(coef * r * max(m, p2)).
struct NRule {
  double coef = 4.0;
  Index operator()(Index r, Index m, Index p2) const;
  std::string tag() const;
};

/// Parses tags such as "ceil(5k*log(p1/k))" ('·' also accepted as the product sign).
MRule parse_m_rule(const std::string& tag);
/// Parses tags such as "4r*max(m,p2)".
NRule parse_n_rule(const std::string& tag);

struct ExperimentConfig {
  Index p1 = 200;
  Index p2 = 10;
  IntRange k_range{8, 12, 2};
  IntRange r_range{1, 3, 1};
  double sigma2 = 1e-4;
  Index trials = 20;
  MRule m_rule;
  NRule n_rule;
  std::uint64_t master_seed = 1;
  RecoveryConfig recovery;

  /// Throws DimensionError/DomainError on empty ranges, trials < 1,
  /// sigma2 < 0 or cells with r > k.
  void validate() const;
};

/// Reads a JSON object with the ExperimentConfig fields; absent fields keep
/// their defaults, unknown fields are rejected. Ranges are [lo, hi] or
/// [lo, hi, step].
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct TrialResult {
  Index k = 0;
  Index r = 0;
  Index m = 0;
  Index n = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  double frobenius_error = 0.0;
  /// ||Xhat - X*||^2 / sigma^2; with sigma = 0 the divisor is 1 and
  /// noise_free is set.
  double normalized_sq_error = 0.0;
  Index stage1_iters = 0;
  Index stage2_iters = 0;
  double wall_ms = 0.0;
  bool failed = false;
  bool noise_free = false;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// One synthetic draw: Gaussian Psi and W, a random structured target and
/// y = A(X*) + z, every piece from its own stream of `seed`.
struct SyntheticInstance {
  ProblemDims dims;
  double sigma = 0.0;
  StructuredTarget target;
  NestedOperator op;
  Vector y;
};

SyntheticInstance make_instance(const ProblemDims& dims, double sigma, std::uint64_t seed);

/// Seed of trial `trial` in cell (k, r); independent of execution order.
std::uint64_t trial_seed(std::uint64_t master, Index k, Index r, Index trial);

/// Draws Psi, W, X* and z from the trial seed and runs the two-stage
/// estimator. Solver exceptions and non-convergence mark the row as failed
/// (an exception records the error of the zero estimate).
TrialResult run_trial(const ExperimentConfig& cfg, Index k, Index r, Index trial);

using CellKey = std::pair<Index, Index>;  // (k, r)

struct ResultTable {
  std::vector<TrialResult> rows;  // ordered by (k, r, trial)
  std::map<CellKey, double> medians;

  Index failures() const;
};

/// Median normalized squared error per (k, r), failed rows included.
std::map<CellKey, double> compute_medians(const std::vector<TrialResult>& rows);

/// Runs every cell and trial on `threads` workers (0 = hardware concurrency).
/// Output is identical for any thread count apart from wall_ms.
ResultTable run_grid(const ExperimentConfig& cfg, unsigned threads = 1);

inline constexpr const char* kCsvHeader =
    "k,r,m,n,trial,seed,err_fro,err_norm_sq,stage1_iters,stage2_iters,wall_ms,failed";

/// Header plus one row per trial; reals in 17-significant-digit form.
void write_csv(std::ostream& out, const ResultTable& table);
void emit_csv(const ResultTable& table, const std::filesystem::path& path);

/// Inverse of write_csv (noise_free is not persisted and reads back false).
std::vector<TrialResult> parse_csv(std::istream& in);
std::vector<TrialResult> load_csv(const std::filesystem::path& path);

/// Pearson correlation coefficient; NaN when either side is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

} // namespace nestrec
