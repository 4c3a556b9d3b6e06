#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nestrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Inputs whose shapes or counts are inconsistent.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Decomposition failures and iterate blow-ups.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Numerical rank of a dense matrix at cutoff kRankTolerance * sigma_max.
Index numerical_rank(const Matrix& m);

/// Indices of rows with at least one nonzero entry, ascending.
std::vector<Index> nonzero_rows(const Matrix& m);

} // namespace nestrec
