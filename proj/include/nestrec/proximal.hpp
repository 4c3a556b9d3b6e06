#pragma once

// Proximal and projection maps for the structure-promoting norms and sets.
// All functions accept any dense Eigen expression and return a plain object
// of the same scalar type.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nestrec/core.hpp"

namespace nestrec {

namespace detail {

template <typename Derived>
using Plain = typename Derived::PlainObject;

template <typename Derived>
Eigen::BDCSVD<Plain<Derived>> thin_svd(const Eigen::MatrixBase<Derived>& b) {
  Eigen::BDCSVD<Plain<Derived>> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed to converge");
  return svd;
}

} // namespace detail

/// Nuclear norm (sum of singular values).
template <typename Derived>
typename Derived::RealScalar nuclear_norm(const Eigen::MatrixBase<Derived>& b) {
  if (b.size() == 0) return 0;
  return Eigen::BDCSVD<detail::Plain<Derived>>(b).singularValues().sum();
}

/// Sum of row-wise Euclidean norms.
template <typename Derived>
typename Derived::RealScalar l12_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.rowwise().norm().sum();
}

/// argmin_Z 0.5||Z - B||_F^2 + tau ||Z||_*: shrinks every singular value by tau.
template <typename Derived>
detail::Plain<Derived> svd_soft_threshold(const Eigen::MatrixBase<Derived>& b,
                                          typename Derived::RealScalar tau) {
  if (!(tau >= 0)) throw DomainError("svd_soft_threshold: tau must be >= 0");
  if (b.size() == 0 || tau == 0) return b;
  const auto svd = detail::thin_svd(b);
  const auto shrunk = (svd.singularValues().array() - tau).max(0).matrix().eval();
  const Index keep = (shrunk.array() > 0).count();
  if (keep == 0) return detail::Plain<Derived>::Zero(b.rows(), b.cols());
  return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

/// Row-wise group shrinkage: the prox of tau * ||.||_{1,2}.
template <typename Derived>
detail::Plain<Derived> row_soft_threshold(const Eigen::MatrixBase<Derived>& x,
                                          typename Derived::RealScalar tau) {
  if (!(tau >= 0)) throw DomainError("row_soft_threshold: tau must be >= 0");
  detail::Plain<Derived> out = x;
  if (tau == 0) return out;
  for (Index i = 0; i < out.rows(); ++i) {
    const auto norm = out.row(i).norm();
    if (norm <= tau)
      out.row(i).setZero();
    else
      out.row(i) *= (1 - tau / norm);
  }
  return out;
}

/// Truncated SVD keeping the r leading singular triplets (Eckart-Young).
template <typename Derived>
detail::Plain<Derived> best_rank_r(const Eigen::MatrixBase<Derived>& b, Index r) {
  const Index full = std::min(b.rows(), b.cols());
  if (r < 0 || r > full) throw DimensionError("best_rank_r: need 0 <= r <= min(rows, cols)");
  if (r == 0) return detail::Plain<Derived>::Zero(b.rows(), b.cols());
  if (r == full) return b;
  const auto svd = detail::thin_svd(b);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

/// Indices of the k rows with largest Euclidean norm; ties go to the smaller
/// index. Returned in ascending order.
template <typename Derived>
std::vector<Index> top_k_row_indices(const Eigen::MatrixBase<Derived>& x, Index k) {
  if (k < 0 || k > x.rows()) throw DimensionError("top_k_rows: need 0 <= k <= rows");
  const auto norms = x.rowwise().squaredNorm().eval();
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms(a) > norms(b); });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

/// Frobenius projection onto matrices with at most k nonzero rows.
template <typename Derived>
detail::Plain<Derived> top_k_rows(const Eigen::MatrixBase<Derived>& x, Index k) {
  detail::Plain<Derived> out = detail::Plain<Derived>::Zero(x.rows(), x.cols());
  for (Index i : top_k_row_indices(x, k)) out.row(i) = x.row(i);
  return out;
}

/// Euclidean (Frobenius for matrices) projection of v onto the ball
/// {u : ||u - center|| <= radius}.
template <typename DerivedV, typename DerivedC>
detail::Plain<DerivedV> project_l2_ball(const Eigen::MatrixBase<DerivedV>& v,
                                        const Eigen::MatrixBase<DerivedC>& center,
                                        typename DerivedV::RealScalar radius) {
  if (v.rows() != center.rows() || v.cols() != center.cols())
    throw DimensionError("project_l2_ball: shape mismatch");
  if (!(radius >= 0)) throw DomainError("project_l2_ball: radius must be >= 0");
  const auto offset = (v - center).eval();
  const auto dist = offset.norm();
  if (dist <= radius) return v;
  return center + (radius / dist) * offset;
}

} // namespace nestrec
