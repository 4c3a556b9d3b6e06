#include "nestrec/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "nestrec/matrix_io.hpp"
#include "nestrec/model.hpp"
#include "nestrec/random.hpp"

namespace nestrec {

SensingMatrix gaussian_sensing(Index p1, Index m, std::uint64_t seed) {
  if (p1 < 1 || m < 1) throw DimensionError("gaussian_sensing: p1 and m must be positive");
  Engine engine = make_engine(seed, "psi");
  const double variance = 1.0 / static_cast<double>(m);
  return {gaussian_matrix(m, p1, std::sqrt(variance), engine), variance};
}

SensingMatrix identity_sensing(Index p) {
  if (p < 1) throw DimensionError("identity_sensing: p must be positive");
  return {Matrix::Identity(p, p), 1.0};
}

RankOperator RankOperator::dense(Matrix frames, Index m, Index p2, double variance_scale) {
  if (m < 1 || p2 < 1 || frames.cols() < 1 || frames.rows() != m * p2)
    throw DimensionError("RankOperator::dense: frames must be (m*p2) x n with n >= 1");
  if (!frames.allFinite()) throw DomainError("RankOperator::dense: non-finite frame entry");
  RankOperator op;
  op.kind_ = RankOperatorKind::gaussian_dense;
  op.rows_ = m;
  op.cols_ = p2;
  op.variance_scale_ = variance_scale;
  op.frames_ = std::move(frames);
  return op;
}

RankOperator RankOperator::rank_one(Matrix probes) {
  if (probes.rows() < 1 || probes.cols() < 1)
    throw DimensionError("RankOperator::rank_one: need at least one probe of length >= 1");
  if (!probes.allFinite()) throw DomainError("RankOperator::rank_one: non-finite probe entry");
  RankOperator op;
  op.kind_ = RankOperatorKind::rank_one_quadratic;
  const Index m = probes.rows();
  op.rows_ = m;
  op.cols_ = m;
  op.frames_.resize(m * m, probes.cols());
  for (Index i = 0; i < probes.cols(); ++i) {
    Eigen::Map<Matrix> frame(op.frames_.col(i).data(), m, m);
    frame.noalias() = probes.col(i) * probes.col(i).transpose();
  }
  op.probes_ = std::move(probes);
  return op;
}

Vector RankOperator::apply(const Matrix& b) const {
  if (b.rows() != rows_ || b.cols() != cols_)
    throw DimensionError("RankOperator::apply: argument must be " + std::to_string(rows_) + " x " +
                         std::to_string(cols_));
  if (kind_ == RankOperatorKind::rank_one_quadratic)
    return (probes_.array() * (b * probes_).array()).colwise().sum().transpose();
  const Eigen::Map<const Vector> vb(b.data(), b.size());
  return frames_.transpose() * vb;
}

Matrix RankOperator::adjoint(const Vector& y) const {
  if (y.size() != n()) throw DimensionError("RankOperator::adjoint: |y| must equal n");
  if (kind_ == RankOperatorKind::rank_one_quadratic)
    return probes_ * y.asDiagonal() * probes_.transpose();
  Matrix out(rows_, cols_);
  Eigen::Map<Vector>(out.data(), out.size()).noalias() = frames_ * y;
  return out;
}

Matrix RankOperator::frame(Index i) const {
  if (i < 0 || i >= n()) throw DimensionError("RankOperator::frame: index out of range");
  return Eigen::Map<const Matrix>(frames_.col(i).data(), rows_, cols_);
}

RankOperator gaussian_rank_operator(Index m, Index p2, Index n, std::uint64_t seed) {
  if (m < 1 || p2 < 1 || n < 1)
    throw DimensionError("gaussian_rank_operator: m, p2, n must be positive");
  Engine engine = make_engine(seed, "rank-operator");
  const double variance = 1.0 / static_cast<double>(n);
  return RankOperator::dense(gaussian_matrix(m * p2, n, std::sqrt(variance), engine), m, p2,
                             variance);
}

RankOperator gaussian_rank_one_operator(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw DimensionError("gaussian_rank_one_operator: m, n must be positive");
  Engine engine = make_engine(seed, "rank-one-probes");
  return RankOperator::rank_one(gaussian_matrix(m, n, 1.0, engine));
}

Index NestedOperator::input_cols() const {
  return psi2 ? psi2->cols() : w.cols();
}

void NestedOperator::validate() const {
  if (w.rows() != psi.rows())
    throw DimensionError("nested operator: W consumes " + std::to_string(w.rows()) +
                         " rows but Psi produces " + std::to_string(psi.rows()));
  if (psi2 && w.cols() != psi2->rows())
    throw DimensionError("nested operator: W consumes " + std::to_string(w.cols()) +
                         " columns but Psi2 produces " + std::to_string(psi2->rows()));
}

Matrix compress(const NestedOperator& op, const Matrix& x) {
  op.validate();
  if (x.rows() != op.input_rows() || x.cols() != op.input_cols())
    throw DimensionError("nested operator: argument must be " + std::to_string(op.input_rows()) +
                         " x " + std::to_string(op.input_cols()));
  if (op.psi2) return op.psi.data * x * op.psi2->data.transpose();
  return op.psi.data * x;
}

Vector apply(const NestedOperator& op, const Matrix& x) {
  return op.w.apply(compress(op, x));
}

Matrix adjoint(const NestedOperator& op, const Vector& y) {
  op.validate();
  const Matrix inner = op.w.adjoint(y);
  if (op.psi2) return op.psi.data.transpose() * inner * op.psi2->data;
  return op.psi.data.transpose() * inner;
}

namespace {

void record(RipEstimate& est, double ratio) {
  const double deviation = std::abs(ratio - 1.0);
  if (est.trials == 0 || deviation > est.delta_lower_bound) {
    est.delta_lower_bound = deviation;
    est.worst_case_ratio = ratio;
  }
  ++est.trials;
}

} // namespace

RipEstimate estimate_rip(const SensingMatrix& psi, Index k, Index cols, Index trials,
                         std::uint64_t seed) {
  if (k < 1 || k > psi.cols() || cols < 1)
    throw DimensionError("estimate_rip: need 1 <= k <= p1 and cols >= 1");
  RipEstimate est;
  est.structure = RipStructure::row_sparse(k);
  ProblemDims dims{psi.cols(), cols, psi.rows(), 1, k, std::min(k, cols)};
  for (Index t = 0; t < trials; ++t) {
    Matrix x = random_target(dims, derive_seed(seed, "rip-row-sparse", static_cast<std::uint64_t>(t))).matrix;
    x /= x.norm();
    record(est, (psi.data * x).squaredNorm() / x.squaredNorm());
  }
  return est;
}

RipEstimate estimate_rip(const RankOperator& w, Index r, Index trials, std::uint64_t seed) {
  if (r < 1 || r > std::min(w.rows(), w.cols()))
    throw DimensionError("estimate_rip: need 1 <= r <= min(m, p2)");
  RipEstimate est;
  est.structure = RipStructure::low_rank(r);
  for (Index t = 0; t < trials; ++t) {
    Engine engine = make_engine(seed, "rip-low-rank", static_cast<std::uint64_t>(t));
    const Matrix u = gaussian_matrix(w.rows(), r, 1.0, engine);
    const Matrix v = gaussian_matrix(w.cols(), r, 1.0, engine);
    Matrix x = u * v.transpose();
    x /= x.norm();
    record(est, w.apply(x).squaredNorm() / x.squaredNorm());
  }
  return est;
}

RipEstimate estimate_rip(const NestedOperator& op, RipStructure structure, Index trials,
                         std::uint64_t seed) {
  op.validate();
  if (structure.kind == RipStructureKind::row_sparse)
    return estimate_rip(op.psi, structure.level, op.input_cols(), trials, seed);
  return estimate_rip(op.w, structure.level, trials, seed);
}

RipEstimate merge(const RipEstimate& a, const RipEstimate& b) {
  if (a.structure.kind != b.structure.kind || a.structure.level != b.structure.level)
    throw DimensionError("merge: probe sets target different structures");
  RipEstimate out = a.delta_lower_bound >= b.delta_lower_bound ? a : b;
  out.trials = a.trials + b.trials;
  return out;
}

double gamma_bound(const RipEstimate& psi_estimate, const RipEstimate& w_estimate) {
  return (1.0 + w_estimate.delta_lower_bound) * (1.0 + psi_estimate.delta_lower_bound);
}

namespace {

std::string frame_name(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06lld.nrm", static_cast<long long>(i));
  return buf;
}

const char* kind_name(RankOperatorKind kind) {
  return kind == RankOperatorKind::gaussian_dense ? "gaussian_dense" : "rank_one_quadratic";
}

} // namespace

void save_operator(const std::filesystem::path& dir, const NestedOperator& op,
                   std::uint64_t seed) {
  op.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  nlohmann::json manifest = {
      {"kind", kind_name(op.w.kind())},
      {"p1", op.psi.cols()},
      {"m", op.psi.rows()},
      {"p2", op.input_cols()},
      {"n", op.n()},
      {"frame_rows", op.w.rows()},
      {"frame_cols", op.w.cols()},
      {"psi_variance", op.psi.variance_scale},
      {"w_variance", op.w.variance_scale()},
      {"has_psi2", op.psi2.has_value()},
      {"seed", seed},
  };
  save_matrix(dir / "psi.nrm", op.psi.data);
  if (op.psi2) {
    manifest["psi2_variance"] = op.psi2->variance_scale;
    save_matrix(dir / "psi2.nrm", op.psi2->data);
  }
  for (Index i = 0; i < op.n(); ++i) {
    const Matrix frame = op.w.kind() == RankOperatorKind::rank_one_quadratic
                             ? Matrix(op.w.probes().col(i))
                             : op.w.frame(i);
    save_matrix(dir / "frames" / frame_name(i), frame);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

NestedOperator load_operator(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot read manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed operator manifest: ") + e.what());
  }
  const auto kind = manifest.at("kind").get<std::string>();
  const auto n = manifest.at("n").get<Index>();
  const auto rows = manifest.at("frame_rows").get<Index>();
  const auto cols = manifest.at("frame_cols").get<Index>();

  SensingMatrix psi{load_matrix(dir / "psi.nrm"), manifest.value("psi_variance", 1.0)};
  std::optional<SensingMatrix> psi2;
  if (manifest.value("has_psi2", false))
    psi2 = SensingMatrix{load_matrix(dir / "psi2.nrm"), manifest.value("psi2_variance", 1.0)};

  auto load_frame = [&](Index i, Index r, Index c) {
    Matrix f = load_matrix(dir / "frames" / frame_name(i));
    if (f.rows() != r || f.cols() != c) throw IoError("frame " + std::to_string(i) + " has wrong shape");
    return f;
  };

  if (kind == "rank_one_quadratic") {
    Matrix probes(rows, n);
    for (Index i = 0; i < n; ++i) probes.col(i) = load_frame(i, rows, 1);
    NestedOperator op{std::move(psi), RankOperator::rank_one(std::move(probes)), std::move(psi2)};
    op.validate();
    return op;
  }
  if (kind != "gaussian_dense") throw IoError("unknown operator kind '" + kind + "'");
  Matrix frames(rows * cols, n);
  for (Index i = 0; i < n; ++i) {
    const Matrix f = load_frame(i, rows, cols);
    frames.col(i) = Eigen::Map<const Vector>(f.data(), f.size());
  }
  NestedOperator op{std::move(psi),
                    RankOperator::dense(std::move(frames), rows, cols, manifest.value("w_variance", 1.0)),
                    std::move(psi2)};
  op.validate();
  return op;
}

} // namespace nestrec
