// nestrec: command-line front end for recovery, experiments and the
// lower-bound / phase-retrieval demos.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nestrec/cpr.hpp"
#include "nestrec/estimator.hpp"
#include "nestrec/harness.hpp"
#include "nestrec/matrix_io.hpp"
#include "nestrec/minimax.hpp"
#include "nestrec/operators.hpp"
#include "nestrec/random.hpp"

namespace fs = std::filesystem;
using namespace nestrec;

namespace {

struct DimsOptions {
  Index p1 = 200, p2 = 10, k = 8, r = 2;
  Index m = 0, n = 0;  // 0 selects the default rules

  void add(CLI::App* app) {
    app->add_option("--p1", p1, "Row dimension")->capture_default_str();
    app->add_option("--p2", p2, "Column dimension")->capture_default_str();
    app->add_option("--k", k, "Number of nonzero rows")->capture_default_str();
    app->add_option("--r", r, "Rank")->capture_default_str();
    app->add_option("--m", m, "Compressed rows (default ceil(5k log(p1/k)))");
    app->add_option("--n", n, "Measurements (default 4r max(m, p2))");
  }

  ProblemDims resolve() const {
    ProblemDims d{p1, p2, m, n, k, r};
    if (d.m == 0) d.m = MRule{}(p1, k);
    if (d.n == 0) d.n = NRule{}(r, d.m, p2);
    d.validate();
    return d;
  }
};

struct RecoveryOptions {
  double c1 = 4.0, c2 = 4.0;
  bool no_postprocess = false;
  std::string stage1 = "admm", stage2 = "admm";
  Index max_iters = 2000;
  std::optional<double> tol;

  void add(CLI::App* app) {
    app->add_option("--c1", c1, "Stage-1 radius constant")->capture_default_str();
    app->add_option("--c2", c2, "Stage-2 radius constant")->capture_default_str();
    app->add_flag("--no-postprocess", no_postprocess, "Skip the final rank/row projection");
    app->add_option("--stage1", stage1, "admm or iht")->check(CLI::IsMember({"admm", "iht"}));
    app->add_option("--stage2", stage2, "admm or iht")->check(CLI::IsMember({"admm", "iht"}));
    app->add_option("--max-iters", max_iters, "Per-stage iteration cap")->capture_default_str();
    app->add_option("--tol", tol, "Relative tolerance (default 1e-8 noise-free, 1e-6 noisy)");
  }

  RecoveryConfig resolve(double sigma) const {
    RecoveryConfig cfg;
    cfg.c1 = c1;
    cfg.c2 = c2;
    cfg.postprocess = !no_postprocess;
    cfg.stage1 = stage1 == "iht" ? StageMethod::iht : StageMethod::admm;
    cfg.stage2 = stage2 == "iht" ? StageMethod::iht : StageMethod::admm;
    cfg.solver = sigma > 0.0 ? SolverConfig::noisy() : SolverConfig::noise_free();
    cfg.solver.max_iters = max_iters;
    if (tol) cfg.solver.tol = *tol;
    cfg.validate();
    return cfg;
  }
};

void print_report(const char* name, const SolveReport& r) {
  std::printf("%s: iters=%ld converged=%s primal=%.3e dual=%.3e violation=%.3e objective=%.6g radius=%.6g\n",
              name, static_cast<long>(r.iters_used), r.converged ? "yes" : "no", r.primal_residual,
              r.dual_residual, r.constraint_violation, r.objective, r.radius);
}

int cmd_generate(const DimsOptions& dopt, double sigma, std::uint64_t seed, const fs::path& out) {
  const ProblemDims dims = dopt.resolve();
  const SyntheticInstance inst = make_instance(dims, sigma, seed);
  fs::create_directories(out);
  save_operator(out / "operator", inst.op, seed);
  save_matrix(out / "y.nrm", inst.y);
  save_matrix(out / "truth.nrm", inst.target.matrix);
  nlohmann::json meta = {{"p1", dims.p1}, {"p2", dims.p2}, {"m", dims.m}, {"n", dims.n},
                         {"k", dims.k},   {"r", dims.r},   {"sigma", sigma}, {"seed", seed}};
  std::ofstream(out / "instance.json") << meta.dump(2) << '\n';
  std::printf("wrote instance p1=%ld p2=%ld m=%ld n=%ld k=%ld r=%ld sigma=%g to %s\n",
              static_cast<long>(dims.p1), static_cast<long>(dims.p2), static_cast<long>(dims.m),
              static_cast<long>(dims.n), static_cast<long>(dims.k), static_cast<long>(dims.r), sigma,
              out.string().c_str());
  return 0;
}

int cmd_recover(const fs::path& op_dir, const fs::path& y_path, Index k, Index r, double sigma,
                const std::optional<fs::path>& truth_path, const std::optional<fs::path>& out,
                const RecoveryOptions& ropt) {
  const NestedOperator op = load_operator(op_dir);
  const Matrix ym = load_matrix(y_path);
  if (ym.cols() != 1) throw DimensionError("measurement file must hold a column vector");
  const Vector y = ym.col(0);
  const ProblemDims dims{op.input_rows(), op.input_cols(), op.psi.rows(), op.n(), k, r};
  std::optional<Matrix> truth;
  if (truth_path) truth = load_matrix(*truth_path);

  const auto start = std::chrono::steady_clock::now();
  const RecoveryResult res = recover(y, op, dims, sigma, ropt.resolve(sigma), truth ? &*truth : nullptr);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print_report("stage1", res.stage1_report);
  print_report("stage2", res.stage2_report);
  if (res.frobenius_error) {
    std::printf("frobenius_error=%.6e relative_error=%.6e\n", *res.frobenius_error,
                *res.frobenius_error / std::max(truth->norm(), 1e-300));
    if (res.normalized_sq_error) std::printf("normalized_sq_error=%.6e\n", *res.normalized_sq_error);
  }
  std::printf("elapsed_s=%.3f\n", secs);
  if (out) save_matrix(*out, res.xhat);
  return res.converged() ? 0 : 2;
}

int cmd_experiment(const fs::path& config, const fs::path& out, unsigned threads,
                   std::optional<std::uint64_t> seed, std::optional<Index> trials,
                   std::optional<double> sigma2) {
  ExperimentConfig cfg = load_config(config);
  if (seed) cfg.master_seed = *seed;
  if (trials) cfg.trials = *trials;
  if (sigma2) cfg.sigma2 = *sigma2;
  cfg.validate();
  const ResultTable table = run_grid(cfg, threads);
  emit_csv(table, out);
  std::printf("%-4s %-4s %-6s %-6s %-14s\n", "k", "r", "m", "n", "median_err_sq");
  for (const auto& [key, med] : table.medians) {
    const Index m = cfg.m_rule(cfg.p1, key.first);
    std::printf("%-4ld %-4ld %-6ld %-6ld %-14.6g\n", static_cast<long>(key.first),
                static_cast<long>(key.second), static_cast<long>(m),
                static_cast<long>(cfg.n_rule(key.second, m, cfg.p2)), med);
  }
  std::printf("rows=%zu failed=%ld csv=%s\n", table.rows.size(), static_cast<long>(table.failures()),
              out.string().c_str());
  return table.failures() > 0 ? 2 : 0;
}

int cmd_rip(const DimsOptions& dopt, Index trials, std::uint64_t seed) {
  const ProblemDims dims = dopt.resolve();
  const SensingMatrix psi = gaussian_sensing(dims.p1, dims.m, derive_seed(seed, "psi"));
  const RankOperator w = gaussian_rank_operator(dims.m, dims.p2, dims.n, derive_seed(seed, "w"));
  const RipEstimate ep = estimate_rip(psi, dims.k, dims.p2, trials, derive_seed(seed, "rip-psi"));
  const RipEstimate ew = estimate_rip(w, dims.r, trials, derive_seed(seed, "rip-w"));
  std::printf("p1=%ld p2=%ld m=%ld n=%ld k=%ld r=%ld trials=%ld\n", static_cast<long>(dims.p1),
              static_cast<long>(dims.p2), static_cast<long>(dims.m), static_cast<long>(dims.n),
              static_cast<long>(dims.k), static_cast<long>(dims.r), static_cast<long>(trials));
  std::printf("delta_psi(k)  >= %.4f  (worst ratio %.4f)\n", ep.delta_lower_bound, ep.worst_case_ratio);
  std::printf("delta_W(r)    >= %.4f  (worst ratio %.4f)\n", ew.delta_lower_bound, ew.worst_case_ratio);
  std::printf("gamma (working value (1+dW)(1+dPsi)) = %.4f\n", gamma_bound(ep, ew));
  std::printf("note: sampled maxima lower-bound the true constants; they are not certificates\n");
  return 0;
}

int cmd_minimax(const DimsOptions& dopt, double sigma, std::optional<double> gamma_opt,
                Index rip_trials, std::uint64_t seed) {
  const ProblemDims dims = dopt.resolve();
  if (!(sigma > 0.0)) throw DomainError("minimax: sigma must be > 0");
  const NestedOperator op{gaussian_sensing(dims.p1, dims.m, derive_seed(seed, "psi")),
                          gaussian_rank_operator(dims.m, dims.p2, dims.n, derive_seed(seed, "w")),
                          std::nullopt};
  double gamma = 0.0;
  if (gamma_opt) {
    gamma = *gamma_opt;
  } else {
    const RipEstimate ep = estimate_rip(op.psi, dims.k, dims.p2, rip_trials, derive_seed(seed, "rip-psi"));
    const RipEstimate ew = estimate_rip(op.w, dims.r, rip_trials, derive_seed(seed, "rip-w"));
    gamma = gamma_bound(ep, ew);
  }

  const PackingSet supports = build_support_packing(dims.p1, dims.k, seed);
  const double kd = static_cast<double>(dims.k);
  const double klog = kd * std::log(static_cast<double>(dims.p1) / kd);
  std::printf("dims: p1=%ld p2=%ld m=%ld n=%ld k=%ld r=%ld sigma=%g gamma=%.4f\n", static_cast<long>(dims.p1),
              static_cast<long>(dims.p2), static_cast<long>(dims.m), static_cast<long>(dims.n),
              static_cast<long>(dims.k), static_cast<long>(dims.r), sigma, gamma);
  std::printf("%-6s %-12s %-10s %-12s %-12s %-10s\n", "class", "epsilon", "log|X|", "KL_mean", "alpha", "fano");

  auto row = [&](const char* name, const HypothesisSet& set) {
    double kl = 0.0;
    for (const auto& x : set.members) kl += kl_gaussian(op, x, sigma);
    kl /= static_cast<double>(set.members.size());
    const double log_count = set.log_count();
    const double alpha = log_count > 0.0 ? kl / log_count : INFINITY;
    char fano[32] = "n/a";
    if (alpha > 0.0 && alpha < 0.125) std::snprintf(fano, sizeof fano, "%.4f", fano_bound_log(log_count, alpha));
    std::printf("%-6s %-12.4e %-10.4f %-12.4e %-12.4e %-10s\n", name, set.epsilon, log_count, kl, alpha, fano);
  };

  const PackingSet t_row = build_sign_packing(dims.r, dims.p2, 1.0 / 8.0, 3.0 / 25.0, seed);
  const double eps_row =
      1e-2 * sigma * std::sqrt((klog + static_cast<double>(dims.r * dims.p2)) / gamma);
  row("X'", build_hypothesis_row(dims, eps_row, supports, t_row));

  const PackingSet t_col = build_sign_packing(dims.k, dims.r, 1.0 / 8.0, 3.0 / 25.0, seed);
  const double eps_col =
      1e-2 * sigma * std::sqrt((klog + static_cast<double>(dims.r * dims.k)) / gamma);
  row("X''", build_hypothesis_col(dims, eps_col, supports, t_col));

  const LowerRate rate = lower_rate(dims, sigma, gamma);
  std::printf("lower_rate=%.6e (hypothesis epsilon %.6e)\n", rate.rate, rate.epsilon);
  return 0;
}

int cmd_packing(Index n, std::optional<Index> weight, Index min_distance, double target_log,
                std::uint64_t seed, std::optional<Index> budget) {
  try {
    const PackingSet set = greedy_packing(n, weight, min_distance, target_log, seed, budget);
    std::printf("members=%zu log_count=%.4f target=%.4f min_distance=%ld certified=%s\n", set.members.size(),
                set.log_count(), target_log, static_cast<long>(min_distance), set.certified ? "yes" : "no");
    return 0;
  } catch (const CapacityError& e) {
    std::printf("capacity error: %s (achieved %ld members)\n", e.what(), static_cast<long>(e.achieved()));
    return 2;
  }
}

int cmd_cpr(Index p, Index k, Index m, Index n, double sigma, std::uint64_t seed, Index iters) {
  const PhaselessInstance inst = generate_cpr(p, k, m, n, sigma, seed);
  CprConfig cfg;
  cfg.wf_iters = iters;
  const auto start = std::chrono::steady_clock::now();
  const CprResult res = cpr_two_stage(inst, k, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("p=%ld k=%ld m=%ld n=%ld sigma=%g epsilon=%.4e\n", static_cast<long>(p), static_cast<long>(k),
              static_cast<long>(m), static_cast<long>(n), sigma, inst.epsilon);
  std::printf("lifted_relative_error=%.6e\n", lifted_relative_error(res.xhat_lifted, *inst.x_true));
  std::printf("stage2_residual=%.4e radius=%.4e within=%s\n", res.stage2_residual, res.stage2_radius,
              res.within_radius ? "yes" : "no");
  std::printf("elapsed_s=%.3f\n", secs);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage recovery of low-rank, row-sparse matrices from nested measurements"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic instance (operator, y, truth)");
  DimsOptions gen_dims;
  gen_dims.add(gen);
  double gen_sigma = 0.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--sigma", gen_sigma, "Noise standard deviation")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* rec = app.add_subcommand("recover", "Two-stage recovery of one instance from files");
  std::string rec_op, rec_y, rec_truth, rec_out;
  Index rec_k = 0, rec_r = 0;
  double rec_sigma = 0.0;
  RecoveryOptions rec_opts;
  rec->add_option("--operator", rec_op, "Operator directory")->required();
  rec->add_option("--y", rec_y, "Measurements (NRM1, n x 1)")->required();
  rec->add_option("--k", rec_k, "Row sparsity")->required();
  rec->add_option("--r", rec_r, "Rank")->required();
  rec->add_option("--sigma", rec_sigma, "Noise standard deviation")->capture_default_str();
  rec->add_option("--truth", rec_truth, "Optional ground truth (NRM1)");
  rec->add_option("--out", rec_out, "Write the estimate here (NRM1)");
  rec_opts.add(rec);

  auto* exp = app.add_subcommand("experiment", "Run a seeded experiment grid to CSV");
  std::string exp_config, exp_out;
  unsigned exp_threads = 1;
  std::optional<std::uint64_t> exp_seed;
  std::optional<Index> exp_trials;
  std::optional<double> exp_sigma2;
  exp->add_option("--config", exp_config, "JSON experiment config")->required();
  exp->add_option("--out", exp_out, "CSV output path")->required();
  exp->add_option("--threads", exp_threads, "Worker threads (0 = all cores)")->capture_default_str();
  exp->add_option("--seed", exp_seed, "Override master_seed");
  exp->add_option("--trials", exp_trials, "Override trials");
  exp->add_option("--sigma2", exp_sigma2, "Override sigma2");

  auto* rip = app.add_subcommand("rip", "Empirical restricted-isometry probes of Gaussian Psi and W");
  DimsOptions rip_dims;
  rip_dims.add(rip);
  Index rip_trials = 500;
  std::uint64_t rip_seed = 1;
  rip->add_option("--trials", rip_trials, "Probes per operator")->capture_default_str();
  rip->add_option("--seed", rip_seed, "Master seed")->capture_default_str();

  auto* mm = app.add_subcommand("minimax", "Hypothesis classes, KL and Fano table");
  DimsOptions mm_dims;
  mm_dims.p1 = 100;
  mm_dims.k = 8;
  mm_dims.add(mm);
  double mm_sigma = 0.01;
  std::optional<double> mm_gamma;
  Index mm_trials = 200;
  std::uint64_t mm_seed = 1;
  mm->add_option("--sigma", mm_sigma, "Noise standard deviation")->capture_default_str();
  mm->add_option("--gamma", mm_gamma, "Isometry constant (default: RIP-probed working value)");
  mm->add_option("--rip-trials", mm_trials, "Probes used to estimate gamma")->capture_default_str();
  mm->add_option("--seed", mm_seed, "Master seed")->capture_default_str();

  auto* pk = app.add_subcommand("packing", "Certified greedy Hamming packing");
  Index pk_n = 16, pk_dmin = 2;
  std::optional<Index> pk_weight, pk_budget;
  double pk_target = 1.0;
  std::uint64_t pk_seed = 1;
  pk->add_option("--N", pk_n, "String length")->capture_default_str();
  pk->add_option("--D", pk_weight, "Common Hamming weight (omit for unconstrained strings)");
  pk->add_option("--min-distance", pk_dmin, "Pairwise Hamming floor")->capture_default_str();
  pk->add_option("--target-log", pk_target, "Target log member count")->capture_default_str();
  pk->add_option("--budget", pk_budget, "Candidate draws (default 200x target count)");
  pk->add_option("--seed", pk_seed, "Seed")->capture_default_str();

  auto* cpr = app.add_subcommand("cpr", "Compressive phase retrieval demo");
  Index cpr_p = 64, cpr_k = 3, cpr_m = 25, cpr_n = 200, cpr_iters = 500;
  double cpr_sigma = 0.0;
  std::uint64_t cpr_seed = 1;
  cpr->add_option("--p", cpr_p, "Signal length")->capture_default_str();
  cpr->add_option("--k", cpr_k, "Sparsity")->capture_default_str();
  cpr->add_option("--m", cpr_m, "Compressed length")->capture_default_str();
  cpr->add_option("--n", cpr_n, "Measurements")->capture_default_str();
  cpr->add_option("--sigma", cpr_sigma, "Noise standard deviation")->capture_default_str();
  cpr->add_option("--seed", cpr_seed, "Seed")->capture_default_str();
  cpr->add_option("--iters", cpr_iters, "Wirtinger-flow iterations")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(gen_dims, gen_sigma, gen_seed, gen_out);
    if (*rec)
      return cmd_recover(rec_op, rec_y, rec_k, rec_r, rec_sigma,
                         rec_truth.empty() ? std::nullopt : std::optional<fs::path>(rec_truth),
                         rec_out.empty() ? std::nullopt : std::optional<fs::path>(rec_out), rec_opts);
    if (*exp) return cmd_experiment(exp_config, exp_out, exp_threads, exp_seed, exp_trials, exp_sigma2);
    if (*rip) return cmd_rip(rip_dims, rip_trials, rip_seed);
    if (*mm) return cmd_minimax(mm_dims, mm_sigma, mm_gamma, mm_trials, mm_seed);
    if (*pk) return cmd_packing(pk_n, pk_weight, pk_dmin, pk_target, pk_seed, pk_budget);
    if (*cpr) return cmd_cpr(cpr_p, cpr_k, cpr_m, cpr_n, cpr_sigma, cpr_seed, cpr_iters);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
