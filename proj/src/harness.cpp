#include "nestrec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nestrec/model.hpp"
#include "nestrec/operators.hpp"
#include "nestrec/random.hpp"

namespace nestrec {

using nlohmann::json;

std::vector<Index> IntRange::values() const {
  if (step < 1) throw DomainError("range step must be >= 1");
  std::vector<Index> out;
  for (Index v = lo; v <= hi; v += step) out.push_back(v);
  return out;
}

Index MRule::operator()(Index p1, Index k) const {
  const double kd = static_cast<double>(k);
  return std::max<Index>(1, static_cast<Index>(std::ceil(coef * kd * std::log(static_cast<double>(p1) / kd))));
}

Index NRule::operator()(Index r, Index m, Index p2) const {
  return static_cast<Index>(std::ceil(coef * static_cast<double>(r * std::max(m, p2))));
}

namespace {

std::string format_coef(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  return buf;
}

std::string normalize_tag(std::string tag) {
  std::string out;
  for (std::size_t i = 0; i < tag.size(); ++i) {
    // U+00B7 MIDDLE DOT in UTF-8.
    if (static_cast<unsigned char>(tag[i]) == 0xC2 && i + 1 < tag.size() &&
        static_cast<unsigned char>(tag[i + 1]) == 0xB7) {
      out += '*';
      ++i;
    } else if (tag[i] != ' ') {
      out += tag[i];
    }
  }
  return out;
}

double parse_coef(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0 && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw DomainError("rule coefficient must be a positive number, got '" + text + "'");
}

} // namespace

std::string MRule::tag() const { return "ceil(" + format_coef(coef) + "k*log(p1/k))"; }
std::string NRule::tag() const { return format_coef(coef) + "r*max(m,p2)"; }

MRule parse_m_rule(const std::string& tag) {
  static const std::regex re(R"(^ceil\(([0-9.eE+-]+)\*?k\*?log\(p1/k\)\)$)");
  std::smatch match;
  const std::string norm = normalize_tag(tag);
  if (!std::regex_match(norm, match, re)) throw DomainError("unrecognized m_rule '" + tag + "'");
  return MRule{parse_coef(match[1])};
}

NRule parse_n_rule(const std::string& tag) {
  static const std::regex re(R"(^([0-9.eE+-]+)\*?r\*?max\(m,p2\)$)");
  std::smatch match;
  const std::string norm = normalize_tag(tag);
  if (!std::regex_match(norm, match, re)) throw DomainError("unrecognized n_rule '" + tag + "'");
  return NRule{parse_coef(match[1])};
}

void ExperimentConfig::validate() const {
  if (p1 < 1 || p2 < 1) throw DimensionError("experiment: p1 and p2 must be positive");
  if (trials < 1) throw DimensionError("experiment: trials must be >= 1");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("experiment: sigma2 must be >= 0");
  const auto ks = k_range.values();
  const auto rs = r_range.values();
  if (ks.empty() || rs.empty()) throw DimensionError("experiment: empty k or r range");
  for (Index k : ks)
    for (Index r : rs) {
      const Index m = m_rule(p1, k);
      ProblemDims{p1, p2, m, n_rule(r, m, p2), k, r}.validate();
    }
  recovery.validate();
}

namespace {

IntRange range_from_json(const json& j, const char* name) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3))
    throw DomainError(std::string("experiment: ") + name + " must be [lo, hi] or [lo, hi, step]");
  IntRange r{j[0].get<Index>(), j[1].get<Index>(), j.size() == 3 ? j[2].get<Index>() : 1};
  if (r.step < 1) throw DomainError(std::string("experiment: ") + name + " step must be >= 1");
  return r;
}

json range_to_json(const IntRange& r) { return json::array({r.lo, r.hi, r.step}); }

StageMethod method_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "admm") return StageMethod::admm;
  if (s == "iht") return StageMethod::iht;
  throw DomainError("experiment: stage method must be 'admm' or 'iht'");
}

const char* method_name(StageMethod m) { return m == StageMethod::admm ? "admm" : "iht"; }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw DomainError(std::string("experiment: ") + where + " must be an object");
  for (const auto& item : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }))
      throw DomainError(std::string("experiment: unknown field '") + item.key() + "' in " + where);
}

SolverConfig solver_from_json(const json& j, SolverConfig s) {
  check_keys(j, {"max_iters", "tol", "admm_rho", "adaptive_rho", "radius_floor", "iht_step", "iht_normalized"},
             "solver");
  if (j.contains("max_iters")) s.max_iters = j["max_iters"].get<Index>();
  if (j.contains("tol")) s.tol = j["tol"].get<double>();
  if (j.contains("admm_rho")) s.admm_rho = j["admm_rho"].get<double>();
  if (j.contains("adaptive_rho")) s.adaptive_rho = j["adaptive_rho"].get<bool>();
  if (j.contains("radius_floor")) s.radius_floor = j["radius_floor"].get<double>();
  if (j.contains("iht_step")) s.iht_step = j["iht_step"].get<double>();
  if (j.contains("iht_normalized")) s.iht_normalized = j["iht_normalized"].get<bool>();
  return s;
}

RecoveryConfig recovery_from_json(const json& j, RecoveryConfig r) {
  check_keys(j, {"c1", "c2", "postprocess", "stage1", "stage2", "solver"}, "recovery");
  if (j.contains("c1")) r.c1 = j["c1"].get<double>();
  if (j.contains("c2")) r.c2 = j["c2"].get<double>();
  if (j.contains("postprocess")) r.postprocess = j["postprocess"].get<bool>();
  if (j.contains("stage1")) r.stage1 = method_from_json(j["stage1"]);
  if (j.contains("stage2")) r.stage2 = method_from_json(j["stage2"]);
  if (j.contains("solver")) r.solver = solver_from_json(j["solver"], r.solver);
  return r;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"p1", "p2", "k_range", "r_range", "sigma2", "trials", "m_rule", "n_rule", "master_seed",
              "recovery"},
             "config");
  ExperimentConfig cfg;
  try {
    if (j.contains("p1")) cfg.p1 = j["p1"].get<Index>();
    if (j.contains("p2")) cfg.p2 = j["p2"].get<Index>();
    if (j.contains("k_range")) cfg.k_range = range_from_json(j["k_range"], "k_range");
    if (j.contains("r_range")) cfg.r_range = range_from_json(j["r_range"], "r_range");
    if (j.contains("sigma2")) cfg.sigma2 = j["sigma2"].get<double>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<Index>();
    if (j.contains("m_rule")) cfg.m_rule = parse_m_rule(j["m_rule"].get<std::string>());
    if (j.contains("n_rule")) cfg.n_rule = parse_n_rule(j["n_rule"].get<std::string>());
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("recovery")) cfg.recovery = recovery_from_json(j["recovery"], cfg.recovery);
  } catch (const json::exception& e) {
    throw DomainError(std::string("experiment config has a field of the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.recovery.solver;
  json j = {
      {"p1", cfg.p1},
      {"p2", cfg.p2},
      {"k_range", range_to_json(cfg.k_range)},
      {"r_range", range_to_json(cfg.r_range)},
      {"sigma2", cfg.sigma2},
      {"trials", cfg.trials},
      {"m_rule", cfg.m_rule.tag()},
      {"n_rule", cfg.n_rule.tag()},
      {"master_seed", cfg.master_seed},
      {"recovery",
       {{"c1", cfg.recovery.c1},
        {"c2", cfg.recovery.c2},
        {"postprocess", cfg.recovery.postprocess},
        {"stage1", method_name(cfg.recovery.stage1)},
        {"stage2", method_name(cfg.recovery.stage2)},
        {"solver",
         {{"max_iters", s.max_iters},
          {"tol", s.tol},
          {"admm_rho", s.admm_rho},
          {"adaptive_rho", s.adaptive_rho},
          {"radius_floor", s.radius_floor},
          {"iht_step", s.iht_step},
          {"iht_normalized", s.iht_normalized}}}}},
  };
  return j.dump(2);
}

std::uint64_t trial_seed(std::uint64_t master, Index k, Index r, Index trial) {
  std::uint64_t s = derive_seed(master, "cell-k", static_cast<std::uint64_t>(k));
  s = derive_seed(s, "cell-r", static_cast<std::uint64_t>(r));
  return derive_seed(s, "trial", static_cast<std::uint64_t>(trial));
}

SyntheticInstance make_instance(const ProblemDims& dims, double sigma, std::uint64_t seed) {
  dims.validate();
  if (!(sigma >= 0.0)) throw DomainError("make_instance: sigma must be >= 0");
  SyntheticInstance inst{dims, sigma, random_target(dims, derive_seed(seed, "target")),
                         NestedOperator{gaussian_sensing(dims.p1, dims.m, derive_seed(seed, "psi")),
                                        gaussian_rank_operator(dims.m, dims.p2, dims.n, derive_seed(seed, "w")),
                                        std::nullopt},
                         Vector()};
  inst.y = apply(inst.op, inst.target.matrix) +
           gaussian_noise(dims.n, NoiseModel{sigma, derive_seed(seed, "noise")});
  return inst;
}

TrialResult run_trial(const ExperimentConfig& cfg, Index k, Index r, Index trial) {
  const auto start = std::chrono::steady_clock::now();
  TrialResult row;
  row.k = k;
  row.r = r;
  row.trial = trial;
  row.m = cfg.m_rule(cfg.p1, k);
  row.n = cfg.n_rule(r, row.m, cfg.p2);
  row.seed = trial_seed(cfg.master_seed, k, r, trial);
  row.noise_free = cfg.sigma2 == 0.0;

  const ProblemDims dims{cfg.p1, cfg.p2, row.m, row.n, k, r};
  const double sigma = std::sqrt(cfg.sigma2);
  const SyntheticInstance inst = make_instance(dims, sigma, row.seed);
  const StructuredTarget& target = inst.target;

  const double divisor = row.noise_free ? 1.0 : cfg.sigma2;
  try {
    const RecoveryResult res = recover(inst.y, inst.op, dims, sigma, cfg.recovery, &target.matrix);
    row.frobenius_error = *res.frobenius_error;
    row.stage1_iters = res.stage1_report.iters_used;
    row.stage2_iters = res.stage2_report.iters_used;
    row.failed = !res.converged() || !std::isfinite(row.frobenius_error);
  } catch (const std::runtime_error&) {
    row.frobenius_error = target.matrix.norm();
    row.failed = true;
  }
  row.normalized_sq_error = row.frobenius_error * row.frobenius_error / divisor;
  row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

Index ResultTable::failures() const {
  return static_cast<Index>(std::count_if(rows.begin(), rows.end(), [](const TrialResult& t) { return t.failed; }));
}

std::map<CellKey, double> compute_medians(const std::vector<TrialResult>& rows) {
  std::map<CellKey, std::vector<double>> cells;
  for (const auto& row : rows) cells[{row.k, row.r}].push_back(row.normalized_sq_error);
  std::map<CellKey, double> out;
  for (auto& [key, v] : cells) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    out[key] = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  }
  return out;
}

ResultTable run_grid(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  struct Job {
    Index k, r, trial;
  };
  std::vector<Job> jobs;
  for (Index k : cfg.k_range.values())
    for (Index r : cfg.r_range.values())
      for (Index t = 0; t < cfg.trials; ++t) jobs.push_back({k, r, t});

  ResultTable table;
  table.rows.resize(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      table.rows[i] = run_trial(cfg, jobs[i].k, jobs[i].r, jobs[i].trial);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  table.medians = compute_medians(table.rows);
  return table;
}

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_int_field(const std::string& s, Index line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

double parse_real_field(const std::string& s, Index line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw IoError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

} // namespace

void write_csv(std::ostream& out, const ResultTable& table) {
  out << kCsvHeader << '\n';
  for (const auto& t : table.rows) {
    out << t.k << ',' << t.r << ',' << t.m << ',' << t.n << ',' << t.trial << ',' << t.seed << ','
        << fmt_real(t.frobenius_error) << ',' << fmt_real(t.normalized_sq_error) << ','
        << t.stage1_iters << ',' << t.stage2_iters << ',' << fmt_real(t.wall_ms) << ','
        << (t.failed ? 1 : 0) << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(out, table);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TrialResult> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError("csv: missing or unexpected header");
  std::vector<TrialResult> rows;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw IoError("csv line " + std::to_string(lineno) + ": expected 12 fields");
    TrialResult t;
    t.k = parse_int_field<Index>(f[0], lineno);
    t.r = parse_int_field<Index>(f[1], lineno);
    t.m = parse_int_field<Index>(f[2], lineno);
    t.n = parse_int_field<Index>(f[3], lineno);
    t.trial = parse_int_field<Index>(f[4], lineno);
    t.seed = parse_int_field<std::uint64_t>(f[5], lineno);
    t.frobenius_error = parse_real_field(f[6], lineno);
    t.normalized_sq_error = parse_real_field(f[7], lineno);
    t.stage1_iters = parse_int_field<Index>(f[8], lineno);
    t.stage2_iters = parse_int_field<Index>(f[9], lineno);
    t.wall_ms = parse_real_field(f[10], lineno);
    const int failed = parse_int_field<int>(f[11], lineno);
    if (failed != 0 && failed != 1) throw IoError("csv line " + std::to_string(lineno) + ": failed must be 0/1");
    t.failed = failed == 1;
    rows.push_back(t);
  }
  return rows;
}

std::vector<TrialResult> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("pearson: need two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

} // namespace nestrec
