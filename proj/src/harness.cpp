#include "benign/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "benign/errors.hpp"
#include "benign/interpolant.hpp"
#include "benign/random.hpp"

namespace benign {

const char* const kCodeVersion = "1.0.0";

namespace {

constexpr std::uint64_t kConeStream = 3;
constexpr std::uint64_t kNoiseCheckStream = 4;
constexpr std::uint64_t kBootstrapStream = 0xb0075ULL;

template <class F>
void parallel_for(int n, int threads, F&& body) {
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  const int extra = std::max(0, std::min(threads, n) - 1);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(extra));
  for (int w = 0; w < extra; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

std::string failure_status(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    return "failed:" + std::string(to_string(err->code())) + ": " + err->what();
  return std::string("failed:internal: ") + e.what();
}

/// Quantities every trial of a point shares.
struct PointContext {
  const ExperimentConfig& cfg;
  const ModelSpec& model;
  const FeatureSplit& split;
  Eigen::VectorXd head_vals;
  Eigen::VectorXd tail_vals;
  double tail_tr = 0.0;
  std::optional<double> r_n;
  std::optional<double> dvoretsky;
};

PointContext make_context(const ExperimentConfig& cfg, const ModelSpec& m, const FeatureSplit& split) {
  PointContext ctx{cfg, m, split, head_values(m.spectrum, split), tail_values(m.spectrum, split),
                   0.0, std::nullopt, std::nullopt};
  if (split.tail_dim() > 0) {
    ctx.tail_tr = ctx.tail_vals.sum();
    ctx.dvoretsky = dvoretsky_dimension(m.spectrum, split, cfg.geometry);
  }
  if (split.head_dim() > 0) ctx.r_n = fixed_point_rn(m.spectrum, split, m.N, cfg.geometry).R;
  return ctx;
}

CheckReport errored(const std::string& name, const std::exception& e) {
  CheckReport r;
  r.name = name;
  r.n_trials = 1;
  r.pass_rate = 0.0;
  r.pass = false;
  if (const auto* err = dynamic_cast<const Error*>(&e))
    r.warnings.push_back(std::string(to_string(err->code())));
  else
    r.warnings.push_back("internal");
  return r;
}

CheckReport run_one_check(const CheckSpec& spec, const PointContext& ctx,
                          const Eigen::MatrixXd& x_head, const Eigen::MatrixXd& x_tail,
                          std::uint64_t seed) {
  const std::string& n = spec.name;
  if (n == "dm_embedding") {
    CheckReport r = spec.params.contains("lower") || spec.params.contains("upper")
                        ? dm_embedding_check(x_tail, ctx.tail_tr, spec.number("lower", 0.5),
                                             spec.number("upper", 1.5))
                        : dm_embedding_check(x_tail, ctx.tail_tr, spec.number("delta", 0.25));
    if (ctx.dvoretsky) annotate_dm_regime(r, ctx.model.N, *ctx.dvoretsky, ctx.cfg.geometry.kappa_dm);
    return r;
  }
  if (n == "dm_upper") return dm_upper_check(x_tail, ctx.tail_vals, spec.number("c", 6.0));
  if (n == "isomorphy")
    return isomorphy_check(x_head, ctx.head_vals,
                           spec.number("kappa_iso", ctx.cfg.geometry.kappa_iso),
                           spec.number("lower", 0.5), spec.number("upper", 1.5));
  if (n == "restricted_cone") {
    require(ctx.r_n.has_value(), ErrorCode::kBadSplit, "restricted cone check needs a head");
    return restricted_cone_check(x_head, ctx.head_vals, *ctx.r_n,
                                 static_cast<int>(spec.number("n_dirs", 100)),
                                 derive_seed(seed, kConeStream), spec.number("lower", 0.5),
                                 spec.number("upper", 1.5));
  }
  if (n == "norm_concentration")
    return norm_concentration_check(x_tail, ctx.tail_tr, spec.number("delta", 0.25));
  if (n == "trace_bound") return trace_bound_check(x_tail, ctx.tail_vals, spec.number("c", 20.0));
  if (n == "noise_operator") {
    const double sigma = ctx.model.sigma_xi > 0.0 ? ctx.model.sigma_xi : 1.0;
    return noise_operator_check(noise_operator(x_tail, ctx.tail_vals),
                                static_cast<int>(spec.number("n_draws", 200)), sigma,
                                ctx.model.noise, derive_seed(seed, kNoiseCheckStream),
                                spec.number("min_pass_rate", 0.9));
  }
  fail(ErrorCode::kConfigError, "unknown check '" + n + "'");
}

/// Runs the configured checks on one design draw; returns the flags string.
std::string run_checks_on(const PointContext& ctx, const Eigen::MatrixXd& x, std::uint64_t seed,
                          std::vector<CheckReport>& out) {
  if (ctx.cfg.checks.empty()) return "";
  const Eigen::MatrixXd x_eig = design_in_eigenbasis(x, ctx.model.spectrum.basis());
  const Eigen::MatrixXd x_head = select_columns(x_eig, ctx.split.head());
  const Eigen::MatrixXd x_tail = select_columns(x_eig, ctx.split.tail());
  std::string flags;
  for (const auto& spec : ctx.cfg.checks) {
    CheckReport r;
    try {
      r = run_one_check(spec, ctx, x_head, x_tail, seed);
    } catch (const std::exception& e) {
      r = errored(spec.name, e);
    }
    if (!flags.empty()) flags += ';';
    const bool failed_to_run = r.passes == 0 && !r.warnings.empty() && r.observed.empty();
    flags += spec.name + "=" + (failed_to_run ? "E" : (r.pass ? "1" : "0"));
    out.push_back(std::move(r));
  }
  return flags;
}

TrialRecord run_trial(const PointContext& ctx, int index, std::uint64_t seed,
                      std::vector<CheckReport>& checks) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec& m = ctx.model;
  TrialRecord rec;
  rec.trial_index = index;
  rec.seed = seed;
  rec.N = m.N;
  rec.p = m.p();
  rec.k_split = ctx.split.head_dim();
  try {
    const DataSample s = make_sample(m, seed);
    const MinNormSolution sol = min_norm_interpolant(s.X, s.y, ctx.cfg.interp_tol);
    require(!sol.rank_deficient, ErrorCode::kRankDeficient,
            "X X^T is singular (rank " + std::to_string(sol.rank) + ")");
    rec.interp_residual = sol.relative_residual;
    const Eigen::VectorXd beta_star = m.beta_ambient();
    decompose(s.X, s.y, sol.beta, ctx.split, m.spectrum.basis(), ctx.cfg.verify_decomposition);
    const RiskBreakdown risk = excess_risk(m.spectrum, sol.beta, beta_star, ctx.split);
    rec.risk_total = risk.total;
    rec.risk_head = risk.head;
    rec.risk_tail = risk.tail;
    if (ctx.cfg.bias_variance) {
      const BiasVariance bv = bias_variance_terms(s.X, m.spectrum, beta_star, m.sigma_xi);
      rec.bias = bv.bias;
      rec.variance = bv.variance;
    }
    rec.check_flags = run_checks_on(ctx, s.X, seed, checks);
  } catch (const std::exception& e) {
    rec.status = failure_status(e);
  }
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<CheckReport> merge_by_name(const std::vector<std::vector<CheckReport>>& per_trial) {
  std::vector<CheckReport> merged;
  std::map<std::string, std::size_t> slot;
  for (const auto& trial : per_trial) {
    for (const auto& r : trial) {
      auto it = slot.find(r.name);
      if (it == slot.end()) {
        slot[r.name] = merged.size();
        merged.push_back(r);
      } else {
        merged[it->second] = merge(merged[it->second], r);
      }
    }
  }
  return merged;
}

nlohmann::json risk_json(const RiskSummary& s) {
  return {{"n", s.n},       {"mean", s.mean}, {"median", s.median},
          {"q05", s.q05},   {"q95", s.q95},   {"std_error", s.std_error}};
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::vector<double> ok_risks(const PointResult& p) {
  std::vector<double> out;
  for (const auto& r : p.records)
    if (r.ok()) out.push_back(r.risk_total);
  return out;
}

}  // namespace

double nearest_rank_quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, ErrorCode::kInvalidArgument, "quantile level outside [0,1]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

RiskSummary summarize(const std::vector<double>& values) {
  RiskSummary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_error = s.n > 1 ? std::sqrt(ss / (s.n - 1) / s.n) : 0.0;
  s.median = nearest_rank_quantile(values, 0.5);
  s.q05 = nearest_rank_quantile(values, 0.05);
  s.q95 = nearest_rank_quantile(values, 0.95);
  return s;
}

std::uint64_t point_seed(std::uint64_t master_seed, int N) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(N));
}

void aggregate(PointResult& point) {
  std::sort(point.records.begin(), point.records.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial_index < b.trial_index; });
  point.n_failed = 0;
  std::vector<double> risks;
  double bias = 0.0, variance = 0.0;
  for (const auto& r : point.records) {
    if (!r.ok()) {
      ++point.n_failed;
      continue;
    }
    risks.push_back(r.risk_total);
    bias += r.bias;
    variance += r.variance;
  }
  point.risk = summarize(risks);
  point.mean_bias = risks.empty() ? 0.0 : bias / static_cast<double>(risks.size());
  point.mean_variance = risks.empty() ? 0.0 : variance / static_cast<double>(risks.size());
}

PointResult run_point(const ExperimentConfig& cfg, int N) {
  cfg.validate();
  ModelSpec model = cfg.model.at(N);
  FeatureSplit split = cfg.split.resolve(model, cfg.geometry);
  PointResult point{model, split, point_seed(cfg.master_seed, N), {}, {}, 0.0, 0.0, 0, std::nullopt, {}, {}};
  const PointContext ctx = make_context(cfg, point.model, point.split);

  point.records.resize(static_cast<std::size_t>(cfg.n_trials));
  std::vector<std::vector<CheckReport>> checks(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(cfg.n_trials, cfg.threads, [&](int t) {
    const auto slot = static_cast<std::size_t>(t);
    point.records[slot] =
        run_trial(ctx, t, derive_seed(point.point_seed, static_cast<std::uint64_t>(t)), checks[slot]);
  });
  aggregate(point);
  point.checks = merge_by_name(checks);

  try {
    point.rates = rate_report(point.model, cfg.geometry, point.split, cfg.knobs);
  } catch (const Error& e) {
    point.rate_notes.push_back(std::string(to_string(e.code())) + ": " + e.what());
  }

  if (2 * point.n_failed > cfg.n_trials) {
    std::string first;
    for (const auto& r : point.records)
      if (!r.ok()) {
        first = r.status;
        break;
      }
    fail(ErrorCode::kExperimentFailed, std::to_string(point.n_failed) + " of " +
                                           std::to_string(cfg.n_trials) + " trials failed at N=" +
                                           std::to_string(N) + " (first: " + first + ")");
  }
  return point;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out{cfg, {}};
  for (int N : cfg.model.n_sequence) out.points.push_back(run_point(cfg, N));
  return out;
}

SweepResult sweep(const ExperimentConfig& cfg) {
  require(cfg.model.n_sequence.size() >= 2, ErrorCode::kConfigError,
          "sweep needs at least two sample sizes in 'N_sequence'");
  SweepResult s{run_experiment(cfg), {}, false, std::nullopt, ""};
  for (const auto& p : s.experiment.points) {
    SweepRow row;
    row.N = p.model.N;
    row.p = p.model.p();
    row.k_star = k_star(p.model.spectrum, p.model.N, cfg.geometry);
    row.median_risk = p.risk.median;
    row.mean_risk = p.risk.mean;
    if (p.rates) {
      row.r_star = p.rates->r_star.value;
      if (*row.r_star > 0.0) row.ratio = row.median_risk / (*row.r_star * *row.r_star);
      row.lower_bound = p.rates->lower_bound;
    }
    s.rows.push_back(row);
  }
  s.risk_decreasing = true;
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    if (!(s.rows[i].median_risk < s.rows[i - 1].median_risk)) s.risk_decreasing = false;

  if (s.experiment.points.size() >= 3) {
    std::vector<ModelSpec> models;
    for (const auto& p : s.experiment.points) models.push_back(p.model);
    s.bo = bo_classify(models, cfg.geometry);
  } else {
    s.bo_note = "classification needs at least three sample sizes";
  }
  return s;
}

std::pair<double, double> bootstrap_median_ratio_ci(const std::vector<double>& a,
                                                    const std::vector<double>& b, int n_resamples,
                                                    std::uint64_t seed, double level) {
  require(!a.empty() && !b.empty(), ErrorCode::kInvalidArgument, "bootstrap needs non-empty samples");
  require(n_resamples >= 1 && level > 0.0 && level < 1.0, ErrorCode::kInvalidArgument,
          "bootstrap needs n_resamples >= 1 and level in (0,1)");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(n_resamples));
  std::vector<double> ra(a.size()), rb(b.size());
  for (int r = 0; r < n_resamples; ++r) {
    for (auto& v : ra) v = a[pick_a(rng)];
    for (auto& v : rb) v = b[pick_b(rng)];
    ratios.push_back(nearest_rank_quantile(rb, 0.5) / nearest_rank_quantile(ra, 0.5));
  }
  const double tail = (1.0 - level) / 2.0;
  return {nearest_rank_quantile(ratios, tail), nearest_rank_quantile(ratios, 1.0 - tail)};
}

CompareResult compare_tail_heavy(const ExperimentConfig& reference, const ExperimentConfig& heavy,
                                 int n_bootstrap) {
  auto shape = [](const ExperimentConfig& c) {
    nlohmann::json j = config_to_json(c);
    j["model"].erase("design");
    j["model"].erase("noise");
    for (const char* key : {"name", "output_dir", "emit", "checks"}) j.erase(key);
    return j;
  };
  if (shape(reference) != shape(heavy)) {
    fail(ErrorCode::kConfigMismatch,
         "configurations differ in more than the design/noise families");
  }
  CompareResult out{run_experiment(reference), run_experiment(heavy), {}};
  for (std::size_t i = 0; i < out.gaussian.points.size(); ++i) {
    const auto a = ok_risks(out.gaussian.points[i]);
    const auto b = ok_risks(out.heavy.points[i]);
    CompareRow row;
    row.N = out.gaussian.points[i].model.N;
    row.median_gaussian = nearest_rank_quantile(a, 0.5);
    row.median_heavy = nearest_rank_quantile(b, 0.5);
    row.ratio = row.median_heavy / row.median_gaussian;
    std::tie(row.ci_low, row.ci_high) = bootstrap_median_ratio_ci(
        a, b, n_bootstrap, derive_seed(point_seed(reference.master_seed, row.N), kBootstrapStream));
    out.rows.push_back(row);
  }
  return out;
}

std::vector<std::pair<int, std::vector<CheckReport>>> run_checks(const ExperimentConfig& cfg) {
  cfg.validate();
  require(!cfg.checks.empty(), ErrorCode::kConfigError, "config lists no 'checks'");
  std::vector<std::pair<int, std::vector<CheckReport>>> out;
  for (int N : cfg.model.n_sequence) {
    const ModelSpec m = cfg.model.at(N);
    const FeatureSplit split = cfg.split.resolve(m, cfg.geometry);
    const PointContext ctx = make_context(cfg, m, split);
    const std::uint64_t base = point_seed(cfg.master_seed, N);
    std::vector<std::vector<CheckReport>> per(static_cast<std::size_t>(cfg.n_trials));
    parallel_for(cfg.n_trials, cfg.threads, [&](int t) {
      const std::uint64_t seed = derive_seed(base, static_cast<std::uint64_t>(t));
      run_checks_on(ctx, sample_design(m, seed), seed, per[static_cast<std::size_t>(t)]);
    });
    out.emplace_back(N, merge_by_name(per));
  }
  return out;
}

nlohmann::json point_summary_to_json(const PointResult& p) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : p.checks) checks.push_back(check_report_to_json(c));
  nlohmann::json out = {{"N", p.model.N},
                        {"p", p.model.p()},
                        {"k_split", p.split.head_dim()},
                        {"point_seed", p.point_seed},
                        {"n_trials", p.records.size()},
                        {"n_failed", p.n_failed},
                        {"risk_total", risk_json(p.risk)},
                        {"bias_mean", p.mean_bias},
                        {"variance_mean", p.mean_variance},
                        {"rate_notes", p.rate_notes},
                        {"checks", checks}};
  if (p.split.head_dim() <= 64) out["split_head"] = p.split.head();
  out["rates"] = p.rates ? rate_report_to_json(*p.rates) : nlohmann::json(nullptr);
  for (const auto& r : p.records)
    if (!r.ok()) {
      out["first_failure"] = r.status;
      break;
    }
  return out;
}

nlohmann::json experiment_summary_to_json(const ExperimentResult& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points) points.push_back(point_summary_to_json(p));
  return {{"code_version", kCodeVersion},
          {"csv_schema_version", kCsvSchemaVersion},
          {"config", config_to_json(r.config)},
          {"points", points}};
}

nlohmann::json sweep_to_json(const SweepResult& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"N", r.N},
                    {"p", r.p},
                    {"k_star", optional_json(r.k_star)},
                    {"median_risk", r.median_risk},
                    {"mean_risk", r.mean_risk},
                    {"r_star", optional_json(r.r_star)},
                    {"ratio", optional_json(r.ratio)},
                    {"lower_bound", optional_json(r.lower_bound)}});
  }
  nlohmann::json out = experiment_summary_to_json(s.experiment);
  out["sweep"] = {{"rows", rows}, {"risk_decreasing", s.risk_decreasing}};
  out["sweep"]["bo"] = s.bo ? bo_verdict_to_json(*s.bo) : nlohmann::json(nullptr);
  if (!s.bo_note.empty()) out["sweep"]["bo_note"] = s.bo_note;
  return out;
}

nlohmann::json compare_to_json(const CompareResult& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"N", r.N},
                    {"median_reference", r.median_gaussian},
                    {"median_heavy", r.median_heavy},
                    {"ratio", r.ratio},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high}});
  }
  return {{"code_version", kCodeVersion},
          {"reference", experiment_summary_to_json(c.gaussian)},
          {"heavy", experiment_summary_to_json(c.heavy)},
          {"rows", rows}};
}

}  // namespace benign
