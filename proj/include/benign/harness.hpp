#pragma once

// Monte Carlo experiments: per-trial sample -> interpolate -> decompose -> risks
// and geometry checks, run on a pool of worker threads with pre-derived seeds.
// Output is ordered by trial index, so results do not depend on the number of
// workers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/bounds.hpp"
#include "benign/config.hpp"
#include "benign/geometry_checks.hpp"

namespace benign {

inline constexpr int kCsvSchemaVersion = 1;
extern const char* const kCodeVersion;

struct TrialRecord {
  int trial_index = 0;
  std::uint64_t seed = 0;
  int N = 0;
  int p = 0;
  int k_split = 0;
  double risk_total = 0.0;
  double risk_head = 0.0;
  double risk_tail = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double interp_residual = 0.0;
  std::string check_flags;
  std::string status = "ok";  // "ok" or "failed:<code>: <message>"
  double wall_time_ms = 0.0;

  bool ok() const { return status == "ok"; }
};

struct RiskSummary {
  int n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double std_error = 0.0;
};

/// Nearest-rank quantile of unsorted values, q in [0, 1].
double nearest_rank_quantile(std::vector<double> values, double q);
RiskSummary summarize(const std::vector<double>& values);

struct PointResult {
  ModelSpec model;
  FeatureSplit split;
  std::uint64_t point_seed = 0;
  std::vector<TrialRecord> records;
  RiskSummary risk;
  double mean_bias = 0.0;
  double mean_variance = 0.0;
  int n_failed = 0;
  std::optional<RateReport> rates;
  std::vector<std::string> rate_notes;
  std::vector<CheckReport> checks;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<PointResult> points;  // one per sample size
};

/// Seed of the experiment at sample size N; trial t uses derive_seed(point_seed, t).
std::uint64_t point_seed(std::uint64_t master_seed, int N);

/// Runs one sample size. Throws ExperimentFailed when more than half the trials fail.
PointResult run_point(const ExperimentConfig& cfg, int N);

/// Every sample size of the configuration, in order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Merges records (any order) into the per-point summary fields.
void aggregate(PointResult& point);

struct SweepRow {
  int N = 0;
  int p = 0;
  std::optional<int> k_star;
  double median_risk = 0.0;
  double mean_risk = 0.0;
  std::optional<double> r_star;
  std::optional<double> ratio;  // median / r*^2
  std::optional<double> lower_bound;
};

struct SweepResult {
  ExperimentResult experiment;
  std::vector<SweepRow> rows;
  bool risk_decreasing = false;
  std::optional<BoVerdict> bo;
  std::string bo_note;
};

/// Needs at least two sample sizes (ConfigError otherwise).
SweepResult sweep(const ExperimentConfig& cfg);

struct CompareRow {
  int N = 0;
  double median_gaussian = 0.0;
  double median_heavy = 0.0;
  double ratio = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct CompareResult {
  ExperimentResult gaussian;
  ExperimentResult heavy;
  std::vector<CompareRow> rows;
};

/// Median-risk ratio heavy / reference per sample size with a percentile
/// bootstrap interval. The two configurations must agree on everything except
/// the design and noise families (ConfigMismatch otherwise).
CompareResult compare_tail_heavy(const ExperimentConfig& reference, const ExperimentConfig& heavy,
                                 int n_bootstrap = 1000);

/// Percentile bootstrap CI of median(b) / median(a).
std::pair<double, double> bootstrap_median_ratio_ci(const std::vector<double>& a,
                                                    const std::vector<double>& b, int n_resamples,
                                                    std::uint64_t seed, double level = 0.95);

/// Geometry checks only (no interpolation), n_trials design draws per sample size.
std::vector<std::pair<int, std::vector<CheckReport>>> run_checks(const ExperimentConfig& cfg);

nlohmann::json point_summary_to_json(const PointResult& p);
nlohmann::json experiment_summary_to_json(const ExperimentResult& r);
nlohmann::json sweep_to_json(const SweepResult& s);
nlohmann::json compare_to_json(const CompareResult& c);

}  // namespace benign
