// benign: command-line front end for the experiment harness.
//
//   benign rate <config>            closed-form rates per sample size
//   benign simulate <config>        Monte Carlo risk of the min-norm interpolant
//   benign sweep <config>           simulate over N_sequence + trend verdicts
//   benign classify <config>        benign-overfitting classification along N_sequence
//   benign check <config>           geometry checks on sampled designs
//   benign compare <cfgA> <cfgB>    heavy-tailed vs reference median-risk ratios
//
// Exit status: 0 success, 2 configuration error, 3 experiment failed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "benign/bounds.hpp"
#include "benign/config.hpp"
#include "benign/errors.hpp"
#include "benign/harness.hpp"
#include "benign/report_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailed = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::vector<std::string> emit;
  std::optional<int> threads;
};

benign::ExperimentConfig load(const std::string& path, const Overrides& o) {
  benign::ExperimentConfig cfg = benign::load_config(path);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.trials) cfg.n_trials = *o.trials;
  if (o.out) {
    cfg.output_dir = *o.out;
    cfg.emit_requested = true;
  }
  if (!o.emit.empty()) {
    cfg.emit = benign::parse_emit(o.emit);
    cfg.emit_requested = true;
  }
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void report_written(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p << '\n';
}

int cmd_rate(const benign::ExperimentConfig& cfg) {
  nlohmann::json all = nlohmann::json::array();
  for (int N : cfg.model.n_sequence) {
    const benign::ModelSpec m = cfg.model.at(N);
    std::optional<benign::FeatureSplit> split;
    if (cfg.split.kind != benign::SplitPolicy::Kind::kKStar) split = cfg.split.resolve(m, cfg.geometry);
    const benign::RateReport r = benign::rate_report(m, cfg.geometry, split, cfg.knobs);
    benign::print_rate_table(std::cout, r, N, m.p());
    nlohmann::json j = benign::rate_report_to_json(r);
    j["N"] = N;
    j["p"] = m.p();
    all.push_back(j);
  }
  if (cfg.emit_requested && cfg.emit.json) report_written({benign::write_file(cfg.output_dir, "rate.json", all.dump(2) + "\n")});
  return 0;
}

int cmd_simulate(const benign::ExperimentConfig& cfg) {
  const benign::ExperimentResult r = benign::run_experiment(cfg);
  for (const auto& p : r.points) benign::print_point_summary(std::cout, p);
  report_written(benign::emit_experiment(r, cfg.output_dir, cfg.emit));
  return 0;
}

int cmd_sweep(const benign::ExperimentConfig& cfg) {
  const benign::SweepResult s = benign::sweep(cfg);
  benign::print_sweep_table(std::cout, s);
  report_written(benign::emit_sweep(s, cfg.output_dir, cfg.emit));
  return 0;
}

int cmd_classify(const benign::ExperimentConfig& cfg) {
  std::vector<benign::ModelSpec> models;
  for (int N : cfg.model.n_sequence) models.push_back(cfg.model.at(N));
  const benign::BoVerdict v = benign::bo_classify(models, cfg.geometry);
  std::cout << "N        k*      k*/N          NTrS2/Tr2     tail_bias     head_bias     side\n";
  for (const auto& b : v.instances) {
    char line[256];
    if (b.k_star) {
      std::snprintf(line, sizeof line, "%-8d %-7d %-13.6g %-13.6g %-13.6g %-13.6g %s\n", b.N,
                    *b.k_star, b.quantities[0], b.quantities[1], b.quantities[2], b.quantities[3],
                    b.side_condition ? "yes" : "no");
    } else {
      std::snprintf(line, sizeof line, "%-8d %-7s (no k*_b)\n", b.N, "-");
    }
    std::cout << line;
  }
  std::cout << "verdict: " << (v.benign ? "benign" : "not benign") << " (" << v.reason << ")\n";
  if (cfg.emit_requested && cfg.emit.json)
    report_written({benign::write_file(cfg.output_dir, "classify.json",
                                       benign::bo_verdict_to_json(v).dump(2) + "\n")});
  return 0;
}

int cmd_check(const benign::ExperimentConfig& cfg) {
  const auto results = benign::run_checks(cfg);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& [N, reports] : results) {
    std::cout << "N=" << N << '\n';
    benign::print_checks_table(std::cout, reports);
    nlohmann::json j = {{"N", N}, {"checks", nlohmann::json::array()}};
    for (const auto& r : reports) j["checks"].push_back(benign::check_report_to_json(r));
    all.push_back(j);
  }
  if (cfg.emit_requested && cfg.emit.json) report_written({benign::write_file(cfg.output_dir, "checks.json", all.dump(2) + "\n")});
  return 0;
}

int cmd_compare(const benign::ExperimentConfig& a, const benign::ExperimentConfig& b) {
  const benign::CompareResult c = benign::compare_tail_heavy(a, b);
  benign::print_compare_table(std::cout, c);
  report_written(benign::emit_compare(c, b.output_dir, b.emit));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm interpolation and benign overfitting laboratory", "benign"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--seed", o.seed, "Master seed (overrides the config)");
  app.add_option("--trials", o.trials, "Trials per sample size")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--emit", o.emit, "Outputs to write: csv, json, plotdata")->delimiter(',');
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string config_a, config_b;
  auto* rate = app.add_subcommand("rate", "Print r*, the square term and the baseline rates");
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment");
  auto* sweep = app.add_subcommand("sweep", "Run over N_sequence and report trends");
  auto* classify = app.add_subcommand("classify", "Classify overfitting along N_sequence");
  auto* check = app.add_subcommand("check", "Run the configured geometry checks");
  auto* compare = app.add_subcommand("compare", "Heavy-tailed vs reference median risks");
  for (auto* sub : {rate, simulate, sweep, classify, check})
    sub->add_option("config", config_a, "JSON configuration")->required();
  compare->add_option("reference", config_a, "Reference (usually Gaussian) configuration")->required();
  compare->add_option("heavy", config_b, "Heavy-tailed configuration")->required();
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (compare->parsed()) return cmd_compare(load(config_a, o), load(config_b, o));
    const benign::ExperimentConfig cfg = load(config_a, o);
    if (rate->parsed()) return cmd_rate(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (classify->parsed()) return cmd_classify(cfg);
    if (check->parsed()) return cmd_check(cfg);
  } catch (const benign::Error& e) {
    std::cerr << "error [" << benign::to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == benign::ErrorCode::kExperimentFailed ? kExitFailed : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
