#pragma once

// JSON experiment configuration.
//
// {
//   "name": "spike",
//   "model": {"spectrum": <array | family object>, "N": 50 | "N_sequence": [50, 100],
//             "beta_star": [...], "sigma_xi": 1.0, "design": "gaussian", "noise": "gaussian",
//             "rotation_seed": 7},
//   "geometry": {"kappa_dm": 1, "kappa_iso": 0.25, "c0": 0.25, "b": 4,
//                "lstar": "trace" | {"monte_carlo": 1000, "seed": 1}},
//   "n_trials": 200, "master_seed": 1, "threads": 1,
//   "split": "k_star" | {"k": 3} | {"indices": [1, 4]},
//   "checks": ["dm_embedding", {"name": "trace_bound", "c": 20}],
//   "bias_variance": false, "verify_decomposition": false, "interp_tol": 1e-8,
//   "rates": {"overfit_constant": 1, "c_lb": 1, "lower_bound_scale": 24},
//   "output_dir": "out", "emit": ["csv", "json"]
// }

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/bounds.hpp"
#include "benign/sampler.hpp"
#include "benign/spectrum.hpp"

namespace benign {

struct ModelTemplate {
  nlohmann::json spectrum;
  std::vector<int> n_sequence;
  std::vector<double> beta_star;  // eigenbasis coordinates, zero padded to p
  double sigma_xi = 1.0;
  Distribution design;
  Distribution noise;
  std::optional<std::uint64_t> rotation_seed;

  /// Instantiates the model at sample size N.
  ModelSpec at(int N) const;
};

struct SplitPolicy {
  enum class Kind { kKStar, kFixedK, kIndices };
  Kind kind = Kind::kKStar;
  int k = 0;
  std::vector<int> indices;

  /// Throws NoBenignSplit when the policy is k*_b and k*_b does not exist.
  FeatureSplit resolve(const ModelSpec& m, const GeometryConstants& g) const;
};

struct CheckSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  double number(const char* key, double fallback) const;
};

struct EmitFlags {
  bool csv = true;
  bool json = true;
  bool plotdata = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelTemplate model;
  GeometryConstants geometry;
  int n_trials = 100;
  std::uint64_t master_seed = 0;
  SplitPolicy split;
  std::vector<CheckSpec> checks;
  std::string output_dir = ".";
  EmitFlags emit;
  bool emit_requested = false;  // "emit" in the file or set on the command line
  int threads = 1;
  bool bias_variance = false;
  bool verify_decomposition = false;
  double interp_tol = 1e-8;
  RateKnobs knobs;
  nlohmann::json source;  // the parsed document, echoed into summaries

  void validate() const;
};

GeometryConstants geometry_from_json(const nlohmann::json& j);
nlohmann::json geometry_to_json(const GeometryConstants& g);

/// Throws ConfigError on any malformed or missing field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// The configuration as it will actually run (CLI overrides applied).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

EmitFlags parse_emit(const std::vector<std::string>& names);

extern const char* const kKnownChecks[7];

}  // namespace benign
