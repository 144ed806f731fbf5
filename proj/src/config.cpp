#include "benign/config.hpp"

#include <algorithm>
#include <fstream>

#include "benign/errors.hpp"
#include "benign/spectrum_io.hpp"

namespace benign {

const char* const kKnownChecks[7] = {"dm_embedding",       "dm_upper",    "isomorphy",
                                     "restricted_cone",    "norm_concentration",
                                     "trace_bound",        "noise_operator"};

namespace {

using nlohmann::json;

void config_require(bool cond, const std::string& what) {
  require(cond, ErrorCode::kConfigError, what);
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kConfigError, std::string("field '") + key + "' has the wrong type");
  }
}

bool known_check(const std::string& name) {
  return std::any_of(std::begin(kKnownChecks), std::end(kKnownChecks),
                     [&](const char* k) { return name == k; });
}

ModelTemplate model_template_from_json(const json& j) {
  config_require(j.is_object(), "'model' must be an object");
  config_require(j.contains("spectrum"), "'model' needs a 'spectrum'");
  ModelTemplate t;
  t.spectrum = j.at("spectrum");
  if (j.contains("N_sequence")) {
    t.n_sequence = field<std::vector<int>>(j, "N_sequence", {});
  } else {
    config_require(j.contains("N"), "'model' needs 'N' or 'N_sequence'");
    t.n_sequence = {field<int>(j, "N", 0)};
  }
  config_require(!t.n_sequence.empty(), "'N_sequence' is empty");
  for (std::size_t i = 0; i < t.n_sequence.size(); ++i) {
    config_require(t.n_sequence[i] >= 1, "sample sizes must be >= 1");
    if (i > 0) config_require(t.n_sequence[i] > t.n_sequence[i - 1], "'N_sequence' must be strictly increasing");
  }
  t.beta_star = field<std::vector<double>>(j, "beta_star", {});
  t.sigma_xi = field<double>(j, "sigma_xi", 1.0);
  t.design = j.contains("design") ? distribution_from_json(j.at("design")) : Distribution::gaussian();
  t.noise = j.contains("noise") ? distribution_from_json(j.at("noise")) : Distribution::gaussian();
  if (j.contains("rotation_seed")) t.rotation_seed = field<std::uint64_t>(j, "rotation_seed", 0);
  return t;
}

json model_template_to_json(const ModelTemplate& t) {
  json out = {{"spectrum", t.spectrum},
              {"N_sequence", t.n_sequence},
              {"beta_star", t.beta_star},
              {"sigma_xi", t.sigma_xi},
              {"design", distribution_to_json(t.design)},
              {"noise", distribution_to_json(t.noise)}};
  if (t.rotation_seed) out["rotation_seed"] = *t.rotation_seed;
  return out;
}

SplitPolicy split_from_json(const json& j) {
  SplitPolicy s;
  if (j.is_string()) {
    config_require(j.get<std::string>() == "k_star", "split must be \"k_star\", {\"k\":..} or {\"indices\":[..]}");
    return s;
  }
  config_require(j.is_object(), "split must be \"k_star\", {\"k\":..} or {\"indices\":[..]}");
  if (j.contains("k")) {
    s.kind = SplitPolicy::Kind::kFixedK;
    s.k = field<int>(j, "k", 0);
    config_require(s.k >= 0, "split k must be >= 0");
  } else if (j.contains("indices")) {
    s.kind = SplitPolicy::Kind::kIndices;
    s.indices = field<std::vector<int>>(j, "indices", {});
  } else {
    fail(ErrorCode::kConfigError, "split object needs 'k' or 'indices'");
  }
  return s;
}

json split_to_json(const SplitPolicy& s) {
  switch (s.kind) {
    case SplitPolicy::Kind::kKStar: return "k_star";
    case SplitPolicy::Kind::kFixedK: return {{"k", s.k}};
    case SplitPolicy::Kind::kIndices: return {{"indices", s.indices}};
  }
  return nullptr;
}

}  // namespace

ModelSpec ModelTemplate::at(int N) const {
  Spectrum spectrum = [&] {
    if (this->spectrum.is_object()) return SpectrumFamily(this->spectrum).make(N);
    return spectrum_from_json(this->spectrum);
  }();
  if (rotation_seed) spectrum = spectrum.with_random_rotation(*rotation_seed);
  const int p = spectrum.dim();
  config_require(static_cast<int>(beta_star.size()) <= p,
                 "beta_star is longer than p=" + std::to_string(p));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < beta_star.size(); ++i) beta[static_cast<Eigen::Index>(i)] = beta_star[i];
  ModelSpec m{std::move(spectrum), std::move(beta), sigma_xi, N, design, noise};
  m.validate();
  return m;
}

FeatureSplit SplitPolicy::resolve(const ModelSpec& m, const GeometryConstants& g) const {
  switch (kind) {
    case Kind::kKStar: {
      const auto k = k_star(m.spectrum, m.N, g);
      if (!k) fail(ErrorCode::kNoBenignSplit, "k*_b does not exist at N=" + std::to_string(m.N));
      return FeatureSplit::contiguous(*k, m.p());
    }
    case Kind::kFixedK:
      return FeatureSplit::contiguous(k, m.p());
    case Kind::kIndices:
      return FeatureSplit::from_indices(indices, m.p());
  }
  return FeatureSplit::contiguous(0, m.p());
}

double CheckSpec::number(const char* key, double fallback) const {
  return field<double>(params, key, fallback);
}

void ExperimentConfig::validate() const {
  config_require(n_trials >= 1, "n_trials must be >= 1");
  config_require(threads >= 1, "threads must be >= 1");
  config_require(interp_tol >= 0.0, "interp_tol must be >= 0");
  config_require(!model.n_sequence.empty(), "model has no sample size");
  for (const auto& c : checks) config_require(known_check(c.name), "unknown check '" + c.name + "'");
  try {
    geometry.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }
}

GeometryConstants geometry_from_json(const json& j) {
  GeometryConstants g;
  if (j.is_null()) return g;
  config_require(j.is_object(), "'geometry' must be an object");
  g.kappa_dm = field<double>(j, "kappa_dm", g.kappa_dm);
  g.kappa_iso = field<double>(j, "kappa_iso", g.kappa_iso);
  g.c0 = field<double>(j, "c0", g.c0);
  g.b = field<double>(j, "b", 4.0 / g.kappa_dm);
  if (j.contains("lstar")) {
    const json& l = j.at("lstar");
    if (l.is_string()) {
      config_require(l.get<std::string>() == "trace", "lstar must be \"trace\" or {\"monte_carlo\": n}");
    } else {
      config_require(l.is_object() && l.contains("monte_carlo"),
                     "lstar must be \"trace\" or {\"monte_carlo\": n}");
      g.lstar = MeanWidthMethod::monte_carlo(field<int>(l, "monte_carlo", 1000),
                                             field<std::uint64_t>(l, "seed", 0x5eedULL));
    }
  }
  return g;
}

json geometry_to_json(const GeometryConstants& g) {
  json out = {{"kappa_dm", g.kappa_dm}, {"kappa_iso", g.kappa_iso}, {"c0", g.c0}, {"b", g.b}};
  if (g.lstar.kind == MeanWidthMethod::Kind::kTraceSurrogate) {
    out["lstar"] = "trace";
  } else {
    out["lstar"] = {{"monte_carlo", g.lstar.n_draws}, {"seed", g.lstar.seed}};
  }
  return out;
}

EmitFlags parse_emit(const std::vector<std::string>& names) {
  EmitFlags e{false, false, false};
  for (const auto& n : names) {
    if (n == "csv") e.csv = true;
    else if (n == "json") e.json = true;
    else if (n == "plotdata") e.plotdata = true;
    else fail(ErrorCode::kConfigError, "unknown emit target '" + n + "' (csv, json, plotdata)");
  }
  return e;
}

ExperimentConfig config_from_json(const json& j) {
  config_require(j.is_object(), "config must be a JSON object");
  config_require(j.contains("model"), "config needs a 'model'");
  ExperimentConfig c;
  c.source = j;
  c.name = field<std::string>(j, "name", c.name);
  c.model = model_template_from_json(j.at("model"));
  c.geometry = geometry_from_json(j.contains("geometry") ? j.at("geometry") : json());
  c.n_trials = field<int>(j, "n_trials", c.n_trials);
  c.master_seed = field<std::uint64_t>(j, "master_seed", c.master_seed);
  c.threads = field<int>(j, "threads", c.threads);
  if (j.contains("split")) c.split = split_from_json(j.at("split"));
  if (j.contains("checks")) {
    config_require(j.at("checks").is_array(), "'checks' must be an array");
    for (const auto& item : j.at("checks")) {
      CheckSpec spec;
      if (item.is_string()) {
        spec.name = item.get<std::string>();
      } else {
        config_require(item.is_object() && item.contains("name"), "a check needs a 'name'");
        spec.name = field<std::string>(item, "name", "");
        spec.params = item;
      }
      c.checks.push_back(std::move(spec));
    }
  }
  c.bias_variance = field<bool>(j, "bias_variance", c.bias_variance);
  c.verify_decomposition = field<bool>(j, "verify_decomposition", c.verify_decomposition);
  c.interp_tol = field<double>(j, "interp_tol", c.interp_tol);
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    c.knobs.overfit_constant = field<double>(r, "overfit_constant", c.knobs.overfit_constant);
    c.knobs.c_lb = field<double>(r, "c_lb", c.knobs.c_lb);
    c.knobs.lower_bound_scale = field<double>(r, "lower_bound_scale", c.knobs.lower_bound_scale);
  }
  c.output_dir = field<std::string>(j, "output_dir", c.output_dir);
  if (j.contains("emit")) {
    c.emit = parse_emit(field<std::vector<std::string>>(j, "emit", {}));
    c.emit_requested = true;
  }
  c.validate();
  c.model.at(c.model.n_sequence.front());  // surfaces spectrum/beta errors early
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kConfigError, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  json checks = json::array();
  for (const auto& s : c.checks) {
    json item = s.params.is_object() ? s.params : json::object();
    item["name"] = s.name;
    checks.push_back(item);
  }
  std::vector<std::string> emit;
  if (c.emit.csv) emit.push_back("csv");
  if (c.emit.json) emit.push_back("json");
  if (c.emit.plotdata) emit.push_back("plotdata");
  return {{"name", c.name},
          {"model", model_template_to_json(c.model)},
          {"geometry", geometry_to_json(c.geometry)},
          {"n_trials", c.n_trials},
          {"master_seed", c.master_seed},
          {"split", split_to_json(c.split)},
          {"checks", checks},
          {"bias_variance", c.bias_variance},
          {"verify_decomposition", c.verify_decomposition},
          {"interp_tol", c.interp_tol},
          {"rates",
           {{"overfit_constant", c.knobs.overfit_constant},
            {"c_lb", c.knobs.c_lb},
            {"lower_bound_scale", c.knobs.lower_bound_scale}}},
          {"output_dir", c.output_dir},
          {"emit", emit}};
}

}  // namespace benign
