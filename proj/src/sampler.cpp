#include "benign/sampler.hpp"

#include <cmath>
#include <string>

#include "benign/errors.hpp"
#include "benign/spectrum_io.hpp"

namespace benign {

namespace {

constexpr std::uint64_t kDesignStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

}  // namespace

void Distribution::validate() const {
  switch (kind) {
    case Kind::kGaussian:
      return;
    case Kind::kStudentT:
      require(dof > 4.0, ErrorCode::kBadMoment,
              "Student-t needs more than 4 finite moments (dof=" + std::to_string(dof) + ")");
      return;
    case Kind::kSymmetrizedWeibull:
      require(shape > 0.0, ErrorCode::kInvalidArgument, "Weibull shape must be positive");
      return;
  }
}

StandardizedSampler::StandardizedSampler(const Distribution& d) : dist_(d) {
  d.validate();
  if (d.kind == Distribution::Kind::kStudentT) {
    student_ = std::student_t_distribution<double>(d.dof);
    scale_ = 1.0 / std::sqrt(d.dof / (d.dof - 2.0));
  } else if (d.kind == Distribution::Kind::kSymmetrizedWeibull) {
    weibull_ = std::weibull_distribution<double>(d.shape, 1.0);
    scale_ = 1.0 / std::sqrt(std::tgamma(1.0 + 2.0 / d.shape));
  }
}

double StandardizedSampler::operator()(Rng& rng) {
  switch (dist_.kind) {
    case Distribution::Kind::kGaussian:
      return normal_(rng);
    case Distribution::Kind::kStudentT:
      return scale_ * student_(rng);
    case Distribution::Kind::kSymmetrizedWeibull: {
      const double magnitude = weibull_(rng);
      return coin_(rng) ? scale_ * magnitude : -scale_ * magnitude;
    }
  }
  return 0.0;
}

void HeavyTailSpec::validate() const {
  require(L >= 1.0, ErrorCode::kInvalidArgument, "L must be >= 1");
  require(alpha > 0.0 && alpha <= 2.0, ErrorCode::kInvalidArgument, "alpha must lie in (0, 2]");
  require(R > 0.0, ErrorCode::kInvalidArgument, "R must be positive");
  require(kappa_noise >= 1.0, ErrorCode::kInvalidArgument, "kappa must be >= 1");
  require(r_moment > 4.0, ErrorCode::kBadMoment, "noise needs r > 4 moments");
}

void ModelSpec::validate() const {
  require(beta_star.size() == spectrum.dim(), ErrorCode::kInvalidArgument,
          "beta* has length " + std::to_string(beta_star.size()) + " but p=" +
              std::to_string(spectrum.dim()));
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  require(sigma_xi >= 0.0 && std::isfinite(sigma_xi), ErrorCode::kInvalidArgument,
          "sigma_xi must be a non-negative finite number");
  design.validate();
  noise.validate();
}

Eigen::VectorXd ModelSpec::beta_ambient() const {
  if (spectrum.has_basis()) return *spectrum.basis() * beta_star;
  return beta_star;
}

Eigen::MatrixXd sample_diagonal_design(const Eigen::VectorXd& values, int N, const Distribution& d,
                                       std::uint64_t seed) {
  require(N >= 0, ErrorCode::kInvalidArgument, "N must be non-negative");
  Rng rng(seed);
  StandardizedSampler draw(d);
  const Eigen::VectorXd root = values.cwiseSqrt();
  const Eigen::Index p = values.size();
  Eigen::MatrixXd x(N, p);
  for (int i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = root[j] * draw(rng);
  return x;
}

Eigen::MatrixXd sample_design(const ModelSpec& m, std::uint64_t seed) {
  m.validate();
  Eigen::MatrixXd x =
      sample_diagonal_design(m.spectrum.values(), m.N, m.design, derive_seed(seed, kDesignStream));
  if (m.spectrum.has_basis()) x = x * m.spectrum.basis()->transpose();
  return x;
}

Eigen::VectorXd sample_noise(const ModelSpec& m, std::uint64_t seed) {
  m.validate();
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(m.N);
  if (m.sigma_xi == 0.0) return xi;
  Rng rng(derive_seed(seed, kNoiseStream));
  StandardizedSampler draw(m.noise);
  for (int i = 0; i < m.N; ++i) xi[i] = m.sigma_xi * draw(rng);
  return xi;
}

DataSample make_sample(const ModelSpec& m, std::uint64_t seed) {
  DataSample s;
  s.seed = seed;
  s.X = sample_design(m, seed);
  s.xi = sample_noise(m, seed);
  s.y = s.X * m.beta_ambient() + s.xi;
  return s;
}

nlohmann::json distribution_to_json(const Distribution& d) {
  switch (d.kind) {
    case Distribution::Kind::kGaussian:
      return {{"family", "gaussian"}};
    case Distribution::Kind::kStudentT:
      return {{"family", "student_t"}, {"dof", d.dof}};
    case Distribution::Kind::kSymmetrizedWeibull:
      return {{"family", "symmetrized_weibull"}, {"shape", d.shape}};
  }
  return {};
}

Distribution distribution_from_json(const nlohmann::json& j) {
  std::string family;
  if (j.is_string()) {
    family = j.get<std::string>();
  } else {
    require(j.is_object() && j.contains("family"), ErrorCode::kConfigError,
            "distribution needs a 'family'");
    family = j.at("family").get<std::string>();
  }
  Distribution d;
  if (family == "gaussian") {
    d = Distribution::gaussian();
  } else if (family == "student_t") {
    require(j.is_object() && j.contains("dof"), ErrorCode::kConfigError, "student_t needs 'dof'");
    d = Distribution::student_t(j.at("dof").get<double>());
  } else if (family == "symmetrized_weibull") {
    require(j.is_object() && j.contains("shape"), ErrorCode::kConfigError,
            "symmetrized_weibull needs 'shape'");
    d = Distribution::symmetrized_weibull(j.at("shape").get<double>());
  } else {
    fail(ErrorCode::kConfigError, "unknown distribution family '" + family + "'");
  }
  d.validate();
  return d;
}

nlohmann::json model_to_json(const ModelSpec& m) {
  nlohmann::json beta = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.beta_star.size(); ++j) beta.push_back(m.beta_star[j]);
  return {{"spectrum", spectrum_to_json(m.spectrum)},
          {"beta_star", beta},
          {"sigma_xi", m.sigma_xi},
          {"N", m.N},
          {"design", distribution_to_json(m.design)},
          {"noise", distribution_to_json(m.noise)}};
}

ModelSpec model_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::kConfigError, "model must be an object");
  require(j.contains("spectrum") && j.contains("N"), ErrorCode::kConfigError,
          "model needs 'spectrum' and 'N'");
  Spectrum spectrum = spectrum_from_json(j.at("spectrum"));
  const int p = spectrum.dim();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (j.contains("beta_star")) {
    const auto& b = j.at("beta_star");
    require(b.is_array() && static_cast<int>(b.size()) <= p, ErrorCode::kConfigError,
            "beta_star must be an array of at most p numbers");
    for (std::size_t i = 0; i < b.size(); ++i) beta[static_cast<Eigen::Index>(i)] = b[i].get<double>();
  }
  ModelSpec m{std::move(spectrum), std::move(beta), j.value("sigma_xi", 1.0), j.at("N").get<int>(),
              j.contains("design") ? distribution_from_json(j.at("design")) : Distribution::gaussian(),
              j.contains("noise") ? distribution_from_json(j.at("noise")) : Distribution::gaussian()};
  m.validate();
  return m;
}

}  // namespace benign
