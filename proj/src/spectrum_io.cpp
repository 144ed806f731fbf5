#include "benign/spectrum_io.hpp"

#include <cmath>
#include <vector>

#include "benign/errors.hpp"

namespace benign {

namespace {

double number(const nlohmann::json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_number(), ErrorCode::kConfigError,
          std::string("spectrum family needs numeric field '") + key + "'");
  return j.at(key).get<double>();
}

double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j, key);
}

int integer(const nlohmann::json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_number_integer(), ErrorCode::kConfigError,
          std::string("spectrum family needs integer field '") + key + "'");
  return j.at(key).get<int>();
}

}  // namespace

nlohmann::json spectrum_to_json(const Spectrum& s) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index j = 0; j < s.values().size(); ++j) out.push_back(s.values()[j]);
  return out;
}

Spectrum spectrum_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    std::vector<double> values;
    for (const auto& v : j) {
      require(v.is_number(), ErrorCode::kConfigError, "spectrum array must hold numbers");
      values.push_back(v.get<double>());
    }
    return Spectrum(values);
  }
  require(j.is_object(), ErrorCode::kConfigError, "spectrum must be an array or a family object");
  const SpectrumFamily family(j);
  require(j.contains("p") || family.name() == "explicit", ErrorCode::kConfigError,
          "a standalone spectrum family needs a fixed 'p'");
  return family.make(0);
}

Spectrum three_block_spectrum(const ThreeBlockParams& q) {
  require(q.k0 >= 1 && q.k0 < q.k && q.k < q.p, ErrorCode::kInvalidArgument,
          "three-block spectrum needs 1 <= k0 < k < p");
  require(q.a > 0.0 && q.b > 0.0 && q.c > 0.0 && q.alpha > 0.0, ErrorCode::kInvalidArgument,
          "three-block levels and alpha must be positive");
  const double middle_first = q.b / std::pow(q.k0 + 1, q.alpha);
  const double middle_last = q.b / std::pow(q.k, q.alpha);
  if (q.a < middle_first || middle_last < q.c) {
    fail(ErrorCode::kSpectrumNotSorted,
         "three-block spectrum requires a >= b/(k0+1)^alpha and b/k^alpha >= c");
  }
  Eigen::VectorXd sigmas(q.p);
  for (int j = 1; j <= q.p; ++j) {
    if (j <= q.k0)
      sigmas[j - 1] = q.a;
    else if (j <= q.k)
      sigmas[j - 1] = q.b / std::pow(j, q.alpha);
    else
      sigmas[j - 1] = q.c;
  }
  return Spectrum(std::move(sigmas));
}

SpectrumFamily::SpectrumFamily(nlohmann::json params) : params_(std::move(params)) {
  require(params_.is_object() && params_.contains("family") && params_.at("family").is_string(),
          ErrorCode::kConfigError, "spectrum family object needs a 'family' name");
  name_ = params_.at("family").get<std::string>();
  static const char* known[] = {"explicit", "isotropic", "geometric", "polynomial",
                                "spike_plus_flat", "three_block"};
  bool ok = false;
  for (const char* k : known) ok = ok || name_ == k;
  require(ok, ErrorCode::kConfigError, "unknown spectrum family '" + name_ + "'");
  if (name_ == "explicit") {
    require(params_.contains("values") && params_.at("values").is_array(), ErrorCode::kConfigError,
            "explicit spectrum needs 'values'");
  } else {
    require(params_.contains("p") || params_.contains("p_mult") || params_.contains("p_power"),
            ErrorCode::kConfigError, "spectrum family needs one of 'p', 'p_mult', 'p_power'");
  }
}

int SpectrumFamily::dim_for(int N) const {
  if (name_ == "explicit") return static_cast<int>(params_.at("values").size());
  if (params_.contains("p")) return integer(params_, "p");
  require(N >= 1, ErrorCode::kConfigError, "dimension rule needs a sample size");
  if (params_.contains("p_mult")) return static_cast<int>(std::llround(number(params_, "p_mult") * N));
  return static_cast<int>(std::llround(std::pow(static_cast<double>(N), number(params_, "p_power"))));
}

Spectrum SpectrumFamily::make(int N) const {
  if (name_ == "explicit") return spectrum_from_json(params_.at("values"));

  const int p = dim_for(N);
  require(p >= 1, ErrorCode::kConfigError, "spectrum dimension must be positive");
  Eigen::VectorXd sigmas(p);
  if (name_ == "isotropic") {
    sigmas.setConstant(number_or(params_, "level", 1.0));
  } else if (name_ == "geometric") {
    const double scale = number_or(params_, "scale", 1.0);
    const double ratio = number(params_, "ratio");
    require(ratio > 0.0 && ratio <= 1.0, ErrorCode::kConfigError, "geometric ratio must be in (0,1]");
    for (int j = 1; j <= p; ++j) sigmas[j - 1] = scale * std::pow(ratio, j);
  } else if (name_ == "polynomial") {
    const double scale = number_or(params_, "scale", 1.0);
    const double alpha = number(params_, "alpha");
    for (int j = 1; j <= p; ++j) sigmas[j - 1] = scale * std::pow(j, -alpha);
  } else if (name_ == "spike_plus_flat") {
    const int k0 = integer(params_, "k0");
    require(k0 >= 0 && k0 < p, ErrorCode::kConfigError, "spike_plus_flat needs 0 <= k0 < p");
    const double spike = number_or(params_, "spike", 1.0);
    double flat = 0.0;
    if (params_.contains("tail_trace")) {
      flat = number(params_, "tail_trace") / (p - k0);
    } else {
      flat = number(params_, "flat");
    }
    sigmas.head(k0).setConstant(spike);
    sigmas.tail(p - k0).setConstant(flat);
  } else {  // three_block
    ThreeBlockParams q;
    q.k0 = integer(params_, "k0");
    q.k = integer(params_, "k");
    q.p = p;
    q.a = number(params_, "a");
    q.b = number(params_, "b");
    q.c = number(params_, "c");
    q.alpha = number(params_, "alpha");
    return three_block_spectrum(q);
  }
  return Spectrum(std::move(sigmas));
}

}  // namespace benign
