#pragma once

// Closed-form rates: r*, the square term of the two upper bounds (cases i/ii,
// any head set J), the price of overfitting, the matching lower bound, the
// benign-overfitting classifier, the three-block example family and the two
// earlier rates used as baselines. Absolute constants are dropped unless a
// knob says otherwise.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/sampler.hpp"
#include "benign/spectrum.hpp"
#include "benign/spectrum_io.hpp"

namespace benign {

enum class SquareCase { kI, kII };
const char* to_string(SquareCase c);

struct RStar {
  int k_star = 0;
  std::array<double, 4> terms{};  // noise sqrt(k/N), overfit noise, tail bias, head bias
  double value = 0.0;             // max(terms)
};

/// Evaluates the four terms at k = k*_b. Throws NoBenignSplit when k*_b does not exist.
RStar rate_r_star(const ModelSpec& m, const GeometryConstants& g);

/// Same terms at an arbitrary contiguous head size k < p.
std::array<double, 4> r_star_terms_at(const ModelSpec& m, int k);

struct SquareTerm {
  SquareCase square_case = SquareCase::kII;
  std::vector<double> terms;
  std::vector<std::string> term_names;
  double value = 0.0;          // max(terms)
  double overfit_noise = 0.0;  // sigma_xi sqrt(N Tr(S_tail^2)) / Tr(S_tail)
  double tail_bias = 0.0;      // ||S_tail^{1/2} beta*_tail||
  double full_value = 0.0;     // max(terms, overfit_noise, tail_bias): the whole upper rate
  double deviation_exponent = 0.0;  // |J1| + N sum_{J2} sigma / Tr(S_tail)
  HeadThresholdSplit thresholds;
  std::vector<std::string> violations;  // unmet preconditions, reported only
};

/// Throws TailEmpty when J^c is empty.
SquareTerm square_term(const ModelSpec& m, const FeatureSplit& split, const GeometryConstants& g,
                       std::optional<SquareCase> case_override = std::nullopt);

/// constant * sigma_xi sqrt(N Tr(S_tail^2)) / Tr(S_tail) + ||S_tail^{1/2} beta*_tail||.
double price_of_overfitting(const ModelSpec& m, const FeatureSplit& split,
                            double noise_constant = 1.0);

/// (c_lb / b_scale^2) * max of the squared r* terms at k*_b (k*_b taken with g.b).
/// Throws NoBenignSplit without k*_b and RegimeViolation when k*_b >= N/4.
double lower_bound_value(const ModelSpec& m, const GeometryConstants& g, double c_lb,
                         double b_scale = 24.0);

/// b_scale >= max(4 / kappa_dm, 24).
bool lower_bound_scale_admissible(const GeometryConstants& g, double b_scale);

struct Baselines {
  double bllt = 0.0;
  double tsigler = 0.0;
};

/// Constant-free versions of the two earlier upper rates at k = k*_b (deviation
/// parameters set to 1). Throws NoBenignSplit.
Baselines baseline_rates(const ModelSpec& m, const GeometryConstants& g);

struct BoInstance {
  int N = 0;
  int p = 0;
  std::optional<int> k_star;
  std::array<double, 4> quantities{};  // k*/N, N Tr(S^2)/Tr^2, tail bias, head bias * Tr/N
  bool side_condition = false;         // sigma_1 N >= Tr(S_tail)
};

struct BoVerdict {
  std::vector<BoInstance> instances;
  std::array<bool, 4> vanishing{};  // strictly decreasing (or identically zero) along N
  bool side_condition_everywhere = false;
  bool benign = false;
  std::string reason;
};

/// Needs at least three instances with strictly increasing N.
BoVerdict bo_classify(const std::vector<ModelSpec>& sequence, const GeometryConstants& g);

struct ExampleFamilyReport {
  Spectrum spectrum;
  std::map<std::string, double> ratios;
  std::vector<std::string> violations;
};

/// Three-block spectrum (a; b j^-alpha; c). Throws SpectrumNotSorted when the
/// blocks are out of order; every other condition is reported.
ExampleFamilyReport example_family(const ThreeBlockParams& q, int N);

struct RateKnobs {
  double overfit_constant = 1.0;
  double c_lb = 1.0;
  double lower_bound_scale = 24.0;
};

struct RateReport {
  RStar r_star;
  SquareTerm square;
  double overfit_price = 0.0;
  std::optional<double> lower_bound;  // absent when k*_b >= N/4
  bool lower_bound_scale_ok = false;
  Baselines baselines;
  BoInstance bo;
  std::vector<std::string> notes;
};

/// Everything at once; the split defaults to {1..k*_b}.
RateReport rate_report(const ModelSpec& m, const GeometryConstants& g,
                       const std::optional<FeatureSplit>& split = std::nullopt,
                       const RateKnobs& knobs = {});

nlohmann::json rate_report_to_json(const RateReport& r);
nlohmann::json bo_verdict_to_json(const BoVerdict& v);

}  // namespace benign
