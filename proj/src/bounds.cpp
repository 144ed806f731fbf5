#include "benign/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "benign/errors.hpp"

namespace benign {

namespace {

constexpr double kRel = 1e-12;

struct SplitStats {
  double tail_trace = 0.0;
  double tail_trace_sq = 0.0;  // Tr(S_tail^2)
  double tail_op = 0.0;
  double head_trace = 0.0;
  double head_top = 0.0;
  double tail_bias = 0.0;       // ||S_tail^{1/2} beta_tail||
  double head_inv_bias = 0.0;   // ||S_head^{-1/2} beta_head||
  double head_norm = 0.0;       // ||beta_head||
};

SplitStats stats(const ModelSpec& m, const FeatureSplit& split) {
  require(split.dim() == m.p(), ErrorCode::kInvalidArgument, "split and model disagree on p");
  require(split.tail_dim() > 0, ErrorCode::kTailEmpty, "tail J^c is empty");
  SplitStats st;
  double tb = 0.0, hb = 0.0, hn = 0.0;
  for (int j = 1; j <= m.p(); ++j) {
    const double s = m.spectrum.sigma(j);
    const double b = m.beta_star[j - 1];
    if (split.in_head(j)) {
      st.head_trace += s;
      st.head_top = std::max(st.head_top, s);
      hb += b * b / s;
      hn += b * b;
    } else {
      st.tail_trace += s;
      st.tail_trace_sq += s * s;
      st.tail_op = std::max(st.tail_op, s);
      tb += s * b * b;
    }
  }
  st.tail_bias = std::sqrt(tb);
  st.head_inv_bias = std::sqrt(hb);
  st.head_norm = std::sqrt(hn);
  return st;
}

double overfit_noise(const ModelSpec& m, const SplitStats& st) {
  return m.sigma_xi * std::sqrt(m.N * st.tail_trace_sq) / st.tail_trace;
}

int require_k_star(const ModelSpec& m, const GeometryConstants& g) {
  const auto k = k_star(m.spectrum, m.N, g);
  if (!k) {
    fail(ErrorCode::kNoBenignSplit,
         "no k < p with r_k >= b N (b=" + std::to_string(g.b) + ", N=" + std::to_string(m.N) + ")");
  }
  return *k;
}

template <class Container>
nlohmann::json array_json(const Container& c) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : c) out.push_back(v);
  return out;
}

BoInstance bo_instance(const ModelSpec& m, const GeometryConstants& g) {
  BoInstance out;
  out.N = m.N;
  out.p = m.p();
  out.k_star = k_star(m.spectrum, m.N, g);
  if (!out.k_star) return out;
  const int k = *out.k_star;
  const SplitStats st = stats(m, FeatureSplit::contiguous(k, m.p()));
  out.quantities = {static_cast<double>(k) / m.N,
                    m.N * st.tail_trace_sq / (st.tail_trace * st.tail_trace), st.tail_bias,
                    st.head_inv_bias * st.tail_trace / m.N};
  out.side_condition = m.spectrum.op_norm() * m.N >= st.tail_trace * (1.0 - kRel);
  return out;
}

nlohmann::json bo_instance_json(const BoInstance& b) {
  nlohmann::json out = {{"N", b.N}, {"p", b.p}, {"side_condition", b.side_condition}};
  out["k_star"] = b.k_star ? nlohmann::json(*b.k_star) : nlohmann::json(nullptr);
  out["quantities"] = array_json(b.quantities);
  return out;
}

}  // namespace

const char* to_string(SquareCase c) { return c == SquareCase::kI ? "i" : "ii"; }

std::array<double, 4> r_star_terms_at(const ModelSpec& m, int k) {
  require(k >= 0 && k < m.p(), ErrorCode::kBadSplit, "k must lie in [0, p)");
  const SplitStats st = stats(m, FeatureSplit::contiguous(k, m.p()));
  return {m.sigma_xi * std::sqrt(static_cast<double>(k) / m.N), overfit_noise(m, st), st.tail_bias,
          st.head_inv_bias * st.tail_trace / m.N};
}

RStar rate_r_star(const ModelSpec& m, const GeometryConstants& g) {
  RStar r;
  r.k_star = require_k_star(m, g);
  r.terms = r_star_terms_at(m, r.k_star);
  r.value = *std::max_element(r.terms.begin(), r.terms.end());
  return r;
}

SquareTerm square_term(const ModelSpec& m, const FeatureSplit& split, const GeometryConstants& g,
                       std::optional<SquareCase> case_override) {
  const SplitStats st = stats(m, split);
  const double width = gaussian_mean_width(m.spectrum, split, g);
  const double level = g.kappa_dm * width * width;  // kappa_dm l*^2
  const double sigma1 = split.head_dim() > 0 ? st.head_top : m.spectrum.op_norm();
  const double n = m.N;

  SquareTerm out;
  out.thresholds = split_j1_j2(m.spectrum, split, m.N, g);
  out.square_case = sigma1 * n < level ? SquareCase::kI : SquareCase::kII;
  if (case_override) out.square_case = *case_override;

  double j2_sum = 0.0;
  for (int j : out.thresholds.j2) j2_sum += m.spectrum.sigma(j);

  if (out.square_case == SquareCase::kI) {
    out.term_names = {"noise_head_trace", "tail_bias_scaled", "head_norm"};
    out.terms = {m.sigma_xi * std::sqrt(st.head_trace / st.tail_trace),
                 std::sqrt(n * sigma1 / st.tail_trace) * st.tail_bias,
                 st.head_norm * std::sqrt(st.tail_trace / n)};
  } else {
    double thres_bias = 0.0;
    for (int j : split.head()) {
      const double b = m.beta_star[j - 1];
      thres_bias += b * b / std::max(m.spectrum.sigma(j), out.thresholds.threshold);
    }
    out.term_names = {"noise_j1", "noise_j2", "tail_bias", "head_bias_thresholded"};
    out.terms = {m.sigma_xi * std::sqrt(out.thresholds.j1.size() / n),
                 m.sigma_xi * std::sqrt(j2_sum / st.tail_trace), st.tail_bias,
                 std::sqrt(thres_bias) * st.tail_trace / n};
  }
  out.value = *std::max_element(out.terms.begin(), out.terms.end());
  out.overfit_noise = overfit_noise(m, st);
  out.tail_bias = st.tail_bias;
  out.full_value = std::max({out.value, out.overfit_noise, out.tail_bias});
  out.deviation_exponent = out.thresholds.j1.size() + n * j2_sum / st.tail_trace;

  const double dstar = width * width / st.tail_op;
  if (n > g.kappa_dm * dstar * (1.0 + kRel)) out.violations.push_back("N > kappa_dm * d*(tail)");
  if (split.head_dim() > g.kappa_iso * n) {
    const FixedPoint fp = fixed_point_rn(m.spectrum, split, m.N, g);
    if (fp.R > width * std::sqrt(g.kappa_dm / n) * (1.0 + kRel))
      out.violations.push_back("R_N(head) > l*(tail) sqrt(kappa_dm/N)");
    if (out.square_case == SquareCase::kI && st.head_trace > n * sigma1 * (1.0 + kRel))
      out.violations.push_back("Tr(head) > N sigma_1");
    if (out.square_case == SquareCase::kII &&
        j2_sum > level * (1.0 - out.thresholds.j1.size() / n) * (1.0 + kRel))
      out.violations.push_back("sum_{J2} sigma > kappa_dm l*^2 (1 - |J1|/N)");
  }
  return out;
}

double price_of_overfitting(const ModelSpec& m, const FeatureSplit& split, double noise_constant) {
  const SplitStats st = stats(m, split);
  return noise_constant * overfit_noise(m, st) + st.tail_bias;
}

bool lower_bound_scale_admissible(const GeometryConstants& g, double b_scale) {
  return b_scale >= std::max(4.0 / g.kappa_dm, 24.0);
}

double lower_bound_value(const ModelSpec& m, const GeometryConstants& g, double c_lb,
                         double b_scale) {
  require(c_lb >= 0.0 && b_scale > 0.0, ErrorCode::kInvalidArgument,
          "lower bound needs c_lb >= 0 and b > 0");
  const int k = require_k_star(m, g);
  if (4 * k >= m.N) {
    fail(ErrorCode::kRegimeViolation,
         "lower bound needs k*_b < N/4 (k*=" + std::to_string(k) + ", N=" + std::to_string(m.N) + ")");
  }
  double worst = 0.0;
  for (double t : r_star_terms_at(m, k)) worst = std::max(worst, t * t);
  return c_lb / (b_scale * b_scale) * worst;
}

Baselines baseline_rates(const ModelSpec& m, const GeometryConstants& g) {
  const int k = require_k_star(m, g);
  const auto terms = r_star_terms_at(m, k);
  const SplitStats st = stats(m, FeatureSplit::contiguous(k, m.p()));
  const double sigma1 = m.spectrum.op_norm();
  const double r0 = m.spectrum.trace() / sigma1;
  const double ratio = r0 / m.N;
  const double big_r = st.tail_trace * st.tail_trace / st.tail_trace_sq;

  Baselines out;
  out.bllt = m.beta_star.norm() * std::sqrt(sigma1) * std::max(std::pow(ratio, 0.25), std::sqrt(ratio)) +
             m.sigma_xi * (std::sqrt(static_cast<double>(k) / m.N) + std::sqrt(m.N / big_r));
  out.tsigler = terms[0] + terms[1] + terms[2] + terms[3];
  return out;
}

BoVerdict bo_classify(const std::vector<ModelSpec>& sequence, const GeometryConstants& g) {
  require(sequence.size() >= 3, ErrorCode::kConfigError,
          "benign-overfitting classification needs at least three sample sizes");
  for (std::size_t i = 1; i < sequence.size(); ++i)
    require(sequence[i].N > sequence[i - 1].N, ErrorCode::kConfigError,
            "sample sizes must be strictly increasing");

  BoVerdict v;
  for (const auto& m : sequence) v.instances.push_back(bo_instance(m, g));

  for (const auto& inst : v.instances) {
    if (!inst.k_star) {
      v.reason = "no k*_b at N=" + std::to_string(inst.N);
      return v;
    }
  }
  v.side_condition_everywhere = std::all_of(v.instances.begin(), v.instances.end(),
                                            [](const BoInstance& b) { return b.side_condition; });
  static const char* names[] = {"k*/N", "N Tr(S_tail^2)/Tr(S_tail)^2", "tail bias", "head bias"};
  for (int q = 0; q < 4; ++q) {
    bool zero = true;
    bool decreasing = true;
    for (std::size_t i = 0; i < v.instances.size(); ++i) {
      const double cur = v.instances[i].quantities[static_cast<std::size_t>(q)];
      zero = zero && cur <= 1e-12;
      if (i > 0 && !(cur < v.instances[i - 1].quantities[static_cast<std::size_t>(q)]))
        decreasing = false;
    }
    v.vanishing[static_cast<std::size_t>(q)] = zero || decreasing;
    if (!v.vanishing[static_cast<std::size_t>(q)] && v.reason.empty())
      v.reason = std::string(names[q]) + " does not decrease";
  }
  v.benign = v.side_condition_everywhere &&
             std::all_of(v.vanishing.begin(), v.vanishing.end(), [](bool b) { return b; });
  if (!v.side_condition_everywhere && v.reason.empty())
    v.reason = "sigma_1 N < Tr(S_tail) somewhere";
  if (v.benign) v.reason = "all four quantities vanish along N";
  return v;
}

ExampleFamilyReport example_family(const ThreeBlockParams& q, int N) {
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  ExampleFamilyReport out{three_block_spectrum(q), {}, {}};
  const double k0a = std::pow(q.k0, q.alpha);
  out.ratios["c_over_bN_per_k0a_p"] = q.c / (q.b * N / (k0a * q.p));
  out.ratios["k_over_k0_pow_alpha_per_p_over_N"] = std::pow(static_cast<double>(q.k) / q.k0, q.alpha) /
                                                    (static_cast<double>(q.p) / N);
  out.ratios["k0_over_N"] = static_cast<double>(q.k0) / N;
  out.ratios["N_over_p_minus_k"] = static_cast<double>(N) / (q.p - q.k);
  out.ratios["k_pow_1_minus_alpha_times_k0_pow_alpha"] = std::pow(q.k, 1.0 - q.alpha) * k0a;
  out.ratios["a_over_b_per_k0a"] = q.a / (q.b / k0a);

  if (q.k0 >= N) out.violations.push_back("k0 >= N");
  if (N >= q.k) out.violations.push_back("N >= k");
  if (!(q.a > q.b / k0a)) out.violations.push_back("a <= b / k0^alpha");
  if (out.ratios["k_over_k0_pow_alpha_per_p_over_N"] > 1.0 + kRel)
    out.violations.push_back("(k/k0)^alpha > p/N");
  return out;
}

RateReport rate_report(const ModelSpec& m, const GeometryConstants& g,
                       const std::optional<FeatureSplit>& split, const RateKnobs& knobs) {
  m.validate();
  g.validate();
  RateReport r;
  r.r_star = rate_r_star(m, g);
  const FeatureSplit sp = split ? *split : FeatureSplit::contiguous(r.r_star.k_star, m.p());
  r.square = square_term(m, sp, g);
  r.overfit_price = price_of_overfitting(m, sp, knobs.overfit_constant);
  if (4 * r.r_star.k_star < m.N) {
    r.lower_bound = lower_bound_value(m, g, knobs.c_lb, knobs.lower_bound_scale);
  } else {
    r.notes.push_back("lower bound not applicable: k*_b >= N/4");
  }
  r.lower_bound_scale_ok = lower_bound_scale_admissible(g, knobs.lower_bound_scale);
  if (!r.lower_bound_scale_ok) r.notes.push_back("lower-bound scale below max(4/kappa_dm, 24)");
  r.baselines = baseline_rates(m, g);
  r.bo = bo_instance(m, g);
  return r;
}

nlohmann::json rate_report_to_json(const RateReport& r) {
  nlohmann::json sq = {{"case", to_string(r.square.square_case)},
                       {"value", r.square.value},
                       {"terms", array_json(r.square.terms)},
                       {"term_names", r.square.term_names},
                       {"overfit_noise", r.square.overfit_noise},
                       {"tail_bias", r.square.tail_bias},
                       {"full_value", r.square.full_value},
                       {"deviation_exponent", r.square.deviation_exponent},
                       {"j1", r.square.thresholds.j1},
                       {"j2_size", r.square.thresholds.j2.size()},
                       {"threshold", r.square.thresholds.threshold},
                       {"violations", r.square.violations}};
  nlohmann::json out = {{"k_star", r.r_star.k_star},
                        {"r_star", r.r_star.value},
                        {"r_star_terms", array_json(r.r_star.terms)},
                        {"square", sq},
                        {"overfit_price", r.overfit_price},
                        {"lower_bound_scale_ok", r.lower_bound_scale_ok},
                        {"bllt_rate", r.baselines.bllt},
                        {"tsigler_rate", r.baselines.tsigler},
                        {"bo_quantities", array_json(r.bo.quantities)},
                        {"bo_side_condition", r.bo.side_condition},
                        {"notes", r.notes}};
  out["lower_bound"] = r.lower_bound ? nlohmann::json(*r.lower_bound) : nlohmann::json(nullptr);
  return out;
}

nlohmann::json bo_verdict_to_json(const BoVerdict& v) {
  nlohmann::json inst = nlohmann::json::array();
  for (const auto& b : v.instances) inst.push_back(bo_instance_json(b));
  return {{"instances", inst},
          {"vanishing", array_json(v.vanishing)},
          {"side_condition_everywhere", v.side_condition_everywhere},
          {"benign", v.benign},
          {"reason", v.reason}};
}

}  // namespace benign
