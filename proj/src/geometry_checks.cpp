#include "benign/geometry_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "benign/errors.hpp"
#include "benign/linalg.hpp"
#include "benign/random.hpp"

namespace benign {

namespace {

constexpr double kSlack = 1e-12;

bool within(double v, double lo, double hi) {
  return v >= lo - kSlack * std::abs(lo) && v <= hi + kSlack * std::abs(hi);
}

CheckReport single(std::string name, bool ok) {
  CheckReport r;
  r.name = std::move(name);
  r.n_trials = 1;
  r.passes = ok ? 1 : 0;
  r.pass_rate = ok ? 1.0 : 0.0;
  r.pass = ok;
  return r;
}

double combine(const std::string& key, double a, double b) {
  if (key.rfind("min_", 0) == 0) return std::min(a, b);
  if (key.rfind("max_", 0) == 0) return std::max(a, b);
  return a + b;
}

Eigen::VectorXd gram_eigenvalues(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

CheckReport merge(const CheckReport& a, const CheckReport& b) {
  if (a.n_trials == 0) return b;
  if (b.n_trials == 0) return a;
  require(a.name == b.name, ErrorCode::kInvalidArgument,
          "cannot merge reports of different checks");
  CheckReport r = a;
  for (const auto& [k, v] : b.observed) {
    auto it = r.observed.find(k);
    r.observed[k] = it == r.observed.end() ? v : combine(k, it->second, v);
  }
  for (const auto& [k, v] : b.threshold) r.threshold.emplace(k, v);
  r.min_pass_rate = std::max(a.min_pass_rate, b.min_pass_rate);
  r.n_trials = a.n_trials + b.n_trials;
  r.passes = a.passes + b.passes;
  r.pass_rate = static_cast<double>(r.passes) / r.n_trials;
  r.pass = r.pass_rate >= r.min_pass_rate;
  for (const auto& w : b.warnings)
    if (std::find(r.warnings.begin(), r.warnings.end(), w) == r.warnings.end())
      r.warnings.push_back(w);
  std::sort(r.warnings.begin(), r.warnings.end());
  return r;
}

CheckReport run_trials(int n_trials, std::uint64_t master_seed, double min_pass_rate,
                       const std::function<CheckReport(std::uint64_t)>& fn) {
  require(n_trials >= 1, ErrorCode::kInvalidArgument, "n_trials must be >= 1");
  require(min_pass_rate >= 0.0 && min_pass_rate <= 1.0, ErrorCode::kInvalidArgument,
          "min_pass_rate must lie in [0,1]");
  CheckReport acc;
  for (int t = 0; t < n_trials; ++t)
    acc = merge(acc, fn(derive_seed(master_seed, static_cast<std::uint64_t>(t))));
  acc.min_pass_rate = min_pass_rate;
  acc.pass = acc.pass_rate >= min_pass_rate;
  acc.threshold["min_pass_rate"] = min_pass_rate;
  return acc;
}

CheckReport dm_embedding_check(const Eigen::MatrixXd& x_tail, double tail_trace, double delta) {
  require(delta >= 0.0, ErrorCode::kInvalidArgument, "delta must be non-negative");
  const double lo = (1.0 - 2.0 * delta) * (1.0 - 2.0 * delta);
  const double hi = (1.0 + 2.0 * delta) * (1.0 + 2.0 * delta);
  // For delta >= 1/2 the lower side is vacuous; (1-2 delta)^2 would grow again.
  CheckReport r = dm_embedding_check(x_tail, tail_trace, delta >= 0.5 ? 0.0 : lo, hi);
  r.threshold["delta"] = delta;
  return r;
}

CheckReport dm_embedding_check(const Eigen::MatrixXd& x_tail, double tail_trace, double lo,
                               double hi) {
  require(tail_trace > 0.0, ErrorCode::kInvalidArgument, "tail trace must be positive");
  require(x_tail.rows() >= 1, ErrorCode::kInvalidArgument, "design has no rows");
  const Eigen::VectorXd ev = gram_eigenvalues(x_tail) / tail_trace;
  const double emin = ev.minCoeff();
  const double emax = ev.maxCoeff();
  CheckReport r = single("dm_embedding", within(emin, lo, hi) && within(emax, lo, hi));
  r.observed["min_eigenvalue"] = emin;
  r.observed["max_eigenvalue"] = emax;
  r.threshold["lower"] = lo;
  r.threshold["upper"] = hi;
  return r;
}

void annotate_dm_regime(CheckReport& r, int N, double dvoretsky_dim, double kappa_dm) {
  r.observed["max_n_over_dvoretsky"] = N / dvoretsky_dim;
  if (N > kappa_dm * dvoretsky_dim) r.warnings.push_back("N exceeds kappa_dm * d*(tail)");
}

CheckReport dm_upper_check(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values,
                           double c) {
  require(x_tail.cols() == tail_values.size(), ErrorCode::kInvalidArgument,
          "tail design and tail spectrum disagree on dimension");
  const Eigen::MatrixXd scaled = x_tail * tail_values.cwiseSqrt().asDiagonal();
  const double s1 = std::sqrt(std::max(0.0, gram_eigenvalues(scaled).maxCoeff()));
  const double bound = c * (std::sqrt(tail_values.squaredNorm()) +
                            std::sqrt(static_cast<double>(x_tail.rows())) * tail_values.maxCoeff());
  CheckReport r = single("dm_upper", s1 <= bound * (1.0 + kSlack));
  r.observed["max_s1"] = s1;
  r.threshold["bound"] = bound;
  r.threshold["c"] = c;
  return r;
}

CheckReport isomorphy_check(const Eigen::MatrixXd& x_head, const Eigen::VectorXd& head_values,
                            double kappa_iso, double lo, double hi) {
  require(x_head.cols() == head_values.size(), ErrorCode::kInvalidArgument,
          "head design and head spectrum disagree on dimension");
  const double n = static_cast<double>(x_head.rows());
  const double k = static_cast<double>(x_head.cols());
  require(n >= 1 && k >= 1, ErrorCode::kInvalidArgument, "isomorphy needs N >= 1 and k >= 1");
  if (k > kappa_iso * n) {
    fail(ErrorCode::kRegimeViolation, "isomorphy needs k <= kappa_iso N (k=" +
                                          std::to_string(x_head.cols()) + ", N=" +
                                          std::to_string(x_head.rows()) + ")");
  }
  const Eigen::MatrixXd white = x_head * head_values.cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd w = white.transpose() * white / n;
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w, Eigen::EigenvaluesOnly).eigenvalues();
  CheckReport r = single("isomorphy", within(ev.minCoeff(), lo, hi) && within(ev.maxCoeff(), lo, hi));
  r.observed["min_eigenvalue"] = ev.minCoeff();
  r.observed["max_eigenvalue"] = ev.maxCoeff();
  r.threshold["lower"] = lo;
  r.threshold["upper"] = hi;
  r.threshold["kappa_iso"] = kappa_iso;
  return r;
}

CheckReport restricted_cone_check(const Eigen::MatrixXd& x_head,
                                  const Eigen::VectorXd& head_values, double r_n, int n_dirs,
                                  std::uint64_t seed, double lo, double hi, int max_rejections) {
  require(x_head.cols() == head_values.size() && head_values.size() >= 1,
          ErrorCode::kInvalidArgument, "head design and head spectrum disagree on dimension");
  require(r_n >= 0.0 && n_dirs >= 1, ErrorCode::kInvalidArgument,
          "restricted cone check needs R_N >= 0 and n_dirs >= 1");
  const double top = head_values.maxCoeff();
  if (r_n > std::sqrt(top) * (1.0 + kSlack)) {
    fail(ErrorCode::kConeEmpty, "cone is empty: R_N=" + std::to_string(r_n) +
                                    " exceeds sqrt(sigma_1)=" + std::to_string(std::sqrt(top)));
  }
  const double n = static_cast<double>(x_head.rows());
  const Eigen::VectorXd root = head_values.cwiseSqrt();
  Eigen::Index top_index = 0;
  head_values.maxCoeff(&top_index);

  double rmin = std::numeric_limits<double>::infinity();
  double rmax = 0.0;
  int accepted = 0;
  int rejected = 0;
  auto test = [&](const Eigen::VectorXd& v) {
    const double energy = root.cwiseProduct(v).squaredNorm();
    const double ratio = (x_head * v).squaredNorm() / n / energy;
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
    ++accepted;
  };
  test(Eigen::VectorXd::Unit(head_values.size(), top_index));

  Rng rng(seed);
  while (accepted < n_dirs && rejected < max_rejections) {
    const Eigen::VectorXd v = root.cwiseProduct(gaussian_vector(head_values.size(), rng));
    if (r_n * v.norm() <= root.cwiseProduct(v).norm()) {
      test(v);
    } else {
      ++rejected;
    }
  }
  CheckReport r = single("restricted_cone", within(rmin, lo, hi) && within(rmax, lo, hi));
  r.observed["min_ratio"] = rmin;
  r.observed["max_ratio"] = rmax;
  r.observed["sum_directions"] = accepted;
  r.observed["sum_rejections"] = rejected;
  r.threshold["lower"] = lo;
  r.threshold["upper"] = hi;
  r.threshold["R_N"] = r_n;
  if (accepted < n_dirs) r.warnings.push_back("cone sampling exhausted before n_dirs");
  return r;
}

CheckReport norm_concentration_check(const Eigen::MatrixXd& x_tail, double tail_trace,
                                     double delta) {
  require(tail_trace > 0.0, ErrorCode::kInvalidArgument, "tail trace must be positive");
  const Eigen::ArrayXd dev = (x_tail.rowwise().squaredNorm().array() / tail_trace - 1.0).abs();
  const double worst = dev.size() == 0 ? 0.0 : dev.maxCoeff();
  CheckReport r = single("norm_concentration", worst <= delta * (1.0 + kSlack));
  r.observed["max_deviation"] = worst;
  r.threshold["delta"] = delta;
  return r;
}

Eigen::MatrixXd noise_operator(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values) {
  require(x_tail.cols() == tail_values.size(), ErrorCode::kInvalidArgument,
          "tail design and tail spectrum disagree on dimension");
  const PseudoInverse pinv(x_tail);
  require(pinv.full_row_rank(), ErrorCode::kTailRankDeficient, "X_tail X_tail^T is singular");
  return tail_values.cwiseSqrt().asDiagonal() * (x_tail.transpose() * pinv.gram_pseudo_inverse());
}

CheckReport trace_bound_check(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values,
                              double c) {
  const double tr = noise_operator(x_tail, tail_values).squaredNorm();
  const double t1 = tail_values.sum();
  const double bound = c * static_cast<double>(x_tail.rows()) * tail_values.squaredNorm() / (t1 * t1);
  CheckReport r = single("trace_bound", tr <= bound * (1.0 + kSlack));
  r.observed["max_trace_ddt"] = tr;
  r.threshold["bound"] = bound;
  r.threshold["c"] = c;
  return r;
}

CheckReport noise_operator_check(const Eigen::MatrixXd& d, int n_draws, double sigma_xi,
                                 const Distribution& noise, std::uint64_t seed,
                                 double min_pass_rate) {
  require(n_draws >= 1, ErrorCode::kInvalidArgument, "n_draws must be >= 1");
  require(sigma_xi > 0.0, ErrorCode::kInvalidArgument, "sigma_xi must be positive");
  const double tr = d.squaredNorm();
  require(tr > 0.0, ErrorCode::kInvalidArgument, "Tr(D D^T) = 0");
  const double bound = 1.5 * sigma_xi * std::sqrt(tr);
  const double op_sq = gram_eigenvalues(d.transpose()).maxCoeff();

  Rng rng(seed);
  StandardizedSampler draw(noise);
  int passes = 0;
  double worst = 0.0;
  Eigen::VectorXd xi(d.cols());
  for (int t = 0; t < n_draws; ++t) {
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = sigma_xi * draw(rng);
    const double v = (d * xi).norm();
    worst = std::max(worst, v / bound);
    if (v <= bound) ++passes;
  }
  CheckReport r;
  r.name = "noise_operator";
  r.n_trials = n_draws;
  r.passes = passes;
  r.pass_rate = static_cast<double>(passes) / n_draws;
  r.min_pass_rate = min_pass_rate;
  r.pass = r.pass_rate >= min_pass_rate;
  r.observed["max_ratio_to_bound"] = worst;
  r.observed["min_effective_rank"] = tr / op_sq;
  r.threshold["bound"] = bound;
  r.threshold["min_pass_rate"] = min_pass_rate;
  return r;
}

nlohmann::json check_report_to_json(const CheckReport& r) {
  nlohmann::json obs = nlohmann::json::object();
  for (const auto& [k, v] : r.observed) obs[k] = v;
  nlohmann::json thr = nlohmann::json::object();
  for (const auto& [k, v] : r.threshold) thr[k] = v;
  return {{"name", r.name},         {"observed", obs},         {"threshold", thr},
          {"pass", r.pass},         {"n_trials", r.n_trials},  {"passes", r.passes},
          {"pass_rate", r.pass_rate}, {"warnings", r.warnings}};
}

}  // namespace benign
