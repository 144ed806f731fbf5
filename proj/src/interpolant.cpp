#include "benign/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "benign/errors.hpp"
#include "benign/linalg.hpp"
#include "benign/random.hpp"

namespace benign {

namespace {

double relative(double num, double den) {
  if (den <= std::numeric_limits<double>::min()) return num;
  return num / den;
}

void require_same_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  require(x.rows() == y.size(), ErrorCode::kInvalidArgument,
          "X has " + std::to_string(x.rows()) + " rows but y has length " +
              std::to_string(y.size()));
}

Eigen::VectorXd masked(const Eigen::VectorXd& v, const FeatureSplit& split, bool head) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (int j = 1; j <= split.dim(); ++j)
    if (split.in_head(j) == head) out[j - 1] = v[j - 1];
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& indices) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[indices[i] - 1];
  return out;
}

nlohmann::json vector_json(const Eigen::VectorXd& v, int max_len) {
  if (v.size() > max_len) return {{"elided", true}, {"length", v.size()}, {"norm", v.norm()}};
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

MinNormSolution min_norm_interpolant(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double tol) {
  require_same_rows(x, y);
  require(tol >= 0.0, ErrorCode::kInvalidArgument, "tol must be non-negative");
  MinNormSolution out;
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    out.beta = Eigen::VectorXd::Zero(x.cols());
    out.rank = x.rows() == 0 ? 0 : PseudoInverse(x).rank();
    out.rank_deficient = out.rank < x.rows();
    out.interpolates = true;
    return out;
  }
  const PseudoInverse pinv(x);
  out.beta = pinv.solve(y);
  out.rank = pinv.rank();
  out.rank_deficient = pinv.rank() < x.rows();
  out.relative_residual = (x * out.beta - y).norm() / ynorm;
  out.interpolates = out.relative_residual <= tol;
  return out;
}

Eigen::VectorXd ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  require_same_rows(x, y);
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "ridge lambda must be a non-negative finite number");
  if (lambda == 0.0) return PseudoInverse(x).solve(y);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < p) {
    Eigen::MatrixXd k = x * x.transpose();
    k.diagonal().array() += lambda;
    return x.transpose() * k.ldlt().solve(y);
  }
  Eigen::MatrixXd k = x.transpose() * x;
  k.diagonal().array() += lambda;
  return k.ldlt().solve(x.transpose() * y);
}

Eigen::MatrixXd design_in_eigenbasis(const Eigen::MatrixXd& x,
                                     const std::optional<Eigen::MatrixXd>& basis) {
  if (!basis) return x;
  return x * *basis;
}

Eigen::VectorXd to_eigenbasis(const Eigen::VectorXd& v,
                              const std::optional<Eigen::MatrixXd>& basis) {
  if (!basis) return v;
  return basis->transpose() * v;
}

Eigen::VectorXd from_eigenbasis(const Eigen::VectorXd& v,
                                const std::optional<Eigen::MatrixXd>& basis) {
  if (!basis) return v;
  return *basis * v;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x_eig, const std::vector<int>& indices) {
  Eigen::MatrixXd out(x_eig.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = x_eig.col(indices[c] - 1);
  return out;
}

EstimatorResult decompose(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta_hat, const FeatureSplit& split,
                          const std::optional<Eigen::MatrixXd>& basis, bool verify) {
  require_same_rows(x, y);
  require(x.cols() == beta_hat.size() && split.dim() == beta_hat.size(), ErrorCode::kInvalidArgument,
          "beta_hat, X and split disagree on p");
  EstimatorResult r;
  r.beta_hat = beta_hat;
  const Eigen::VectorXd coords = to_eigenbasis(beta_hat, basis);
  const Eigen::VectorXd head_coords = masked(coords, split, true);
  r.beta_head = from_eigenbasis(head_coords, basis);
  r.beta_tail = beta_hat - r.beta_head;  // exact sum by construction
  r.residual = y - x * beta_hat;
  r.diagnostics["residual_relative"] = relative(r.residual.norm(), y.norm());
  if (!verify) return r;

  const Eigen::MatrixXd x_eig = design_in_eigenbasis(x, basis);
  const std::vector<int> tail = split.tail();
  require(!tail.empty(), ErrorCode::kTailRankDeficient, "tail J^c is empty");
  const Eigen::MatrixXd x_tail = select_columns(x_eig, tail);
  const PseudoInverse tail_pinv(x_tail);
  r.diagnostics["tail_rank"] = tail_pinv.rank();
  r.diagnostics["tail_condition_number"] = tail_pinv.condition_number();
  if (!tail_pinv.full_row_rank()) {
    fail(ErrorCode::kTailRankDeficient,
         "X_tail X_tail^T is singular (rank " + std::to_string(tail_pinv.rank()) + " < N=" +
             std::to_string(x.rows()) + ")");
  }
  const Eigen::MatrixXd x_head = select_columns(x_eig, split.head());
  const Eigen::VectorXd b_head = gather(coords, split.head());
  const Eigen::VectorXd b_tail = gather(coords, tail);
  const Eigen::VectorXd closed = tail_pinv.solve(y - x_head * b_head);
  r.diagnostics["identity_residual"] = (b_tail - closed).norm();
  r.diagnostics["identity_relative_error"] = relative((b_tail - closed).norm(), beta_hat.norm());
  r.diagnostics["pseudo_rank"] = PseudoInverse(x).rank();
  return r;
}

HeadObjective::HeadObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const FeatureSplit& split,
                             const std::optional<Eigen::MatrixXd>& basis)
    : y_(y) {
  require_same_rows(x, y);
  const Eigen::MatrixXd x_eig = design_in_eigenbasis(x, basis);
  x_head_ = select_columns(x_eig, split.head());
  const PseudoInverse tail_pinv(select_columns(x_eig, split.tail()));
  require(tail_pinv.full_row_rank(), ErrorCode::kTailRankDeficient,
          "X_tail X_tail^T is singular");
  gram_inverse_ = tail_pinv.gram_pseudo_inverse();
}

double HeadObjective::operator()(const Eigen::VectorXd& head_coords) const {
  const Eigen::VectorXd z = y_ - x_head_ * head_coords;
  return z.dot(gram_inverse_ * z) + head_coords.squaredNorm();
}

Eigen::VectorXd HeadObjective::normal_equation_solution() const {
  const Eigen::Index k = x_head_.cols();
  if (k == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd mx = gram_inverse_ * x_head_;
  Eigen::MatrixXd lhs = x_head_.transpose() * mx;
  lhs.diagonal().array() += 1.0;
  return lhs.ldlt().solve(mx.transpose() * y_);
}

HeadArgminReport head_argmin_check(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const FeatureSplit& split, const EstimatorResult& result,
                                   const std::optional<Eigen::MatrixXd>& basis, int n_perturb,
                                   std::uint64_t seed, double perturb_norm) {
  require(n_perturb >= 0, ErrorCode::kInvalidArgument, "n_perturb must be non-negative");
  const HeadObjective f(x, y, split, basis);
  const Eigen::VectorXd b = gather(to_eigenbasis(result.beta_head, basis), split.head());

  HeadArgminReport rep;
  rep.n_perturb = n_perturb;
  rep.objective_at_head = f(b);
  rep.min_perturbed_objective = std::numeric_limits<double>::infinity();
  const double slack = 1e-9 * std::max(1.0, std::abs(rep.objective_at_head));
  Rng rng(seed);
  for (int t = 0; t < n_perturb && f.head_dim() > 0; ++t) {
    Eigen::VectorXd d = gaussian_vector(f.head_dim(), rng);
    const double dn = d.norm();
    if (dn > 0.0) d *= perturb_norm / dn;
    const double val = f(b + d);
    rep.min_perturbed_objective = std::min(rep.min_perturbed_objective, val);
    if (val < rep.objective_at_head - slack) ++rep.n_violations;
  }

  const Eigen::VectorXd closed = f.normal_equation_solution();
  const double scale = std::max(b.norm(), closed.norm());
  rep.closed_form_relative_error = scale > 0.0 ? (closed - b).norm() / scale : 0.0;
  rep.pass = rep.n_violations == 0 && rep.closed_form_relative_error <= 1e-8;
  if (!rep.pass) {
    fail(ErrorCode::kPropositionViolation,
         "head component is not the argmin of the head objective (" +
             std::to_string(rep.n_violations) + " violations, closed-form error " +
             std::to_string(rep.closed_form_relative_error) + ")");
  }
  return rep;
}

RiskBreakdown excess_risk(const Spectrum& s, const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& beta_star, const FeatureSplit& split) {
  require(beta_hat.size() == s.dim() && beta_star.size() == s.dim() && split.dim() == s.dim(),
          ErrorCode::kInvalidArgument, "excess_risk: vectors, spectrum and split disagree on p");
  const Eigen::VectorXd d = to_eigenbasis(beta_hat - beta_star, s.basis());
  const Eigen::ArrayXd w = s.values().array() * d.array().square();
  RiskBreakdown r;
  r.total = w.sum();
  for (int j = 1; j <= s.dim(); ++j) (split.in_head(j) ? r.head : r.tail) += w[j - 1];
  return r;
}

BiasVariance bias_variance_terms(const Eigen::MatrixXd& x, const Spectrum& s,
                                 const Eigen::VectorXd& beta_star, double sigma_xi) {
  require(x.cols() == s.dim() && beta_star.size() == s.dim(), ErrorCode::kInvalidArgument,
          "bias_variance_terms: X, spectrum and beta* disagree on p");
  const PseudoInverse pinv(x);
  require(pinv.full_row_rank(), ErrorCode::kRankDeficient, "X X^T is singular");

  BiasVariance out;
  const Eigen::VectorXd err = pinv.solve(x * beta_star) - beta_star;
  const Eigen::VectorXd e = to_eigenbasis(err, s.basis());
  out.bias = (s.values().array() * e.array().square()).sum();
  if (sigma_xi == 0.0) return out;

  // ||Sigma^{1/2} X^T G^{-1}||_HS^2 with G = X X^T, in eigen coordinates.
  const Eigen::MatrixXd x_eig = design_in_eigenbasis(x, s.basis());
  const Eigen::MatrixXd scaled = x_eig * s.values().cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd c = pinv.gram_pseudo_inverse() * scaled;
  out.variance = sigma_xi * sigma_xi * c.squaredNorm();
  return out;
}

nlohmann::json estimator_result_to_json(const EstimatorResult& r, int max_vector_length) {
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = v;
  return {{"beta_hat", vector_json(r.beta_hat, max_vector_length)},
          {"beta_head", vector_json(r.beta_head, max_vector_length)},
          {"beta_tail", vector_json(r.beta_tail, max_vector_length)},
          {"residual", vector_json(r.residual, max_vector_length)},
          {"diagnostics", diag}};
}

}  // namespace benign
