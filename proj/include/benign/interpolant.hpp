#pragma once

// Minimum l2-norm interpolation, ridge regression, and the split of the
// interpolant into a head (ridge-like estimation) component on V_J and a
// tail (overfitting) component on V_{J^c}.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "benign/spectrum.hpp"

namespace benign {

struct MinNormSolution {
  Eigen::VectorXd beta;
  int rank = 0;
  bool rank_deficient = false;  // X X^T singular beyond the cutoff
  double relative_residual = 0.0;  // ||X beta - y|| / ||y||, 0 when y = 0
  bool interpolates = false;    // relative_residual <= tol
};

/// argmin ||beta||_2 subject to X beta = y, through the pseudoinverse. When
/// X X^T is rank deficient the minimum-norm least-squares solution is returned
/// with rank_deficient set.
MinNormSolution min_norm_interpolant(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double tol = 1e-8);

/// argmin ||y - X beta||^2 + lambda ||beta||^2. lambda = 0 is the
/// minimum-norm interpolant. Solved in the N x N dual when N < p.
Eigen::VectorXd ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

/// X U, the design expressed in the eigenbasis of Sigma.
Eigen::MatrixXd design_in_eigenbasis(const Eigen::MatrixXd& x,
                                     const std::optional<Eigen::MatrixXd>& basis);
/// U^T v.
Eigen::VectorXd to_eigenbasis(const Eigen::VectorXd& v,
                              const std::optional<Eigen::MatrixXd>& basis);
/// U v.
Eigen::VectorXd from_eigenbasis(const Eigen::VectorXd& v,
                                const std::optional<Eigen::MatrixXd>& basis);

/// Columns of an eigenbasis design restricted to an index list (1-based).
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x_eig, const std::vector<int>& indices);

struct EstimatorResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd beta_head;
  Eigen::VectorXd beta_tail;
  Eigen::VectorXd residual;
  std::map<std::string, double> diagnostics;
};

/// Projects beta_hat onto V_J and V_{J^c}. With verify set, also checks the
/// closed form beta_tail = A (y - X_J beta_head), A = X_{J^c}^T (X_{J^c} X_{J^c}^T)^{-1},
/// and stores the discrepancy in diagnostics["identity_relative_error"].
/// Throws TailRankDeficient when X_{J^c} X_{J^c}^T is singular.
EstimatorResult decompose(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta_hat, const FeatureSplit& split,
                          const std::optional<Eigen::MatrixXd>& basis, bool verify = true);

/// F(b) = ||A (y - X_J b)||^2 + ||b||^2 over b in V_J, in eigenbasis head coordinates.
class HeadObjective {
 public:
  HeadObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FeatureSplit& split,
                const std::optional<Eigen::MatrixXd>& basis);

  double operator()(const Eigen::VectorXd& head_coords) const;

  /// Solution of (X_J^T M X_J + I) b = X_J^T M y, M = (X_{J^c} X_{J^c}^T)^{-1}.
  Eigen::VectorXd normal_equation_solution() const;

  int head_dim() const { return static_cast<int>(x_head_.cols()); }

 private:
  Eigen::MatrixXd x_head_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd gram_inverse_;  // M
};

struct HeadArgminReport {
  double objective_at_head = 0.0;
  double min_perturbed_objective = 0.0;
  int n_perturb = 0;
  int n_violations = 0;
  double closed_form_relative_error = 0.0;
  bool pass = false;
};

/// Checks that beta_head minimizes the head objective against n_perturb random
/// perturbations of norm perturb_norm inside V_J, and agrees with the
/// normal-equation solution. Throws PropositionViolation on failure.
HeadArgminReport head_argmin_check(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const FeatureSplit& split, const EstimatorResult& result,
                                   const std::optional<Eigen::MatrixXd>& basis, int n_perturb,
                                   std::uint64_t seed, double perturb_norm = 0.1);

struct RiskBreakdown {
  double total = 0.0;
  double head = 0.0;
  double tail = 0.0;
  double bias = 0.0;
  double variance = 0.0;
};

/// ||Sigma^{1/2}(beta_hat - beta*)||^2 and its restriction to V_J and V_{J^c}.
/// Both vectors in ambient coordinates.
RiskBreakdown excess_risk(const Spectrum& s, const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& beta_star, const FeatureSplit& split);

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

/// Conditional expectation of the excess risk over xi given X:
/// bias = ||Sigma^{1/2}(X^+ X - I) beta*||^2, variance = sigma_xi^2 ||Sigma^{1/2} X^+||_HS^2.
/// Throws RankDeficient when X X^T is singular.
BiasVariance bias_variance_terms(const Eigen::MatrixXd& x, const Spectrum& s,
                                 const Eigen::VectorXd& beta_star, double sigma_xi);

/// JSON view; vectors above max_vector_length entries are replaced by their norms.
nlohmann::json estimator_result_to_json(const EstimatorResult& r, int max_vector_length = 10000);

}  // namespace benign
