#pragma once

// Empirical checks of the random-matrix events used by the upper bounds:
// Dvoretsky-Milman embedding of the tail, the upper embedding bound,
// (restricted) isomorphy of the head, norm concentration, the trace bound on
// D = Sigma_tail^{1/2} A, and the noise-operator bound.
//
// Designs are passed in eigenbasis coordinates (columns already restricted to
// the head or the tail). Every check produces a CheckReport; single-trial
// reports are merged with merge().
//
// Observed keys follow a naming rule that fixes how they aggregate:
// "min_*" keeps the minimum, "max_*" the maximum, "sum_*" the sum.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "benign/sampler.hpp"

namespace benign {

struct CheckReport {
  std::string name;
  std::map<std::string, double> observed;
  std::map<std::string, double> threshold;
  bool pass = false;
  int n_trials = 0;
  int passes = 0;
  double pass_rate = 0.0;
  double min_pass_rate = 1.0;  // pass iff pass_rate >= min_pass_rate
  std::vector<std::string> warnings;
};

/// Associative, order-independent combination of two reports for the same check.
CheckReport merge(const CheckReport& a, const CheckReport& b);

/// Runs fn(derive_seed(master_seed, t)) for t < n_trials and merges the reports.
CheckReport run_trials(int n_trials, std::uint64_t master_seed, double min_pass_rate,
                       const std::function<CheckReport(std::uint64_t)>& fn);

/// Eigenvalues of X2 X2^T / tail_trace inside [(1-2 delta)^2, (1+2 delta)^2].
CheckReport dm_embedding_check(const Eigen::MatrixXd& x_tail, double tail_trace, double delta);
/// Same with an explicit band [lo, hi].
CheckReport dm_embedding_check(const Eigen::MatrixXd& x_tail, double tail_trace, double lo,
                               double hi);

/// Records a warning when N exceeds kappa_dm times the Dvoretsky dimension of
/// the tail ellipsoid; the check itself still runs.
void annotate_dm_regime(CheckReport& r, int N, double dvoretsky_dim, double kappa_dm);

/// s_1(Sigma_tail^{1/2} X2^T) <= c (sqrt(Tr Sigma_tail^2) + sqrt(N) ||Sigma_tail||_op).
CheckReport dm_upper_check(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values,
                           double c = 6.0);

/// Eigenvalues of Sigma_head^{-1/2} X1^T X1 Sigma_head^{-1/2} / N inside [lo, hi].
/// Throws RegimeViolation when k > kappa_iso N.
CheckReport isomorphy_check(const Eigen::MatrixXd& x_head, const Eigen::VectorXd& head_values,
                            double kappa_iso, double lo = 0.5, double hi = 1.5);

/// ||X1 v||^2 / N within [lo, hi] ||Sigma_head^{1/2} v||^2 over sampled directions of the
/// cone R_N ||v|| <= ||Sigma_head^{1/2} v||. The top eigenvector is always included.
/// Throws ConeEmpty when R_N > sqrt(sigma_1).
CheckReport restricted_cone_check(const Eigen::MatrixXd& x_head,
                                  const Eigen::VectorXd& head_values, double r_n, int n_dirs,
                                  std::uint64_t seed, double lo = 0.5, double hi = 1.5,
                                  int max_rejections = 10000);

/// max_i | ||P_tail X_i||^2 / Tr(Sigma_tail) - 1 | <= delta.
CheckReport norm_concentration_check(const Eigen::MatrixXd& x_tail, double tail_trace,
                                     double delta);

/// Tr(D D^T) <= c N Tr(Sigma_tail^2) / Tr(Sigma_tail)^2 with D = Sigma_tail^{1/2} X2^T (X2 X2^T)^{-1}.
/// Throws TailRankDeficient when X2 X2^T is singular.
CheckReport trace_bound_check(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values,
                              double c = 20.0);

/// D = Sigma_tail^{1/2} X2^T (X2 X2^T)^{-1}, p_tail x N.
Eigen::MatrixXd noise_operator(const Eigen::MatrixXd& x_tail, const Eigen::VectorXd& tail_values);

/// Fraction of noise draws with ||D xi|| <= 1.5 sigma_xi sqrt(Tr(D D^T)).
/// Throws InvalidArgument when Tr(D D^T) = 0.
CheckReport noise_operator_check(const Eigen::MatrixXd& d, int n_draws, double sigma_xi,
                                 const Distribution& noise, std::uint64_t seed,
                                 double min_pass_rate = 0.9);

nlohmann::json check_report_to_json(const CheckReport& r);

}  // namespace benign
