#pragma once

#include <Eigen/Dense>

namespace benign {

/// Moore-Penrose pseudoinverse X^+ of an N x p matrix, stored in factored
/// form X^+ = V_r S_r^{-1} U_r^T with singular values below
/// max(N, p) * eps * s_1 treated as zero.
///
/// Wide matrices are factored through the N x N Gram matrix when it is well
/// conditioned (kappa(X) below kGramConditionLimit) and through a thin QR of
/// X^T followed by an SVD of the triangular factor otherwise; tall matrices go
/// straight to a thin SVD.
class PseudoInverse {
 public:
  static constexpr double kGramConditionLimit = 1e3;

  explicit PseudoInverse(const Eigen::MatrixXd& x);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  int rank() const { return rank_; }
  bool full_row_rank() const { return rank_ == rows_; }

  /// All min(N, p) singular values, non-increasing, including those cut.
  const Eigen::VectorXd& singular_values() const { return singular_values_; }
  double condition_number() const;

  /// X^+ y, the minimum-norm least-squares solution.
  Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
  /// X^+ as an explicit p x N matrix.
  Eigen::MatrixXd matrix() const;
  /// (X X^T)^+ = U_r S_r^{-2} U_r^T, N x N.
  Eigen::MatrixXd gram_pseudo_inverse() const;

  bool used_gram_path() const { return gram_path_; }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  int rank_ = 0;
  bool gram_path_ = false;
  Eigen::VectorXd singular_values_;
  Eigen::MatrixXd left_;   // N x r
  Eigen::MatrixXd right_;  // p x r, empty on the Gram path
  Eigen::MatrixXd x_;      // kept on the Gram path: right = X^T U_r S_r^{-1}
};

/// Cutoff below which a singular value counts as zero.
double singular_value_cutoff(Eigen::Index rows, Eigen::Index cols, double s1);

}  // namespace benign
