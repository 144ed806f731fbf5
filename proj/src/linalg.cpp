#include "benign/linalg.hpp"

#include <algorithm>
#include <limits>

namespace benign {

double singular_value_cutoff(Eigen::Index rows, Eigen::Index cols, double s1) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s1;
}

namespace {

int count_above(const Eigen::VectorXd& s, double cutoff) {
  int r = 0;
  while (r < s.size() && s[r] > cutoff) ++r;
  return r;
}

}  // namespace

PseudoInverse::PseudoInverse(const Eigen::MatrixXd& x) : rows_(x.rows()), cols_(x.cols()) {
  if (rows_ == 0 || cols_ == 0) {
    singular_values_.resize(0);
    return;
  }

  if (rows_ <= cols_) {
    // Gram route: X X^T = U S^2 U^T.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(rows_, rows_);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd ev = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double smax = std::sqrt(ev[0]);
    const double smin = std::sqrt(ev[rows_ - 1]);
    if (smax > 0.0 && smin * kGramConditionLimit > smax) {
      gram_path_ = true;
      singular_values_ = ev.cwiseSqrt();
      rank_ = static_cast<int>(rows_);
      left_ = eig.eigenvectors().rowwise().reverse();
      x_ = x;
      return;
    }
    // Ill-conditioned or rank deficient: X^T = Q R, R = W S V^T, X = V S (Q W)^T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(rows_).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    singular_values_ = svd.singularValues();
    rank_ = count_above(singular_values_,
                        singular_value_cutoff(rows_, cols_, singular_values_[0]));
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(cols_, rows_);
    left_ = svd.matrixV().leftCols(rank_);
    right_ = q * svd.matrixU().leftCols(rank_);
    return;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  singular_values_ = svd.singularValues();
  rank_ = count_above(singular_values_, singular_value_cutoff(rows_, cols_, singular_values_[0]));
  left_ = svd.matrixU().leftCols(rank_);
  right_ = svd.matrixV().leftCols(rank_);
}

double PseudoInverse::condition_number() const {
  if (singular_values_.size() == 0) return 0.0;
  const double smin = singular_values_[singular_values_.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return singular_values_[0] / smin;
}

Eigen::VectorXd PseudoInverse::solve(const Eigen::VectorXd& y) const {
  if (rank_ == 0) return Eigen::VectorXd::Zero(cols_);
  const Eigen::VectorXd s = singular_values_.head(rank_);
  const Eigen::VectorXd coeff = left_.transpose() * y;
  if (gram_path_) return x_.transpose() * (left_ * coeff.cwiseQuotient(s.cwiseProduct(s)));
  return right_ * coeff.cwiseQuotient(s);
}

Eigen::MatrixXd PseudoInverse::matrix() const {
  if (rank_ == 0) return Eigen::MatrixXd::Zero(cols_, rows_);
  const Eigen::VectorXd s = singular_values_.head(rank_);
  if (gram_path_) {
    const Eigen::VectorXd inv_sq = s.cwiseProduct(s).cwiseInverse();
    return x_.transpose() * (left_ * inv_sq.asDiagonal() * left_.transpose());
  }
  return right_ * s.cwiseInverse().asDiagonal() * left_.transpose();
}

Eigen::MatrixXd PseudoInverse::gram_pseudo_inverse() const {
  if (rank_ == 0) return Eigen::MatrixXd::Zero(rows_, rows_);
  const Eigen::VectorXd s = singular_values_.head(rank_);
  const Eigen::VectorXd inv_sq = s.cwiseProduct(s).cwiseInverse();
  return left_ * inv_sq.asDiagonal() * left_.transpose();
}

}  // namespace benign
