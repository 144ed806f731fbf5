#pragma once

// Functionals of a covariance spectrum: traces over index sets, effective
// ranks, the Gaussian mean width / Dvoretsky dimension of the tail ellipsoid,
// the effective dimension k*_b, the restricted-isomorphy fixed point and the
// J1/J2 thresholding of the head.
//
// Indices follow the 1-based convention [p] = {1..p}; k = 0 is the empty head.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace benign {

/// Ordered eigenvalues sigma_1 >= ... >= sigma_p > 0 of a covariance matrix,
/// with an optional orthogonal eigenbasis U (columns are eigenvectors).
class Spectrum {
 public:
  explicit Spectrum(Eigen::VectorXd sigmas);
  explicit Spectrum(const std::vector<double>& sigmas);
  Spectrum(Eigen::VectorXd sigmas, Eigen::MatrixXd basis);

  int dim() const { return static_cast<int>(sigmas_.size()); }

  /// 1-based access.
  double sigma(int j) const { return sigmas_[j - 1]; }
  const Eigen::VectorXd& values() const { return sigmas_; }

  bool has_basis() const { return basis_.has_value(); }
  const std::optional<Eigen::MatrixXd>& basis() const { return basis_; }

  double trace() const { return sigmas_.sum(); }
  double op_norm() const { return sigmas_[0]; }

  /// Same eigenvalues in a Haar-random orthogonal basis.
  Spectrum with_random_rotation(std::uint64_t seed) const;

 private:
  Eigen::VectorXd sigmas_;
  std::optional<Eigen::MatrixXd> basis_;
};

/// Head index set J (sorted, 1-based) of the feature space decomposition
/// R^p = V_J (+) V_{J^c}. The tail J^c is implicit.
class FeatureSplit {
 public:
  static FeatureSplit contiguous(int k, int p);
  static FeatureSplit from_indices(std::vector<int> head, int p);

  int dim() const { return p_; }
  int head_dim() const { return static_cast<int>(head_.size()); }
  int tail_dim() const { return p_ - head_dim(); }

  const std::vector<int>& head() const { return head_; }
  std::vector<int> tail() const;
  bool in_head(int j) const { return mask_[j - 1]; }

  /// True when J = {1..|J|}.
  bool is_contiguous() const;

 private:
  FeatureSplit(std::vector<int> head, int p);

  std::vector<int> head_;
  std::vector<bool> mask_;
  int p_ = 0;
};

struct MeanWidthMethod {
  enum class Kind { kTraceSurrogate, kMonteCarlo };
  Kind kind = Kind::kTraceSurrogate;
  int n_draws = 1000;
  std::uint64_t seed = 0x5eedULL;

  static MeanWidthMethod trace_surrogate() { return {}; }
  static MeanWidthMethod monte_carlo(int n_draws, std::uint64_t seed = 0x5eedULL) {
    return {Kind::kMonteCarlo, n_draws, seed};
  }
};

/// Absolute constants the theory leaves unnamed, exposed as knobs.
/// b = 4 / kappa_dm by default.
struct GeometryConstants {
  double kappa_dm = 1.0;
  double kappa_iso = 0.25;
  double c0 = 0.25;
  double b = 4.0;
  MeanWidthMethod lstar;

  void validate() const;
};

struct EffectiveRanks {
  double r = 0.0;  // Tr(tail) / ||tail||_op
  double R = 0.0;  // Tr(tail)^2 / Tr(tail^2)
};

enum class Regime { A, B, C };
char to_char(Regime regime);

struct FixedPoint {
  double R = 0.0;
  Regime regime = Regime::A;
  std::optional<int> k_double_star;
};

struct HeadThresholdSplit {
  std::vector<int> j1;
  std::vector<int> j2;
  double threshold = 0.0;  // kappa_dm * lstar^2 / N
};

Eigen::VectorXd head_values(const Spectrum& s, const FeatureSplit& split);
Eigen::VectorXd tail_values(const Spectrum& s, const FeatureSplit& split);

double tail_trace(const Spectrum& s, const FeatureSplit& split);
EffectiveRanks effective_ranks(const Spectrum& s, const FeatureSplit& split);

/// l*(Sigma_tail^{1/2} B_2) = E||Sigma_tail^{1/2} G||_2, either as the
/// sqrt(Tr) surrogate or a Monte Carlo average.
double gaussian_mean_width(const Spectrum& s, const FeatureSplit& split,
                           const GeometryConstants& g);

/// l*^2 / ||Sigma_tail||_op.
double dvoretsky_dimension(const Spectrum& s, const FeatureSplit& split,
                           const GeometryConstants& g);

/// Smallest k >= 0 with r_k >= b N; nullopt encodes +infinity.
std::optional<int> k_star(const Spectrum& s, int N, const GeometryConstants& g);

/// Largest k0 in {1..floor(c0 N)} with sum_{j=k0}^{k} sigma_j <= (c0 N - k0 + 1) sigma_k0.
std::optional<int> k_double_star(const Spectrum& s, int k, int N, const GeometryConstants& g);

/// Same scan on an explicit non-increasing list of head eigenvalues.
std::optional<int> k_double_star_of(const Eigen::VectorXd& head, int N, double c0);

FixedPoint fixed_point_rn(const Spectrum& s, const FeatureSplit& split, int N,
                          const GeometryConstants& g);

/// sum_j min(sigma_j, R^2) <= c0 R^2 N over the head, with a relative slack
/// for rounding.
bool fixed_point_inequality_holds(const Eigen::VectorXd& head, double R, int N, double c0,
                                  double rel_slack = 1e-12);

double j1_threshold(const Spectrum& s, const FeatureSplit& split, int N,
                    const GeometryConstants& g);

HeadThresholdSplit split_j1_j2(const Spectrum& s, const FeatureSplit& split, int N,
                               const GeometryConstants& g);

/// weight_j = max(sigma_j, threshold)^{-1/2} on J, 0 on J^c.
Eigen::VectorXd thresholded_inverse_weights(const Spectrum& s, const FeatureSplit& split,
                                            int N, const GeometryConstants& g);

}  // namespace benign
