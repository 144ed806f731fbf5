#pragma once

// Seeded generation of the linear model y = X beta* + xi with rows
// X_i = Sigma^{1/2} Z_i, where Z_i has i.i.d. standardized coordinates.

#include <cstdint>

#include <Eigen/Dense>
#include <json.hpp>

#include "benign/random.hpp"
#include "benign/spectrum.hpp"

namespace benign {

/// Coordinate law of Z (design) or of xi / sigma_xi (noise). Every family is
/// symmetric with mean 0 and variance 1.
struct Distribution {
  enum class Kind { kGaussian, kStudentT, kSymmetrizedWeibull };
  Kind kind = Kind::kGaussian;
  double dof = 0.0;    // Student-t degrees of freedom, must exceed 4
  double shape = 0.0;  // Weibull shape

  static Distribution gaussian() { return {}; }
  static Distribution student_t(double dof) { return {Kind::kStudentT, dof, 0.0}; }
  static Distribution symmetrized_weibull(double shape) {
    return {Kind::kSymmetrizedWeibull, 0.0, shape};
  }

  /// Throws BadMoment for Student-t with dof <= 4.
  void validate() const;
  bool operator==(const Distribution&) const = default;
};

/// Draws standardized variates from a Distribution.
class StandardizedSampler {
 public:
  explicit StandardizedSampler(const Distribution& d);
  double operator()(Rng& rng);

 private:
  Distribution dist_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::student_t_distribution<double> student_{5.0};
  std::weibull_distribution<double> weibull_{1.0, 1.0};
  std::bernoulli_distribution coin_{0.5};
  double scale_ = 1.0;
};

struct HeavyTailSpec {
  double L = 1.0;
  double alpha = 2.0;
  double R = 1.0;
  double kappa_noise = 1.0;
  double r_moment = 5.0;

  void validate() const;
};

struct ModelSpec {
  Spectrum spectrum;
  Eigen::VectorXd beta_star;  // eigenbasis coordinates
  double sigma_xi = 1.0;
  int N = 1;
  Distribution design;
  Distribution noise;

  int p() const { return spectrum.dim(); }
  void validate() const;

  /// beta* in the ambient coordinates (U beta* when the spectrum has a basis).
  Eigen::VectorXd beta_ambient() const;
};

struct DataSample {
  Eigen::MatrixXd X;
  Eigen::VectorXd xi;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;
};

/// N x len(values) matrix with entries sqrt(values_j) * Z_ij; deterministic in seed.
Eigen::MatrixXd sample_diagonal_design(const Eigen::VectorXd& values, int N, const Distribution& d,
                                       std::uint64_t seed);

/// N x p design; deterministic in seed. Rows are generated in the eigenbasis
/// and rotated by U^T only when the spectrum carries a basis.
Eigen::MatrixXd sample_design(const ModelSpec& m, std::uint64_t seed);
Eigen::VectorXd sample_noise(const ModelSpec& m, std::uint64_t seed);

/// Design and noise use independent streams derived from the sample seed.
DataSample make_sample(const ModelSpec& m, std::uint64_t seed);

nlohmann::json distribution_to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const ModelSpec& m);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace benign
