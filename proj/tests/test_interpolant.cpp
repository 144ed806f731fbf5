#include <doctest.h>

#include <cmath>
#include <vector>

#include "benign/errors.hpp"
#include "benign/interpolant.hpp"
#include "benign/linalg.hpp"
#include "benign/sampler.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace benign;
using testing_support::random_instance;

TEST_CASE("min-norm interpolant examples") {
  Eigen::MatrixXd x(1, 2);
  x << 1, 1;
  auto s = min_norm_interpolant(x, Eigen::VectorXd::Constant(1, 2.0));
  CHECK(s.beta.isApprox(Eigen::Vector2d(1, 1)));
  CHECK(s.interpolates);

  s = min_norm_interpolant(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(3, 4));
  CHECK(s.beta.isApprox(Eigen::Vector2d(3, 4)));

  Eigen::MatrixXd e1(1, 3);
  e1 << 1, 0, 0;
  s = min_norm_interpolant(e1, Eigen::VectorXd::Constant(1, 5.0));
  CHECK(s.beta.isApprox(Eigen::Vector3d(5, 0, 0)));

  Rng rng(1);
  const Eigen::MatrixXd g = gaussian_matrix(5, 20, rng);
  s = min_norm_interpolant(g, Eigen::VectorXd::Zero(5));
  CHECK(s.beta.isZero());
  CHECK(s.interpolates);
  CHECK(s.relative_residual == 0.0);
}

TEST_CASE("rank-deficient design is flagged, not thrown") {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 2, 4, 6;
  const auto s = min_norm_interpolant(x, Eigen::Vector2d(1, 5));
  CHECK(s.rank_deficient);
  CHECK(s.rank == 1);
  CHECK_FALSE(s.interpolates);
  // least-squares min-norm: agrees with the SVD pseudoinverse
  const Eigen::VectorXd ref = x.completeOrthogonalDecomposition().solve(Eigen::Vector2d(1, 5));
  CHECK((s.beta - ref).norm() < 1e-10);
}

TEST_CASE("min-norm interpolant matches the normal-equation oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = random_instance(seed);
    const auto s = min_norm_interpolant(inst.data.X, inst.data.y);
    const Eigen::VectorXd ref = oracle::min_norm(inst.data.X, inst.data.y);
    CHECK((s.beta - ref).norm() <= 1e-8 * ref.norm());
    CHECK(s.interpolates);
    CHECK((inst.data.X * s.beta - inst.data.y).norm() <= 1e-8 * inst.data.y.norm());
  }
}

TEST_CASE("pseudoinverse paths agree") {
  Rng rng(2);
  Eigen::MatrixXd x = gaussian_matrix(20, 80, rng);
  const PseudoInverse well(x);
  CHECK(well.used_gram_path());
  x.col(0) *= 1e5;  // pushes the condition number past the Gram limit
  const PseudoInverse ill(x);
  CHECK_FALSE(ill.used_gram_path());
  const Eigen::MatrixXd ref = x.completeOrthogonalDecomposition().pseudoInverse();
  CHECK((ill.matrix() - ref).norm() <= 1e-8 * ref.norm());
  const Eigen::VectorXd y = gaussian_vector(20, rng);
  CHECK((x * ill.solve(y) - y).norm() <= 1e-8 * y.norm());
  CHECK(singular_value_cutoff(20, 80, 2.0) == doctest::Approx(80 * 2.0 * 2.220446049250313e-16));
}

TEST_CASE("min-norm optimality against null-space directions") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto inst = random_instance(seed);
    const auto s = min_norm_interpolant(inst.data.X, inst.data.y);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(inst.data.X);
    const Eigen::MatrixXd ker = lu.kernel();
    Rng rng(seed);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd z = ker * gaussian_vector(ker.cols(), rng);
      CHECK((s.beta + z).norm() >= s.beta.norm() - 1e-10);
    }
  }
}

TEST_CASE("ridge") {
  CHECK(ridge(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(2, 2), 1.0).isApprox(Eigen::Vector2d(1, 1)));

  Rng rng(3);
  const Eigen::MatrixXd x = gaussian_matrix(10, 40, rng);
  const Eigen::VectorXd y = gaussian_vector(10, rng);
  const Eigen::VectorXd b0 = ridge(x, y, 0.0);
  CHECK((b0 - oracle::min_norm(x, y)).norm() < 1e-10 * b0.norm());
  const double s1 = PseudoInverse(x).singular_values()[0];
  CHECK(ridge(x, y, 1e12 * s1 * s1).norm() <= 1e-6 * b0.norm());

  // dual (N < p) against a direct primal solve
  const double lambda = 0.7;
  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += lambda;
  const Eigen::VectorXd primal = a.ldlt().solve(x.transpose() * y);
  CHECK((ridge(x, y, lambda) - primal).norm() < 1e-10 * primal.norm());

  // primal path (N > p)
  const Eigen::MatrixXd tall = gaussian_matrix(40, 10, rng);
  const Eigen::VectorXd yt = gaussian_vector(40, rng);
  Eigen::MatrixXd k = tall * tall.transpose();
  k.diagonal().array() += lambda;
  const Eigen::VectorXd dual = tall.transpose() * k.ldlt().solve(yt);
  CHECK((ridge(tall, yt, lambda) - dual).norm() < 1e-10 * dual.norm());

  // continuity in lambda
  CHECK((ridge(x, y, 1e-10) - b0).norm() < 1e-6 * b0.norm());
  CHECK_THROWS_AS(ridge(x, y, -1.0), Error);
}

TEST_CASE("decompose") {
  Rng rng(4);
  const Eigen::MatrixXd x = gaussian_matrix(8, 40, rng);
  const FeatureSplit split = FeatureSplit::contiguous(3, 40);

  auto r = decompose(x, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(40), split, std::nullopt);
  CHECK(r.beta_head.isZero());
  CHECK(r.beta_tail.isZero());
  CHECK(r.diagnostics.at("identity_residual") == 0.0);

  const Eigen::VectorXd y = gaussian_vector(8, rng);
  const Eigen::VectorXd bh = min_norm_interpolant(x, y).beta;
  r = decompose(x, y, bh, FeatureSplit::contiguous(0, 40), std::nullopt);
  CHECK(r.beta_head.isZero());
  CHECK(r.beta_tail == bh);

  r = decompose(x, y, bh, split, std::nullopt);
  CHECK(r.beta_tail.head(3).isZero());
  CHECK(r.beta_head.tail(37).isZero());
  CHECK(r.diagnostics.at("identity_relative_error") <= 1e-8);

  r = decompose(x, y, bh, split, std::nullopt, false);
  CHECK(r.diagnostics.count("identity_relative_error") == 0);
  CHECK(r.diagnostics.at("residual_relative") < 1e-10);

  // tail with fewer columns than rows
  try {
    decompose(x, y, bh, FeatureSplit::contiguous(35, 40), std::nullopt);
    FAIL("expected TailRankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTailRankDeficient);
  }
  CHECK_NOTHROW(decompose(x, y, bh, FeatureSplit::contiguous(35, 40), std::nullopt, false));

  const auto j = estimator_result_to_json(r, 10);
  CHECK(j.at("beta_hat").is_object());
  CHECK(j.at("residual").is_array());
}

TEST_CASE("head argmin check") {
  Rng rng(5);
  const Eigen::MatrixXd x = gaussian_matrix(10, 60, rng);
  const Eigen::VectorXd y = gaussian_vector(10, rng);
  const FeatureSplit split = FeatureSplit::contiguous(4, 60);
  const auto r = decompose(x, y, min_norm_interpolant(x, y).beta, split, std::nullopt);

  const auto rep = head_argmin_check(x, y, split, r, std::nullopt, 100, 17);
  CHECK(rep.pass);
  CHECK(rep.n_violations == 0);
  CHECK(rep.min_perturbed_objective >= rep.objective_at_head);
  CHECK(rep.closed_form_relative_error <= 1e-8);

  const auto zero = head_argmin_check(x, y, split, r, std::nullopt, 5, 17, 0.0);
  CHECK(zero.min_perturbed_objective == doctest::Approx(zero.objective_at_head));

  auto tampered = r;
  tampered.beta_head[0] += 0.05;
  try {
    head_argmin_check(x, y, split, tampered, std::nullopt, 100, 17);
    FAIL("expected PropositionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPropositionViolation);
  }
}

TEST_CASE("decomposition identity and head argmin on random instances") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const auto inst = random_instance(seed, seed % 3 == 0);
    const auto& basis = inst.model.spectrum.basis();
    const auto s = min_norm_interpolant(inst.data.X, inst.data.y);
    const auto r = decompose(inst.data.X, inst.data.y, s.beta, inst.split, basis);
    CHECK(r.diagnostics.at("identity_residual") <= 1e-8 * s.beta.norm());
    CHECK((r.beta_head + r.beta_tail - s.beta).norm() <= 1e-12 * s.beta.norm());
    CHECK(head_argmin_check(inst.data.X, inst.data.y, inst.split, r, basis, 20, seed).pass);
  }
}

TEST_CASE("excess risk") {
  const Spectrum two(std::vector<double>{4, 1});
  const Eigen::Vector2d bs(0.3, -0.2);
  auto r = excess_risk(two, bs, bs, FeatureSplit::contiguous(1, 2));
  CHECK(r.total == 0.0);
  r = excess_risk(two, bs + Eigen::Vector2d(1, 1), bs, FeatureSplit::contiguous(1, 2));
  CHECK(r.total == doctest::Approx(5.0));
  CHECK(r.head == doctest::Approx(4.0));
  CHECK(r.tail == doctest::Approx(1.0));

  const Spectrum iso(std::vector<double>(3, 1.0));
  r = excess_risk(iso, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d::Zero(), FeatureSplit::contiguous(1, 3));
  CHECK(r.total == doctest::Approx(1.0));
  CHECK(r.head == doctest::Approx(1.0));
}

TEST_CASE("Pythagoras over random splits") {
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    const auto inst = random_instance(seed, seed % 2 == 0);
    const auto s = min_norm_interpolant(inst.data.X, inst.data.y);
    const auto r = excess_risk(inst.model.spectrum, s.beta, inst.model.beta_ambient(), inst.split);
    CHECK(std::abs(r.total - r.head - r.tail) <= 1e-10 * r.total);
  }
}

TEST_CASE("rotation invariance of the excess risk") {
  Rng rng(6);
  const int N = 15, p = 70;
  std::vector<double> sv(p);
  for (int j = 0; j < p; ++j) sv[static_cast<std::size_t>(j)] = 1.0 / (1 + j);
  const Spectrum plain(sv);
  const Spectrum rot = plain.with_random_rotation(8);
  const Eigen::MatrixXd& u = *rot.basis();
  const Eigen::VectorXd beta = gaussian_vector(p, rng);
  const ModelSpec m{plain, beta, 0.3, N, Distribution::gaussian(), Distribution::gaussian()};
  const DataSample d = make_sample(m, 1);
  // same data expressed in the rotated coordinates: X U^T, U beta
  const Eigen::MatrixXd xr = d.X * u.transpose();
  const Eigen::VectorXd br = u * beta;
  const auto split = FeatureSplit::contiguous(4, p);
  const double a = excess_risk(plain, min_norm_interpolant(d.X, d.y).beta, beta, split).total;
  const double b = excess_risk(rot, min_norm_interpolant(xr, d.y).beta, br, split).total;
  CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, a));
}

TEST_CASE("bias and variance") {
  Rng rng(7);
  const Spectrum s(std::vector<double>{2, 1, 0.5, 0.25});
  const Eigen::MatrixXd x = gaussian_matrix(4, 4, rng);
  const Eigen::Vector4d beta(1, -1, 0.5, 2);
  auto bv = bias_variance_terms(x, s, beta, 0.0);
  CHECK(bv.bias < 1e-20);
  CHECK(bv.variance == 0.0);

  Eigen::MatrixXd singular(2, 4);
  singular << 1, 0, 0, 0, 2, 0, 0, 0;
  CHECK_THROWS_AS(bias_variance_terms(singular, s, beta, 1.0), Error);

  // closed form against explicit matrices
  const Eigen::MatrixXd xw = gaussian_matrix(3, 4, rng);
  bv = bias_variance_terms(xw, s, beta, 0.8);
  const Eigen::MatrixXd pinv = xw.transpose() * (xw * xw.transpose()).inverse();
  const Eigen::VectorXd sq = s.values().cwiseSqrt();
  const Eigen::VectorXd e = sq.asDiagonal() * ((pinv * xw - Eigen::MatrixXd::Identity(4, 4)) * beta);
  CHECK(bv.bias == doctest::Approx(e.squaredNorm()).epsilon(1e-10));
  CHECK(bv.variance == doctest::Approx(0.64 * (sq.asDiagonal() * pinv).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("bias + variance is the conditional mean risk (Monte Carlo)") {
  std::vector<double> sv(300, 0.01);
  sv[0] = sv[1] = 1.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(300);
  beta[0] = 1.0;
  const ModelSpec m{Spectrum(sv), beta, 1.0, 30, Distribution::gaussian(), Distribution::gaussian()};
  const Eigen::MatrixXd x = sample_design(m, 3);
  const auto bv = bias_variance_terms(x, m.spectrum, beta, 1.0);
  const PseudoInverse pinv(x);
  const auto split = FeatureSplit::contiguous(2, 300);
  double acc = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const Eigen::VectorXd y = x * beta + sample_noise(m, derive_seed(99, t));
    acc += excess_risk(m.spectrum, pinv.solve(y), beta, split).total;
  }
  CHECK(acc / 2000 == doctest::Approx(bv.bias + bv.variance).epsilon(0.05));
}
