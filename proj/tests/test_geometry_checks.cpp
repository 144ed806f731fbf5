#include <doctest.h>

#include <cmath>
#include <vector>

#include "benign/errors.hpp"
#include "benign/geometry_checks.hpp"
#include "benign/sampler.hpp"
#include "oracles.hpp"

using namespace benign;

namespace {

Eigen::MatrixXd design(int N, int m, const Distribution& d, std::uint64_t seed, double level = 1.0) {
  return sample_diagonal_design(Eigen::VectorXd::Constant(m, level), N, d, seed);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected benign::Error");
  return ErrorCode::kInvalidArgument;
}

bool same(const CheckReport& a, const CheckReport& b) {
  return a.name == b.name && a.observed == b.observed && a.threshold == b.threshold &&
         a.pass == b.pass && a.n_trials == b.n_trials && a.passes == b.passes &&
         a.pass_rate == b.pass_rate && a.warnings == b.warnings;
}

CheckReport dm_trials(const Distribution& d, int N, int m, int trials, std::uint64_t seed) {
  return run_trials(trials, seed, 0.95, [&](std::uint64_t s) {
    return dm_embedding_check(design(N, m, d, s), m, 0.25);
  });
}

}  // namespace

TEST_CASE("Dvoretsky-Milman embedding") {
  const auto r = dm_trials(Distribution::gaussian(), 40, 4000, 100, 1);
  CHECK(r.n_trials == 100);
  CHECK(r.pass_rate >= 0.95);
  CHECK(r.pass);

  // N = 1: a single chi^2_m / m average
  const auto one = run_trials(100, 2, 0.95, [](std::uint64_t s) {
    return dm_embedding_check(design(1, 4000, Distribution::gaussian(), s), 4000, 0.5, 1.5);
  });
  CHECK(one.pass_rate == 1.0);

  // delta = 1 has a vacuous lower side and an upper side of 9
  const Eigen::MatrixXd x = design(30, 60, Distribution::gaussian(), 3);
  const auto vac = dm_embedding_check(x, 60.0, 1.0);
  CHECK(vac.threshold.at("lower") == 0.0);
  CHECK(vac.pass);

  // band edges come from (1 -+ 2 delta)^2
  const auto b = dm_embedding_check(x, 60.0, 0.1);
  CHECK(b.threshold.at("lower") == doctest::Approx(0.64));
  CHECK(b.threshold.at("upper") == doctest::Approx(1.44));

  auto ann = vac;
  annotate_dm_regime(ann, 30, 10.0, 1.0);
  CHECK(ann.warnings.size() == 1);
  CHECK(ann.observed.at("max_n_over_dvoretsky") == doctest::Approx(3.0));
}

TEST_CASE("upper embedding bound") {
  const auto zero = dm_upper_check(Eigen::MatrixXd::Zero(5, 10), Eigen::VectorXd::Ones(10));
  CHECK(zero.observed.at("max_s1") == 0.0);
  CHECK(zero.pass);
  CHECK(dm_upper_check(Eigen::MatrixXd::Zero(5, 10), Eigen::VectorXd::Ones(10), 0.0).pass);
  CHECK_FALSE(dm_upper_check(design(5, 10, Distribution::gaussian(), 1), Eigen::VectorXd::Ones(10), 0.0).pass);

  const auto r = run_trials(100, 4, 0.99, [](std::uint64_t s) {
    return dm_upper_check(design(50, 2000, Distribution::gaussian(), s), Eigen::VectorXd::Ones(2000));
  });
  CHECK(r.pass_rate >= 0.99);
}

TEST_CASE("isomorphy") {
  const auto big = run_trials(5, 5, 1.0, [](std::uint64_t s) {
    return isomorphy_check(design(10000, 1, Distribution::gaussian(), s), Eigen::VectorXd::Ones(1), 0.25,
                           0.95, 1.05);
  });
  CHECK(big.pass);

  // whitened spectrum tightens as N/k grows
  const auto wide = run_trials(20, 6, 1.0, [](std::uint64_t s) {
    return isomorphy_check(design(20000, 10, Distribution::gaussian(), s), Eigen::VectorXd::Ones(10), 0.25);
  });
  CHECK(wide.pass);
  CHECK(wide.observed.at("max_eigenvalue") < 1.1);

  // comfortable shape at N = 800
  for (const Distribution& d : {Distribution::gaussian(), Distribution::student_t(6.0)}) {
    const Eigen::VectorXd hv = Eigen::VectorXd::LinSpaced(10, 2.0, 0.5);
    const auto r = run_trials(100, 7, 0.95, [&](std::uint64_t s) {
      return isomorphy_check(sample_diagonal_design(hv, 800, d, s), hv, 0.25);
    });
    CHECK(r.pass_rate >= 0.95);
  }

  // synthetic X1 = sqrt(N) Sigma^{1/2} on the first k rows
  const int k = 4, N = 40;
  const Eigen::VectorXd hv = Eigen::Vector4d(4, 3, 2, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, k);
  for (int i = 0; i < k; ++i) x(i, i) = std::sqrt(N * hv[i]);
  const auto exact = isomorphy_check(x, hv, 0.25);
  CHECK(exact.observed.at("min_eigenvalue") == doctest::Approx(1.0));
  CHECK(exact.observed.at("max_eigenvalue") == doctest::Approx(1.0));
  CHECK(exact.pass);

  CHECK(code_of([&] { isomorphy_check(design(20, 6, Distribution::gaussian(), 1), Eigen::VectorXd::Ones(6), 0.25); }) ==
        ErrorCode::kRegimeViolation);
}

TEST_CASE("restricted cone") {
  const Eigen::VectorXd hv = Eigen::VectorXd::LinSpaced(20, 1.0, 0.01);
  const Eigen::MatrixXd x = sample_diagonal_design(hv, 400, Distribution::gaussian(), 8);

  const auto whole = restricted_cone_check(x, hv, 0.0, 200, 3);
  CHECK(whole.observed.at("sum_directions") == 200);
  CHECK(whole.observed.at("sum_rejections") == 0);
  CHECK(whole.pass);

  // only the top eigenvector is in the cone when R_N = sqrt(sigma_1)
  const auto top = restricted_cone_check(x, hv, 1.0, 5, 3, 0.5, 1.5, 50);
  CHECK(top.observed.at("sum_directions") >= 1);
  const double direct = x.col(0).squaredNorm() / 400.0;
  CHECK(top.observed.at("min_ratio") <= direct + 1e-12);
  CHECK(top.observed.at("max_ratio") >= direct - 1e-12);
  CHECK_FALSE(top.warnings.empty());

  // flat head with R_N = 2: empty cone
  const Eigen::VectorXd flat = Eigen::VectorXd::Ones(80);
  CHECK(code_of([&] {
          restricted_cone_check(sample_diagonal_design(flat, 80, Distribution::gaussian(), 1), flat, 2.0, 10, 1);
        }) == ErrorCode::kConeEmpty);

  // sampled directions really are in the cone: ratios computed on cone members only
  const auto mid = restricted_cone_check(x, hv, 0.5, 100, 4);
  CHECK(mid.pass);
}

TEST_CASE("norm concentration") {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(3, 4);
  rows.row(0) << 2, 0, 0, 0;
  rows.row(1) << 0, 2, 0, 0;
  rows.row(2) << 1, 1, 1, 1;
  const auto exact = norm_concentration_check(rows, 4.0, 0.1);
  CHECK(exact.observed.at("max_deviation") == doctest::Approx(0.0));
  CHECK(exact.pass);

  const auto g = run_trials(100, 9, 0.95, [](std::uint64_t s) {
    return norm_concentration_check(design(50, 4000, Distribution::gaussian(), s), 4000, 0.25);
  });
  CHECK(g.pass_rate >= 0.95);
  const auto t = run_trials(100, 9, 0.9, [](std::uint64_t s) {
    return norm_concentration_check(design(50, 4000, Distribution::student_t(6.0), s), 4000, 0.25);
  });
  CHECK(t.pass_rate >= 0.9);
}

TEST_CASE("trace bound") {
  // orthogonal rows of norm sqrt(m): Tr(D D^T) = N / m exactly
  const int N = 5, m = 30;
  Rng rng(10);
  const Eigen::MatrixXd q = oracle::random_orthogonal(m, rng);
  const Eigen::MatrixXd x = std::sqrt(static_cast<double>(m)) * q.topRows(N);
  const Eigen::VectorXd tv = Eigen::VectorXd::Ones(m);
  const auto r = trace_bound_check(x, tv, 1.0);
  CHECK(r.observed.at("max_trace_ddt") == doctest::Approx(double(N) / m));
  CHECK(r.pass);
  CHECK_FALSE(trace_bound_check(x, tv, 0.0).pass);
  const Eigen::MatrixXd d = noise_operator(x, tv);
  CHECK(d.squaredNorm() == doctest::Approx(double(N) / m));

  const auto mc = run_trials(100, 11, 0.95, [](std::uint64_t s) {
    return trace_bound_check(design(40, 2000, Distribution::gaussian(), s), Eigen::VectorXd::Ones(2000));
  });
  CHECK(mc.pass_rate >= 0.95);

  CHECK(code_of([] { trace_bound_check(Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Ones(3)); }) ==
        ErrorCode::kTailRankDeficient);
}

TEST_CASE("noise operator") {
  const int N = 100;
  const Eigen::MatrixXd d = Eigen::MatrixXd::Identity(N, N) / std::sqrt(double(N));
  const auto g = noise_operator_check(d, 1000, 1.0, Distribution::gaussian(), 12);
  CHECK(g.n_trials == 1000);
  CHECK(g.pass_rate >= 0.99);
  CHECK(g.observed.at("min_effective_rank") == doctest::Approx(double(N)));
  const auto t = noise_operator_check(d, 1000, 1.0, Distribution::student_t(6.0), 12);
  CHECK(t.pass_rate >= 0.9);
  CHECK(code_of([&] { noise_operator_check(Eigen::MatrixXd::Zero(3, 3), 10, 1.0, Distribution::gaussian(), 1); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("merge is associative and order independent") {
  std::vector<CheckReport> parts;
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto r = dm_embedding_check(design(20, 100 + 10 * static_cast<int>(s), Distribution::gaussian(), s),
                                100 + 10 * static_cast<double>(s), 0.1);
    if (s == 2) r.warnings.push_back("b");
    if (s == 4) r.warnings.push_back("a");
    parts.push_back(r);
  }
  const auto left = merge(merge(merge(parts[0], parts[1]), merge(parts[2], parts[3])), merge(parts[4], parts[5]));
  CheckReport right = parts[5];
  for (int i = 4; i >= 0; --i) right = merge(parts[static_cast<std::size_t>(i)], right);
  CHECK(same(left, right));
  CheckReport shuffled = parts[3];
  for (int i : {0, 5, 1, 4, 2}) shuffled = merge(shuffled, parts[static_cast<std::size_t>(i)]);
  CHECK(same(left, shuffled));
  CHECK(left.n_trials == 6);
  CHECK(left.warnings == std::vector<std::string>{"a", "b"});

  double lo = INFINITY;
  for (const auto& p : parts) lo = std::min(lo, p.observed.at("min_eigenvalue"));
  CHECK(left.observed.at("min_eigenvalue") == lo);

  CHECK_THROWS_AS(merge(parts[0], norm_concentration_check(design(3, 10, Distribution::gaussian(), 1), 10, 0.1)),
                  Error);
}

TEST_CASE("checks are deterministic in the seed") {
  const auto a = dm_trials(Distribution::student_t(6.0), 20, 500, 10, 42);
  const auto b = dm_trials(Distribution::student_t(6.0), 20, 500, 10, 42);
  CHECK(same(a, b));
  const Eigen::VectorXd hv = Eigen::VectorXd::LinSpaced(10, 1.0, 0.1);
  const Eigen::MatrixXd x = sample_diagonal_design(hv, 200, Distribution::gaussian(), 3);
  CHECK(same(restricted_cone_check(x, hv, 0.5, 50, 7), restricted_cone_check(x, hv, 0.5, 50, 7)));
  CHECK(check_report_to_json(a) == check_report_to_json(b));
}

TEST_CASE("heavy-tailed pass rates track the Gaussian ones") {
  const auto g = dm_trials(Distribution::gaussian(), 40, 4000, 100, 13);
  const auto t = dm_trials(Distribution::student_t(6.0), 40, 4000, 100, 13);
  CHECK(std::abs(g.pass_rate - t.pass_rate) <= 0.1);

  auto nc = [](const Distribution& d) {
    return run_trials(100, 14, 0.9, [&](std::uint64_t s) {
      return norm_concentration_check(design(50, 4000, d, s), 4000, 0.25);
    });
  };
  CHECK(std::abs(nc(Distribution::gaussian()).pass_rate - nc(Distribution::student_t(6.0)).pass_rate) <= 0.1);

  auto tb = [](const Distribution& d) {
    return run_trials(50, 15, 0.9, [&](std::uint64_t s) {
      return trace_bound_check(design(40, 2000, d, s), Eigen::VectorXd::Ones(2000));
    });
  };
  CHECK(std::abs(tb(Distribution::gaussian()).pass_rate - tb(Distribution::student_t(6.0)).pass_rate) <= 0.1);
}
