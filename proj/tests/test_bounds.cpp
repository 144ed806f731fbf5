#include <doctest.h>

#include <cmath>
#include <vector>

#include "benign/bounds.hpp"
#include "benign/errors.hpp"
#include "benign/spectrum_io.hpp"
#include "oracles.hpp"

using namespace benign;

namespace {

ModelSpec model(std::vector<double> sigmas, int N, std::vector<double> beta, double sigma_xi) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sigmas.size()));
  for (std::size_t i = 0; i < beta.size(); ++i) b[static_cast<Eigen::Index>(i)] = beta[i];
  return ModelSpec{Spectrum(sigmas), b, sigma_xi, N, Distribution::gaussian(), Distribution::gaussian()};
}

std::vector<double> spike_values(int p = 1000, double flat = 0.01) {
  std::vector<double> v(static_cast<std::size_t>(p), flat);
  v[0] = v[1] = 1.0;
  return v;
}

ModelSpec spike_example() { return model(spike_values(), 50, {1.0}, 1.0); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected benign::Error");
  return ErrorCode::kInvalidArgument;
}

ModelSpec spike_family(int N, double tail_trace, int p) {
  const SpectrumFamily fam({{"family", "spike_plus_flat"}, {"k0", 2}, {"spike", 1.0},
                            {"tail_trace", tail_trace}, {"p", p}});
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  b[0] = b[1] = 1.0;
  return ModelSpec{fam.make(N), b, 0.5, N, Distribution::gaussian(), Distribution::gaussian()};
}

}  // namespace

TEST_CASE("r* on the spike example") {
  const GeometryConstants g;
  const auto r = rate_r_star(spike_example(), g);
  CHECK(r.k_star == 2);
  CHECK(r.terms[0] == doctest::Approx(0.2));
  CHECK(r.terms[1] == doctest::Approx(std::sqrt(50 * 998 * 1e-4) / 9.98));
  CHECK(r.terms[1] == doctest::Approx(0.22383074).epsilon(1e-7));
  CHECK(r.terms[2] == 0.0);
  CHECK(r.terms[3] == doctest::Approx(0.1996));
  CHECK(r.value == r.terms[1]);
}

TEST_CASE("r* trivial cases") {
  const GeometryConstants g;
  auto zero = spike_example();
  zero.beta_star.setZero();
  zero.sigma_xi = 0.0;
  CHECK(rate_r_star(zero, g).value == 0.0);

  const auto iso = model(std::vector<double>(400, 1.0), 50, {}, 0.7);
  const auto r = rate_r_star(iso, g);
  CHECK(r.k_star == 0);
  CHECK(r.value == doctest::Approx(0.7 * std::sqrt(50.0 / 400.0)));

  const auto none = model({1, 0.5, 0.25}, 100, {1}, 1.0);
  CHECK(code_of([&] { rate_r_star(none, g); }) == ErrorCode::kNoBenignSplit);
  CHECK(code_of([&] { r_star_terms_at(iso, 400); }) == ErrorCode::kBadSplit);
}

TEST_CASE("square term") {
  const GeometryConstants g;
  const auto m = spike_example();
  const auto split = FeatureSplit::contiguous(2, 1000);
  const auto sq = square_term(m, split, g);
  CHECK(sq.square_case == SquareCase::kII);
  REQUIRE(sq.terms.size() == 4);
  CHECK(sq.terms[0] == doctest::Approx(0.2));
  CHECK(sq.terms[1] == 0.0);
  CHECK(sq.terms[2] == 0.0);
  CHECK(sq.terms[3] == doctest::Approx(0.1996));
  CHECK(sq.value == doctest::Approx(0.2));
  CHECK(sq.full_value == doctest::Approx(0.22383074).epsilon(1e-7));
  CHECK(sq.overfit_noise == doctest::Approx(0.22383074).epsilon(1e-7));
  CHECK(sq.deviation_exponent == doctest::Approx(2.0));
  CHECK(sq.violations.empty());

  auto nob = m;
  nob.beta_star.setZero();
  const auto s0 = square_term(nob, split, g);
  CHECK(s0.terms[2] == 0.0);
  CHECK(s0.terms[3] == 0.0);
  CHECK(s0.terms[0] > 0.0);

  // case i: sigma_1 N < kappa_dm Tr(tail)
  const auto small = model(spike_values(), 5, {1.0, 0.0, 0.5}, 1.0);
  const auto si = square_term(small, split, g);
  CHECK(si.square_case == SquareCase::kI);
  const double tr = 9.98;
  CHECK(si.terms[0] == doctest::Approx(std::sqrt(2.0 / tr)));
  CHECK(si.terms[1] == doctest::Approx(std::sqrt(5.0 / tr) * std::sqrt(0.01 * 0.25)));
  CHECK(si.terms[2] == doctest::Approx(1.0 * std::sqrt(tr / 5.0)));

  const auto forced = square_term(m, split, g, SquareCase::kI);
  CHECK(forced.square_case == SquareCase::kI);
  CHECK(forced.terms.size() == 3);

  const auto all = model(std::vector<double>{1.0}, 5, {}, 1.0);
  CHECK(code_of([&] { square_term(all, FeatureSplit::contiguous(1, 1), g); }) == ErrorCode::kTailEmpty);
}

TEST_CASE("square term matches r* at k* when J2 is empty") {
  const GeometryConstants g;
  Rng rng(21);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 40; ++t) {
    // a few spikes over a low tail, so the head clears the J1 threshold
    std::vector<double> s(300);
    std::uniform_real_distribution<double> head(0.5, 5.0), tail(-3.0, -2.0);
    const int k0 = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int j = 0; j < 300; ++j) s[static_cast<std::size_t>(j)] = j < k0 ? head(rng) : std::pow(10.0, tail(rng));
    std::sort(s.rbegin(), s.rend());
    const auto m = model(s, 20, {1.0, -0.5, 0.25, 2.0}, 0.8);
    const auto k = k_star(m.spectrum, 20, g);
    if (!k) continue;
    const auto split = FeatureSplit::contiguous(*k, 300);
    const auto sq = square_term(m, split, g, SquareCase::kII);
    if (!sq.thresholds.j2.empty()) continue;
    const auto r = r_star_terms_at(m, *k);
    CHECK(sq.terms[0] == doctest::Approx(r[0]).epsilon(1e-12));
    CHECK(sq.terms[2] == doctest::Approx(r[2]).epsilon(1e-12));
    CHECK(sq.terms[3] == doctest::Approx(r[3]).epsilon(1e-12));
    CHECK(sq.overfit_noise == doctest::Approx(r[1]).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("term domination where case ii applies") {
  const GeometryConstants g;
  Rng rng(22);
  int checked = 0;
  while (checked < 50) {
    const int p = 200;
    std::vector<double> s(p);
    std::uniform_real_distribution<double> u(-4.0, 0.0);
    for (auto& v : s) v = std::pow(10.0, u(rng));
    std::sort(s.rbegin(), s.rend());
    const int N = std::uniform_int_distribution<int>(5, 40)(rng);
    const int k = std::uniform_int_distribution<int>(1, 30)(rng);
    std::vector<double> beta(static_cast<std::size_t>(k));
    for (auto& b : beta) b = std::normal_distribution<double>()(rng);
    const auto m = model(s, N, beta, 1.0);
    const auto split = FeatureSplit::contiguous(k, p);
    const auto sq = square_term(m, split, g);
    if (sq.square_case != SquareCase::kII) continue;
    CHECK(sq.terms[0] + sq.terms[1] <= 2.0 * std::sqrt(double(k) / N) * (1 + 1e-12));
    double plain = 0.0, thres = 0.0;
    for (int j = 1; j <= k; ++j) {
      const double b = m.beta_star[j - 1];
      plain += b * b / s[static_cast<std::size_t>(j - 1)];
      thres += b * b / std::max(s[static_cast<std::size_t>(j - 1)], sq.thresholds.threshold);
    }
    CHECK(std::sqrt(thres) <= std::sqrt(plain) * (1 + 1e-12));
    ++checked;
  }
}

TEST_CASE("price of overfitting") {
  auto m = spike_example();
  const auto split = FeatureSplit::contiguous(2, 1000);
  CHECK(price_of_overfitting(m, split) == doctest::Approx(0.22383074).epsilon(1e-7));
  CHECK(price_of_overfitting(m, split, 17.0) == doctest::Approx(17 * 0.22383074).epsilon(1e-7));
  m.sigma_xi = 0.0;
  CHECK(price_of_overfitting(m, split) == 0.0);
  const auto iso = model(std::vector<double>(101, 1.0), 30, {}, 2.0);
  CHECK(price_of_overfitting(iso, FeatureSplit::contiguous(1, 101)) == doctest::Approx(2.0 * std::sqrt(0.3)));
}

TEST_CASE("lower bound") {
  GeometryConstants g;
  const auto m = spike_example();
  const double lb = lower_bound_value(m, g, 1.0, 24.0);
  CHECK(lb == doctest::Approx(0.22383074 * 0.22383074 / 576).epsilon(1e-6));
  CHECK(lb == doctest::Approx(8.698e-5).epsilon(1e-3));
  const double r = rate_r_star(m, g).value;
  CHECK(lb <= r * r / 576);
  CHECK(lower_bound_scale_admissible(g, 24.0));
  CHECK_FALSE(lower_bound_scale_admissible(g, 10.0));

  auto zero = m;
  zero.beta_star.setZero();
  zero.sigma_xi = 0.0;
  CHECK(lower_bound_value(zero, g, 1.0) == 0.0);

  // k* = 2 with N = 8: 4 k* >= N
  const auto tight = model(spike_values(), 8, {1.0}, 1.0);
  CHECK(code_of([&] { lower_bound_value(tight, g, 1.0); }) == ErrorCode::kRegimeViolation);

  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(500);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    for (auto& v : s) v = std::pow(10.0, u(rng));
    std::sort(s.rbegin(), s.rend());
    const auto mm = model(s, 10, {0.3, 1.0, -2.0}, 0.5);
    const auto k = k_star(mm.spectrum, 10, g);
    if (!k || 4 * *k >= 10) continue;
    const double c = 1.0 / 576;
    const double v = lower_bound_value(mm, g, c, 24.0);
    const double rs = rate_r_star(mm, g).value;
    CHECK(v <= c / 576 * rs * rs * (1 + 1e-12));
  }
}

TEST_CASE("scale covariance") {
  const GeometryConstants g;
  const auto m = model(spike_values(), 60, {1.0, -0.5, 0.3, 0.0, 2.0}, 0.7);
  auto scaled = m;
  const double t = 3.5;
  scaled.beta_star *= t;
  scaled.sigma_xi *= t;
  const auto split = FeatureSplit::contiguous(2, 1000);
  CHECK(rate_r_star(scaled, g).value == doctest::Approx(t * rate_r_star(m, g).value));
  CHECK(square_term(scaled, split, g).value == doctest::Approx(t * square_term(m, split, g).value));
  CHECK(price_of_overfitting(scaled, split) == doctest::Approx(t * price_of_overfitting(m, split)));
  CHECK(std::sqrt(lower_bound_value(scaled, g, 1.0)) ==
        doctest::Approx(t * std::sqrt(lower_bound_value(m, g, 1.0))));
}

TEST_CASE("baselines") {
  const GeometryConstants g;
  const auto m = spike_example();
  const auto b = baseline_rates(m, g);
  CHECK(b.bllt == doctest::Approx(1.123466).epsilon(1e-6));
  CHECK(b.tsigler == doctest::Approx(0.2 + 0.22383074 + 0.1996).epsilon(1e-7));
  CHECK(b.tsigler >= rate_r_star(m, g).value);
  CHECK(b.bllt >= rate_r_star(m, g).terms[3]);

  auto zero = m;
  zero.beta_star.setZero();
  zero.sigma_xi = 0.0;
  const auto z = baseline_rates(zero, g);
  CHECK(z.bllt == 0.0);
  CHECK(z.tsigler == 0.0);
}

TEST_CASE("benign-overfitting classifier") {
  const GeometryConstants g;
  std::vector<ModelSpec> iso;
  for (int N : {50, 100, 200, 400}) iso.push_back(model(std::vector<double>(2 * N, 1.0), N, {}, 1.0));
  auto v = bo_classify(iso, g);
  CHECK_FALSE(v.benign);
  CHECK_FALSE(v.instances[0].k_star.has_value());

  std::vector<ModelSpec> spike;
  for (int N : {50, 100, 200, 400}) spike.push_back(spike_family(N, 20.0, N * N));
  v = bo_classify(spike, g);
  CHECK(v.benign);
  CHECK(v.side_condition_everywhere);
  for (bool q : v.vanishing) CHECK(q);

  // signal on the tail with ||S_tail^{1/2} beta_tail|| = 1 at every N
  std::vector<ModelSpec> heavy_tail_signal;
  for (auto m : spike) {
    m.beta_star.setZero();
    m.beta_star[2] = 1.0 / std::sqrt(m.spectrum.sigma(3));
    heavy_tail_signal.push_back(m);
  }
  v = bo_classify(heavy_tail_signal, g);
  CHECK_FALSE(v.benign);
  CHECK_FALSE(v.vanishing[2]);

  // joint rotation of the eigenbasis leaves the verdict unchanged
  std::vector<ModelSpec> small, rotated;
  for (int N : {10, 20, 30}) small.push_back(spike_family(N, 5.0, N * N));
  for (auto m : small) {
    m.spectrum = m.spectrum.with_random_rotation(5);
    rotated.push_back(m);
  }
  const auto plain_v = bo_classify(small, g);
  const auto rot_v = bo_classify(rotated, g);
  CHECK(plain_v.benign);
  CHECK(rot_v.benign == plain_v.benign);
  CHECK(rot_v.reason == plain_v.reason);

  CHECK(code_of([&] { bo_classify({spike[0], spike[1]}, g); }) == ErrorCode::kConfigError);
  CHECK(code_of([&] { bo_classify({spike[1], spike[0], spike[2]}, g); }) == ErrorCode::kConfigError);
  CHECK(bo_verdict_to_json(v).at("benign") == false);
}

TEST_CASE("three-block example family") {
  const ThreeBlockParams q{4, 400, 10000, 1.0, 0.5, 1.25e-3, 1.0};
  const auto rep = example_family(q, 100);
  CHECK(rep.violations.empty());
  CHECK(rep.spectrum.dim() == 10000);
  CHECK(rep.ratios.at("k0_over_N") == doctest::Approx(0.04));

  const auto bad = example_family(q, 4);
  CHECK(std::find(bad.violations.begin(), bad.violations.end(), "k0 >= N") != bad.violations.end());
  const auto big = example_family(q, 500);
  CHECK(std::find(big.violations.begin(), big.violations.end(), "N >= k") != big.violations.end());
}

TEST_CASE("rate report") {
  const GeometryConstants g;
  const auto r = rate_report(spike_example(), g);
  CHECK(r.r_star.k_star == 2);
  CHECK(r.overfit_price == doctest::Approx(0.22383074).epsilon(1e-7));
  REQUIRE(r.lower_bound.has_value());
  CHECK(*r.lower_bound == doctest::Approx(8.698e-5).epsilon(1e-3));
  CHECK(r.lower_bound_scale_ok);
  const auto j = rate_report_to_json(r);
  CHECK(j.at("k_star") == 2);
  CHECK(j.at("r_star").get<double>() == doctest::Approx(0.22383074).epsilon(1e-7));

  const auto tight = rate_report(model(spike_values(), 8, {1.0}, 1.0), g);
  CHECK_FALSE(tight.lower_bound.has_value());
  CHECK_FALSE(tight.notes.empty());
}
