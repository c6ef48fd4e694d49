#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "wtp/inference.hpp"
#include "wtp/simulation.hpp"

using namespace wtp;

namespace {

std::vector<double> normals(std::size_t n, double mu, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(mu, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

DcDataset logistic_dc(double a, double b, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<Money> grid{0, 5, 10, 15, 20, 25, 30};
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<DcRecord> r(n);
  for (auto& x : r) {
    x.price_cue = grid[pick(rng)];
    x.accept = u(rng) < oracle::logistic(a + b * x.price_cue);
  }
  return DcDataset(r, grid);
}

BootstrapSettings settings(std::size_t reps, std::uint64_t seed) {
  BootstrapSettings s;
  s.reps = reps;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("Welch t") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  const auto t = welch_t_test(a, b);
  CHECK(t.kind == TestKind::kWelchT);
  CHECK(std::abs(t.statistic - oracle::welch_t(a, b)) <= 1e-9);
  CHECK(std::abs(t.statistic + 1.0) <= 1e-12);  // -1 / sqrt(2.5/5 + 2.5/5)
  CHECK(*t.df == doctest::Approx(8.0));
  const auto same = welch_t_test(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));
  const std::vector<double> flat{3, 3, 3};
  CHECK_THROWS_WITH_AS(welch_t_test(flat, flat), doctest::Contains("ZERO_VARIANCE"), WtpError);
}

TEST_CASE("Welch statistic and df on fuzzed pairs") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n(2, 60);
  for (int i = 0; i < 100; ++i) {
    const auto a = normals(n(rng), 10, 3, 2 * i), b = normals(n(rng), 12, 7, 2 * i + 1);
    const auto t = welch_t_test(a, b);
    CHECK(std::abs(t.statistic - oracle::welch_t(a, b)) <= 1e-9 * std::max(1.0, std::abs(t.statistic)));
    const double va = oracle::var(a) / a.size(), vb = oracle::var(b) / b.size();
    const double df = (va + vb) * (va + vb) /
                      (va * va / (a.size() - 1.0) + vb * vb / (b.size() - 1.0));
    CHECK(std::abs(*t.df - df) <= 1e-9 * df);
    CHECK(t.p_value >= 0.0);
    CHECK(t.p_value <= 1.0);
  }
}

TEST_CASE("Welch power at a mean gap of 3") {
  int rejections = 0;
  for (int r = 0; r < 200; ++r) {
    rejections += welch_t_test(normals(270, 50, 8, 10 * r), normals(277, 53, 8, 10 * r + 1)).p_value < 0.05;
  }
  CHECK(rejections > 180);
}

TEST_CASE("KS distance") {
  const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> tie(0, 20);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(30 + i), y(17 + 2 * i);
    for (auto& v : x) v = tie(rng);
    for (auto& v : y) v = tie(rng) + 1;
    CHECK(ks_two_sample(x, y).statistic == doctest::Approx(oracle::ks_distance(x, y)).epsilon(1e-14));
  }
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.049).epsilon(0.02));
}

TEST_CASE("KS p-value is invariant to row order") {
  auto a = normals(100, 0, 1, 3), b = normals(80, 0.3, 1, 4);
  const auto t = ks_two_sample(a, b);
  std::reverse(a.begin(), a.end());
  CHECK(ks_two_sample(a, b).p_value == t.p_value);
}

TEST_CASE("LR test") {
  const auto d = logistic_dc(2.0, -0.15, 600, 5);
  std::vector<DcRecord> first(d.records().begin(), d.records().begin() + 300);
  std::vector<DcRecord> second(d.records().begin() + 300, d.records().end());
  const auto t = lr_test_dc(d.with_records(first), d.with_records(second));
  CHECK(t.kind == TestKind::kLikelihoodRatio);
  CHECK(*t.df == 2.0);
  CHECK(t.statistic >= 0.0);
  const auto far = lr_test_dc(logistic_dc(1.0, -0.15, 10000, 6), logistic_dc(4.0, -0.15, 10000, 7));
  CHECK(far.p_value < 0.001);
}

TEST_CASE("LR statistic is never negative") {
  for (int i = 0; i < 50; ++i) {
    CHECK(lr_test_dc(logistic_dc(2.0, -0.1, 200, 100 + i), logistic_dc(2.1, -0.1, 150, 200 + i)).statistic >= 0.0);
  }
}

TEST_CASE("bootstrap basics") {
  const WtpSample flat(Label::kBdm, {4, 4, 4, 4});
  const auto r = bootstrap_ci(flat, statistics::mean(), settings(200, 1));
  CHECK(r.intervals[0].lower == 4.0);
  CHECK(r.intervals[0].upper == 4.0);
  CHECK(r.replicates[0].size() == 200);

  const WtpSample s(Label::kBdm, normals(100, 50, 10, 9));
  const auto a = bootstrap_ci(s, statistics::mean(), settings(500, 3));
  const auto b = bootstrap_ci(s, statistics::mean(), settings(500, 3));
  CHECK(a.replicates == b.replicates);
  CHECK(a.point[0] == sample_mean(s));

  BootstrapSettings wide = settings(500, 3);
  wide.confidence = 0.99;
  const auto w = bootstrap_ci(s, statistics::mean(), wide);
  CHECK(w.intervals[0].lower <= a.intervals[0].lower);
  CHECK(w.intervals[0].upper >= a.intervals[0].upper);

  CHECK_THROWS_AS(bootstrap_ci(s, statistics::mean(), settings(50, 1)), WtpError);
  CHECK_THROWS_AS(bootstrap_ci(WtpSample(Label::kBdm, {1}), statistics::mean(), settings(100, 1)), WtpError);
}

TEST_CASE("bootstrap is invariant to row order") {
  std::vector<Money> v = normals(60, 50, 10, 11);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < v.size(); ++i) ids.push_back("id" + std::to_string(i));
  const WtpSample s(Label::kBdm, v, ids);
  std::reverse(v.begin(), v.end());
  std::reverse(ids.begin(), ids.end());
  const WtpSample t(Label::kBdm, v, ids);
  const auto a = bootstrap_ci(s, statistics::mean(), settings(300, 5));
  const auto b = bootstrap_ci(t, statistics::mean(), settings(300, 5));
  CHECK(a.replicates == b.replicates);

  const auto d = logistic_dc(2.0, -0.15, 200, 12);
  std::vector<DcRecord> rev(d.records().rbegin(), d.records().rend());
  const auto x = bootstrap_ci(d, statistics::parametric_dc_mean(), settings(200, 6));
  const auto y = bootstrap_ci(d.with_records(rev), statistics::parametric_dc_mean(), settings(200, 6));
  CHECK(x.replicates == y.replicates);
}

TEST_CASE("failed replicates are counted and capped") {
  // Nearly separated data: some resamples fail to fit.
  std::vector<DcRecord> r;
  for (int i = 0; i < 10; ++i) r.push_back({0, true});
  for (int i = 0; i < 10; ++i) r.push_back({10, false});
  r.push_back({10, true});
  r.push_back({0, false});
  const DcDataset d(r, {0, 10});
  try {
    const auto res = bootstrap_ci(d, statistics::parametric_dc_mean(), settings(400, 1));
    CHECK(res.failed > 0);
    CHECK(res.failed <= 80);
    CHECK(res.replicates[0].size() + res.failed == 400);
  } catch (const WtpError& e) {
    CHECK(e.code() == ErrorCode::kTooManyFailedReplicates);
  }
  std::vector<DcRecord> sep{{0, true}, {0, true}, {10, false}, {10, false}};
  CHECK_THROWS_AS(bootstrap_ci(DcDataset(sep, {0, 10}), statistics::parametric_dc_mean(), settings(100, 1)), WtpError);
}

TEST_CASE("bootstrap difference") {
  const WtpSample s(Label::kBdm, normals(150, 50, 10, 13));
  const auto self = bootstrap_difference_test(s, s, statistics::mean(), settings(1000, 2));
  CHECK(self.kind == TestKind::kBootstrapDifference);
  CHECK(self.statistic == 0.0);
  CHECK(self.p_value > 0.5);

  std::vector<Money> shifted(s.values().begin(), s.values().end());
  for (auto& v : shifted) v += 10.0;
  const auto diff = bootstrap_difference(WtpSample(Label::kBdm, shifted), s, statistics::mean(), settings(1000, 3));
  CHECK(oracle::mean(diff.differences[0]) == doctest::Approx(10.0).epsilon(0.05));
  CHECK(diff.tests[0].p_value == doctest::Approx(1.0 / 1000));
  CHECK(diff.difference_intervals[0].lower > 0.0);
}

TEST_CASE("bootstrap p-value") {
  const std::vector<double> pos{1, 2, 3, 4};
  CHECK(bootstrap_p_value(pos, 4) == 0.25);
  const std::vector<double> mixed{-1, 1, 2, 3};
  CHECK(bootstrap_p_value(mixed, 4) == 0.5);
  const std::vector<double> zero{0, 0};
  CHECK(bootstrap_p_value(zero, 2) == 1.0);
}

}
