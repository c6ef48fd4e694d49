#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "wtp/pricing.hpp"
#include "wtp/simulation.hpp"

using namespace wtp;

namespace {

LogisticDemand model(double a, double b) {
  LogisticDemand m;
  m.intercept = a;
  m.slope = b;
  return m;
}

std::vector<Money> grid_0_100() {
  std::vector<Money> g;
  for (int p = 0; p <= 100; p += 5) g.push_back(p);
  return g;
}

}  // namespace

TEST_SUITE("pricing") {

TEST_CASE("profit") {
  const MarketConfig unit{0.0, 1.0};
  CHECK(profit(1.0, model(0, -1), unit) == doctest::Approx(std::exp(-1.0) / (1 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(profit(5.0, model(5, -0.5), MarketConfig{}) == 0.0);
}

TEST_CASE("optimizer matches brute force") {
  const MarketConfig mkt;
  const auto m = model(5, -0.5);
  const auto opt = optimize_price(m, mkt, 40.0);
  const auto bf = oracle::brute_force_optimum(5, -0.5, 5, 1000, 40.0);
  CHECK(std::abs(opt.price - bf.price) <= 0.001);
  CHECK(opt.profit >= bf.profit * (1 - 1e-9));
  CHECK(std::abs(1.0 + (opt.price - 5.0) * m.slope * (1.0 - opt.quantity)) < 1e-4);
  CHECK_FALSE(opt.boundary_max);
}

TEST_CASE("audit grid, cost monotonicity, ms scaling") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ua(-2.0, 8.0), ub(-1.0, -0.02), uc(0.0, 20.0);
  for (int i = 0; i < 50; ++i) {
    const auto m = model(ua(rng), ub(rng));
    const double c = uc(rng);
    const double p_max = c + 4.0 * (std::abs(m.intercept) + 10.0) / -m.slope;
    const MarketConfig mkt{c, 1000.0};
    const auto opt = optimize_price(m, mkt, p_max);
    for (int k = 0; k <= 10000; ++k) {
      const double p = c + (p_max - c) * k / 10000.0;
      if (profit(p, m, mkt) > opt.profit * (1 + 1e-6)) {
        FAIL("audit point beats optimum at p = " << p);
        break;
      }
    }
    const auto doubled = optimize_price(m, MarketConfig{c, 2000.0}, p_max);
    CHECK(doubled.price == opt.price);
    CHECK(doubled.quantity == opt.quantity);
    CHECK(doubled.profit == 2.0 * opt.profit);
    const auto dearer = optimize_price(m, MarketConfig{c + 1.0, 1000.0}, p_max);
    CHECK(dearer.price >= opt.price - 1e-6);
  }
}

TEST_CASE("boundary flag and preconditions") {
  const auto shallow = optimize_price(model(10, -0.001), MarketConfig{}, 50.0);
  CHECK(shallow.boundary_max);
  CHECK(shallow.price == doctest::Approx(50.0));
  CHECK_THROWS_WITH_AS(optimize_price(model(1, 0.1), MarketConfig{}, 50.0), doctest::Contains("NON_NEGATIVE_SLOPE"), WtpError);
  CHECK_THROWS_AS(optimize_price(model(1, -0.1), MarketConfig{}, 5.0), WtpError);
}

TEST_CASE("currency rescaling scales the optimal price") {
  const auto s = sample_true_wtp({50, 10, 15, 85}, 2000, 3);
  std::vector<Money> scaled(s.values().begin(), s.values().end());
  for (auto& v : scaled) v *= 3.0;
  auto g = grid_0_100();
  auto g3 = g;
  for (auto& v : g3) v *= 3.0;
  const auto base = optimize_price(fit_sample_logistic(s.values(), g), MarketConfig{5.0, 1000.0}, 170.0);
  const auto big = optimize_price(fit_sample_logistic(scaled, g3), MarketConfig{15.0, 1000.0}, 510.0);
  CHECK(big.price == doctest::Approx(3.0 * base.price).epsilon(1e-6));
}

TEST_CASE("optimum with bootstrap CIs") {
  const auto s = sample_true_wtp({50, 10, 15, 85}, 250, 4);
  BootstrapSettings bs;
  bs.reps = 200;
  bs.seed = 7;
  const DataSource src = s;
  const auto r = optimum_with_ci(src, grid_0_100(), MarketConfig{}, bs);
  CHECK(r.ci_price.lower <= r.ci_price.upper);
  CHECK(r.ci_price.lower <= r.optimal_price);
  CHECK(r.optimal_price <= r.ci_price.upper);
  CHECK_FALSE(r.profit_pct_diff_vs_benchmark);
  const auto again = optimum_with_ci(src, grid_0_100(), MarketConfig{}, bs);
  CHECK(again.ci_profit.lower == r.ci_profit.lower);

  const auto self = optimum_with_ci(src, grid_0_100(), MarketConfig{}, bs, &src);
  CHECK(*self.profit_pct_diff_vs_benchmark == 0.0);
  REQUIRE(self.profit_test);
  CHECK(self.profit_test->p_value > 0.5);
}

TEST_CASE("point optimum tracks a known logistic truth") {
  // DC data generated from a logistic truth; the fit's optimum should match
  // the fine-grid optimum of the truth closely at large n.
  std::mt19937_64 rng(8);
  const auto g = grid_0_100();
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<DcRecord> r(50000);
  for (auto& x : r) {
    x.price_cue = g[pick(rng)];
    x.accept = u(rng) < oracle::logistic(6.0 - 0.12 * x.price_cue);
  }
  const DcDataset d(r, g);
  const auto opt = optimize_price(fit_source(DataSource(d), g), MarketConfig{}, 200.0);
  const auto truth = oracle::brute_force_optimum(6.0, -0.12, 5.0, 1000.0, 200.0);
  CHECK(std::abs(opt.price - truth.price) < 0.5);
  CHECK(opt.profit == doctest::Approx(truth.profit).epsilon(0.02));
}

TEST_CASE("profit difference test has power at a 30% gap") {
  BootstrapSettings bs;
  bs.reps = 200;
  int rejections = 0;
  const int reps = 10;
  for (int i = 0; i < reps; ++i) {
    bs.seed = i;
    const auto a = sample_true_wtp({50, 10, 15, 85}, 250, 100 + i);
    const auto b = sample_true_wtp({39, 8, 10, 70}, 250, 200 + i);
    const DataSource sa = a, sb = b;
    const auto r = optimum_with_ci(sa, grid_0_100(), MarketConfig{}, bs, &sb);
    CHECK(*r.profit_pct_diff_vs_benchmark > 0.2);
    rejections += r.profit_test->p_value < 0.05;
  }
  CHECK(rejections >= 8);
}

TEST_CASE("default ceiling") {
  CHECK(default_price_ceiling(DataSource(WtpSample(Label::kOe, {3, 40}))) == 80.0);
  CHECK(default_price_ceiling(DataSource(DcDataset({{10, true}}, {10, 20}))) == 40.0);
}

}
