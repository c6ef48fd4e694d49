#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "wtp/simulation.hpp"

using namespace wtp;

TEST_SUITE("simulation") {

TEST_CASE("truncated normal draws stay in the window") {
  const TruncatedNormalSpec spec{50, 10, 15, 85};
  const auto s = sample_true_wtp(spec, 250, 1);
  CHECK(s.size() == 250);
  CHECK(s.label() == Label::kSimulatedTrue);
  for (double v : s.values()) {
    CHECK(v >= 15.0);
    CHECK(v <= 85.0);
  }
}

TEST_CASE("zero sd is a point mass") {
  const auto s = sample_true_wtp({50, 0, 15, 85}, 3, 9);
  for (double v : s.values()) CHECK(v == 50.0);
}

TEST_CASE("degenerate window") {
  CHECK_THROWS_AS(sample_true_wtp({50, 1, 200, 300}, 3, 0), WtpError);
  CHECK_THROWS_AS(sample_true_wtp({50, 0, 60, 70}, 3, 0), WtpError);
}

TEST_CASE("analytic truncated mean agrees with quadrature") {
  for (auto spec : {TruncatedNormalSpec{50, 10, 15, 85}, TruncatedNormalSpec{50, 10, 40, 85},
                    TruncatedNormalSpec{10, 20, 0, 30}}) {
    CHECK(spec.analytic_mean() ==
          doctest::Approx(oracle::truncated_normal_mean(spec.mean, spec.sd, spec.low, spec.high))
              .epsilon(1e-10));
  }
}

TEST_CASE("large-sample mean matches the truncated-normal mean") {
  const TruncatedNormalSpec spec{50, 10, 15, 85};
  const auto s = sample_true_wtp(spec, 1'000'000, 2);
  CHECK(std::abs(sample_mean(s) - oracle::truncated_normal_mean(50, 10, 15, 85)) < 0.05);
}

TEST_CASE("inverse-cdf fallback for a thin window far in the tail") {
  const TruncatedNormalSpec spec{0, 1, 4, 5};  // mass ~3e-5, rejection would stall
  const auto v = draw_truncated_normal(spec, 20000, 4);
  for (double x : v) {
    CHECK(x >= 4.0);
    CHECK(x <= 5.0);
  }
  CHECK(oracle::mean(v) == doctest::Approx(oracle::truncated_normal_mean(0, 1, 4, 5)).epsilon(0.01));
}

TEST_CASE("draws are deterministic in the seed") {
  const TruncatedNormalSpec spec;
  CHECK(draw_truncated_normal(spec, 100, 5) == draw_truncated_normal(spec, 100, 5));
  CHECK(draw_truncated_normal(spec, 100, 5) != draw_truncated_normal(spec, 100, 6));
}

TEST_CASE("OE bias") {
  const WtpSample truth(Label::kSimulatedTrue, {10, 20, 30});
  const auto same = apply_oe_bias(truth, {0.0, 0.0}, 1);
  CHECK(std::equal(same.values().begin(), same.values().end(), truth.values().begin()));
  CHECK(same.label() == Label::kOe);
  const auto shifted = apply_oe_bias(WtpSample(Label::kSimulatedTrue, {40}), {8.0, 0.0}, 1);
  CHECK(shifted.values()[0] == 48.0);
}

TEST_CASE("OE mean bias converges to alpha") {
  const auto truth = sample_true_wtp({50, 10, 15, 85}, 100000, 7);
  const auto oe = apply_oe_bias(truth, {8.0, 4.0}, 8);
  const double gap = sample_mean(oe) - sample_mean(truth);
  CHECK(std::abs(gap - 8.0) < 0.1);
  CHECK(std::abs(gap - 8.0) < 3.0 * 4.0 / std::sqrt(100000.0));
}

TEST_CASE("theta draws: support, mean, mass below zero") {
  const ThetaDistribution wide(3.0, 7.0, 0.7 / 3.0, 0.3 / 7.0);
  for (double t : sample_theta(wide, 10000, 1)) {
    CHECK(t >= -3.0);
    CHECK(t <= 7.0);
  }
  const auto d = ThetaDistribution::zero_mean_on(1.0, 2.0);
  const auto th = sample_theta(d, 1'000'000, 2);
  CHECK(std::abs(oracle::mean(th)) < 0.005);
  const double below = static_cast<double>(std::count_if(th.begin(), th.end(), [](double t) { return t < 0; })) /
                       static_cast<double>(th.size());
  const double p = d.mass_below_zero();
  CHECK(std::abs(below - p) < 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(th.size())));

  const double eps = 1e-3;
  for (double t : sample_theta(ThetaDistribution::zero_mean_on(eps, eps), 1000, 3)) {
    CHECK(std::abs(t) <= eps);
  }
}

TEST_CASE("anchored statement examples") {
  CHECK(anchored_statement(40, 60, 2.0) == 80.0);
  CHECK(anchored_statement(40, 60, 0.0) == 40.0);
}

TEST_CASE("DC responses: latent consistency and anchoring direction") {
  const auto truth = sample_true_wtp({50, 10, 15, 85}, 10000, 3);
  std::vector<Money> grid;
  for (int p = 0; p <= 100; p += 5) grid.push_back(p);
  const auto sim = simulate_dc_responses(truth, grid, ThetaDistribution::zero_mean_on(1, 2), 4);
  REQUIRE(sim.latent.size() == truth.size());
  std::vector<int> acc(grid.size()), tot(grid.size());
  for (std::size_t i = 0; i < sim.latent.size(); ++i) {
    const auto& r = sim.latent[i];
    CHECK(r.true_wtp == truth.values()[i]);
    CHECK(r.stated == anchored_statement(r.true_wtp, r.cue, r.theta));
    CHECK(r.accept == (r.stated >= r.cue));
    CHECK(sim.dataset.records()[i].accept == r.accept);
    CHECK(sim.dataset.records()[i].price_cue == r.cue);
    if (r.theta > 0 && r.cue > r.true_wtp) CHECK(r.stated > r.true_wtp);
    if (r.theta > 0 && r.cue < r.true_wtp) CHECK(r.stated < r.true_wtp);
    const auto k = std::lower_bound(grid.begin(), grid.end(), r.cue) - grid.begin();
    acc[k] += r.accept;
    ++tot[k];
  }
  CHECK(static_cast<double>(acc.front()) / tot.front() > static_cast<double>(acc.back()) / tot.back());
}

TEST_CASE("theta = 0 gives truthful choices") {
  const auto truth = sample_true_wtp({50, 10, 15, 85}, 2000, 5);
  const std::vector<Money> grid{20, 40, 60, 80};
  const auto sim = simulate_dc_responses(truth, grid, ThetaDistribution::zero_mean_on(1e-9, 1e-9), 6);
  for (const auto& r : sim.latent) CHECK(r.accept == (r.true_wtp >= r.cue - 1e-6));
}

TEST_CASE("DC simulation is deterministic") {
  const auto truth = sample_true_wtp({50, 10, 15, 85}, 300, 5);
  const std::vector<Money> grid{20, 40, 60};
  const auto a = simulate_dc_responses(truth, grid, ThetaDistribution::zero_mean_on(1, 2), 9);
  const auto b = simulate_dc_responses(truth, grid, ThetaDistribution::zero_mean_on(1, 2), 9);
  for (std::size_t i = 0; i < a.latent.size(); ++i) {
    CHECK(a.latent[i].theta == b.latent[i].theta);
    CHECK(a.latent[i].cue == b.latent[i].cue);
  }
}

}
