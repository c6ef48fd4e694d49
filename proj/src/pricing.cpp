#include "wtp/pricing.hpp"

#include <algorithm>
#include <cmath>

namespace wtp {

Money profit(Money price, const LogisticDemand& m, const MarketConfig& mkt) {
  return (price - mkt.marginal_cost) * m.share(price) * mkt.market_size;
}

PriceOptimum optimize_price(const LogisticDemand& m, const MarketConfig& mkt, Money p_max) {
  mkt.validate();
  if (!(m.slope < 0.0)) {
    throw WtpError(ErrorCode::kNonNegativeSlope, "price optimization needs downward demand");
  }
  const Money lo = mkt.marginal_cost;
  if (!(p_max > lo) || !std::isfinite(p_max)) {
    throw WtpError(ErrorCode::kInvalidConfig, "p_max must exceed the marginal cost");
  }
  const double step = p_max / 2000.0;
  const auto cells = static_cast<std::size_t>(std::ceil((p_max - lo) / step));
  auto grid_point = [&](std::size_t k) { return k >= cells ? p_max : lo + step * static_cast<double>(k); };

  std::size_t best = 0;
  double best_profit = profit(lo, m, mkt);
  for (std::size_t k = 1; k <= cells; ++k) {
    const double v = profit(grid_point(k), m, mkt);
    if (v > best_profit) {
      best_profit = v;
      best = k;
    }
  }

  double a = grid_point(best == 0 ? 0 : best - 1);
  double b = grid_point(std::min(best + 1, cells));
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  double f1 = profit(x1, m, mkt), f2 = profit(x2, m, mkt);
  while (b - a > 1e-6) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = profit(x2, m, mkt);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = profit(x1, m, mkt);
    }
  }
  PriceOptimum out;
  out.price = 0.5 * (a + b);
  // The bracket endpoints were sampled too; keep whichever point is best.
  for (double p : {grid_point(best), a, b}) {
    if (profit(p, m, mkt) > profit(out.price, m, mkt)) out.price = p;
  }
  out.quantity = m.share(out.price);
  out.profit = profit(out.price, m, mkt);
  out.boundary_max = best == cells && p_max - out.price < 2e-6;
  return out;
}

Money default_price_ceiling(const DataSource& source) {
  double hi = 0.0;
  if (const auto* s = std::get_if<WtpSample>(&source)) {
    hi = *std::max_element(s->values().begin(), s->values().end());
  } else {
    const auto grid = std::get<DcDataset>(source).grid();
    hi = grid.back();
  }
  return 2.0 * hi;
}

LogisticDemand fit_source(const DataSource& source, std::span<const Money> grid) {
  if (const auto* s = std::get_if<WtpSample>(&source)) {
    return fit_sample_logistic(s->values(), grid);
  }
  return fit_dc_logistic(std::get<DcDataset>(source));
}

Statistic optimum_statistic(std::vector<Money> grid, MarketConfig mkt, Money p_max) {
  auto triple = [mkt, p_max](const LogisticDemand& m) {
    const auto opt = optimize_price(m, mkt, p_max);
    return std::vector<double>{opt.price, opt.quantity, opt.profit};
  };
  Statistic s;
  s.name = "optimum";
  s.on_values = [grid, triple](std::span<const Money> v) {
    return triple(fit_sample_logistic(v, grid));
  };
  s.on_dc = [triple](const DcDataset& d) { return triple(fit_dc_logistic(d)); };
  return s;
}

OptimumReport optimum_with_ci(const DataSource& source, std::span<const Money> grid,
                              const MarketConfig& mkt, const BootstrapSettings& cfg,
                              const DataSource* benchmark, const OptimumOptions& options) {
  mkt.validate();
  const Money p_max = options.p_max.value_or(default_price_ceiling(source));
  const std::vector<Money> grid_copy(grid.begin(), grid.end());
  const auto point = optimize_price(fit_source(source, grid), mkt, p_max);
  const auto boot = bootstrap_ci(source, optimum_statistic(grid_copy, mkt, p_max), cfg);

  OptimumReport r;
  r.optimal_price = point.price;
  r.optimal_quantity = point.quantity;
  r.optimal_profit = point.profit;
  r.boundary_max = point.boundary_max;
  r.ci_price = boot.intervals[0];
  r.ci_quantity = boot.intervals[1];
  r.ci_profit = boot.intervals[2];
  r.failed_replicates = boot.failed;

  if (benchmark) {
    const Money bench_p_max = options.p_max.value_or(default_price_ceiling(*benchmark));
    const auto bench = optimize_price(fit_source(*benchmark, grid), mkt, bench_p_max);
    r.profit_pct_diff_vs_benchmark = (point.profit - bench.profit) / bench.profit;
    // Each side keeps its own search ceiling.
    const auto diff = bootstrap_difference(source, *benchmark,
                                           optimum_statistic(grid_copy, mkt, p_max),
                                           optimum_statistic(grid_copy, mkt, bench_p_max), cfg);
    r.price_test = diff.tests[0];
    r.quantity_test = diff.tests[1];
    r.profit_test = diff.tests[2];
  }
  return r;
}

}  // namespace wtp
