#ifndef WTP_PRICING_HPP_
#define WTP_PRICING_HPP_

#include <optional>
#include <span>

#include "wtp/core.hpp"
#include "wtp/inference.hpp"

namespace wtp {

/// (p - c) * q(p) * ms under logistic demand.
Money profit(Money price, const LogisticDemand& m, const MarketConfig& mkt);

struct PriceOptimum {
  Money price = 0.0;
  double quantity = 0.0;
  Money profit = 0.0;
  /// The maximizer sits at p_max: the search bound is binding.
  bool boundary_max = false;
};

/// Coarse scan of [c, p_max] at step p_max/2000, then golden-section search
/// on the bracketing cells until the bracket is below 1e-6.
PriceOptimum optimize_price(const LogisticDemand& m, const MarketConfig& mkt, Money p_max);

/// 2x the largest observed WTP value or price cue.
Money default_price_ceiling(const DataSource& source);

/// WTP samples are fitted on their respondent x grid expansion; DC data on
/// its own records.
LogisticDemand fit_source(const DataSource& source, std::span<const Money> grid);

/// Statistic returning {optimal price, optimal quantity, optimal profit}.
Statistic optimum_statistic(std::vector<Money> grid, MarketConfig mkt, Money p_max);

struct OptimumOptions {
  std::optional<Money> p_max;
};

/// Point optimum from the full sample and percentile CIs from refitting
/// bootstrap resamples. With a benchmark, adds the profit percentage gap and
/// bootstrap difference tests for all three quantities.
OptimumReport optimum_with_ci(const DataSource& source, std::span<const Money> grid,
                              const MarketConfig& mkt, const BootstrapSettings& cfg,
                              const DataSource* benchmark = nullptr,
                              const OptimumOptions& options = {});

}  // namespace wtp

#endif  // WTP_PRICING_HPP_
