#ifndef WTP_DEBIAS_HPP_
#define WTP_DEBIAS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wtp/core.hpp"

namespace wtp {

enum class Procedure { kBasic, kEpsilon, kFull };

std::string_view to_string(Procedure p);
Procedure procedure_from_string(std::string_view text);
Label debiased_label(Procedure p);

struct DebiasConfig {
  Procedure procedure = Procedure::kBasic;
  /// cov(theta, p). Required for FULL, ignored (treated as 0) otherwise.
  std::optional<Money> cov;
  /// Standard deviation of the simulated individual noise. Defaults to the
  /// sample SD of the OE series for EPSILON and FULL; BASIC uses none.
  std::optional<Money> epsilon_sd;
  std::uint64_t seed = 0;
  bool clamp_at_zero = false;

  void validate() const;
};

struct DebiasEstimate {
  Money alpha_hat = 0.0;
  Money oe_mean = 0.0;
  Money dc_mean = 0.0;
  Money cov_used = 0.0;
  Money epsilon_sd_used = 0.0;
  WtpSample debiased;
};

/// Adjusts every OE statement to  p~_i - mean(p~) + dc_mean + cov - eps_i.
///
/// eps_i is a fresh Normal(0, epsilon_sd^2) draw per respondent (index
/// aligned, seeded). Because the draw is independent and symmetric about
/// zero, subtracting it is equivalent in distribution to adding it; the
/// subtraction is kept literal so results can be checked term by term.
/// Values may turn negative; clamping at zero is opt-in and applied last.
DebiasEstimate debias(const WtpSample& oe, Money dc_mean, const DebiasConfig& cfg);

/// The calibration value of cov(theta, p): mean actual WTP minus DC mean.
inline Money theoretical_cov(Money bdm_mean, Money dc_mean) { return bdm_mean - dc_mean; }

struct SweepPoint {
  Money cov = 0.0;
  Money optimal_price = 0.0;
  Money optimal_profit = 0.0;
  Money profit_difference = 0.0;
};

struct SweepOptions {
  std::optional<Money> p_max;
};

/// FULL de-biasing over an evenly spaced cov grid from cov_lo to cov_hi
/// (inclusive, `steps` points), recording optimal profit minus the
/// benchmark. The epsilon seed is shared by all points.
std::vector<SweepPoint> cov_sensitivity_sweep(const WtpSample& oe, Money dc_mean, Money cov_lo,
                                              Money cov_hi, std::size_t steps,
                                              const DebiasConfig& base,
                                              std::span<const Money> grid,
                                              const MarketConfig& market,
                                              Money benchmark_profit,
                                              const SweepOptions& options = {});

}  // namespace wtp

#endif  // WTP_DEBIAS_HPP_
