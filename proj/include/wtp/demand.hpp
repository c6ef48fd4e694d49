#ifndef WTP_DEMAND_HPP_
#define WTP_DEMAND_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wtp/core.hpp"

namespace wtp {

/// q(p) = #{v >= p} / n at 0 and at every distinct sample value.
DemandCurve empirical_survival(const WtpSample& s);

/// Pr(WTP >= price) in the sample.
double survival_at(std::span<const Money> values, Money price);

/// Area under the survival step curve from 0 to the largest point. Equals
/// the sample mean for nonnegative samples.
double survival_area(const DemandCurve& survival);

/// Per-level acceptance fractions. Levels without records are skipped and
/// reported through `empty_levels` when given.
DemandCurve dc_choice_shares(const DcDataset& d, std::vector<Money>* empty_levels = nullptr);

struct PriceResponse {
  Money price = 0.0;
  bool accept = false;
};

/// Accepts and trials observed at one price.
struct BinomialCell {
  Money price = 0.0;
  double successes = 0.0;
  double trials = 0.0;
};

std::vector<BinomialCell> aggregate_cells(std::span<const PriceResponse> obs);
std::vector<BinomialCell> dc_cells(const DcDataset& d);

double logistic_log_likelihood(std::span<const BinomialCell> cells, double intercept,
                               double slope);
/// Gradient of the log-likelihood in (intercept, slope).
std::array<double, 2> logistic_score(std::span<const BinomialCell> cells, double intercept,
                                     double slope);

struct LogisticFitOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  double step_tolerance = 1e-10;
};

/// Maximum-likelihood logistic demand via Newton-Raphson (IRLS) with step
/// halving. Throws COMPLETE_SEPARATION, NO_VARIATION, INSUFFICIENT_LEVELS or
/// NON_CONVERGENCE.
LogisticDemand fit_logistic(std::span<const BinomialCell> cells,
                            const LogisticFitOptions& options = {});
LogisticDemand fit_logistic(std::span<const PriceResponse> obs,
                            const LogisticFitOptions& options = {});

/// One observation per respondent x level: accept iff value >= level.
std::vector<PriceResponse> expand_sample_to_bernoulli(const WtpSample& s,
                                                      std::span<const Money> grid);
/// Same likelihood as the expansion, aggregated per level.
std::vector<BinomialCell> expand_sample_to_cells(std::span<const Money> values,
                                                 std::span<const Money> grid);

/// Logistic fit on the respondent x grid expansion. The covariance is marked
/// invalid for inference.
LogisticDemand fit_sample_logistic(std::span<const Money> values, std::span<const Money> grid);
LogisticDemand fit_dc_logistic(const DcDataset& d);

/// Integral of the logistic survival over [0, inf): ln(1 + e^a) / -b.
Money parametric_dc_mean(const LogisticDemand& m);

enum class NonparametricRule {
  /// Curve anchored at (0, 1), linear between levels, zero past the top level.
  kLinearInterpolation,
  /// Share 1 on [0, first level), share(level_k) on [level_k, level_k+1),
  /// zero past the top level.
  kLeftStep,
};

Money nonparametric_dc_mean(const DemandCurve& shares,
                            NonparametricRule rule = NonparametricRule::kLinearInterpolation);

struct KrinskyRobbResult {
  Interval interval;
  std::size_t discarded = 0;
  std::size_t reps = 0;
};

KrinskyRobbResult krinsky_robb_ci(const LogisticDemand& m, std::size_t reps = 5000,
                                  double level = 0.95, std::uint64_t seed = 0);

}  // namespace wtp

#endif  // WTP_DEMAND_HPP_
