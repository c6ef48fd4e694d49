#ifndef WTP_STUDY_HPP_
#define WTP_STUDY_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wtp/core.hpp"
#include "wtp/debias.hpp"
#include "wtp/demand.hpp"
#include "wtp/simulation.hpp"

namespace wtp {

enum class DcMeanMode { kParametric, kNonparametric };

std::string_view to_string(DcMeanMode mode);
DcMeanMode dc_mean_mode_from_string(std::string_view text);

/// DC mean of a dataset under the chosen estimator.
Money estimate_dc_mean(const DcDataset& d, DcMeanMode mode,
                       NonparametricRule rule = NonparametricRule::kLinearInterpolation);

/// Set k drops the k lowest and k highest levels of the full grid.
struct GridNarrowingPlan {
  std::vector<Money> full_grid;
  std::size_t n_sets = 1;

  void validate() const;
};

/// Grids 0, 5, ..., 100.
std::vector<Money> default_study_grid();

std::vector<std::vector<Money>> build_grid_sets(const GridNarrowingPlan& plan);

struct StudyConfig {
  TruncatedNormalSpec truth{50.0, 10.0, 15.0, 85.0};
  std::size_t n_per_group = 250;
  std::size_t n_samples = 1000;
  /// Half of 45.758, the sweatshirt OE mean used to calibrate the inflator.
  Money oe_alpha = 0.5 * 45.758;
  Money oe_epsilon_sd = 0.0;
  ThetaDistribution theta = ThetaDistribution::zero_mean_on(1.0, 2.0);
  GridNarrowingPlan plan{default_study_grid(), 10};
  DcMeanMode dc_mean_mode = DcMeanMode::kParametric;
  NonparametricRule nonparametric_rule = NonparametricRule::kLinearInterpolation;
  MarketConfig market;
  double confidence = 0.95;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Metric { kMeanWtp, kOptimalPrice, kOptimalQuantity, kOptimalProfit };

std::string_view to_string(Metric m);

struct TruthSummary {
  Money mean = 0.0;
  Money optimal_price = 0.0;
  double optimal_quantity = 0.0;
  Money optimal_profit = 0.0;

  double value(Metric m) const;
};

/// Mean and profit-optimal point of the true WTP distribution, the optimum
/// found by scanning [c, high] at step 0.001.
TruthSummary truth_summary(const TruncatedNormalSpec& truth, const MarketConfig& market);

struct StudyCell {
  std::size_t grid_set = 0;
  std::size_t levels = 0;
  Procedure procedure = Procedure::kBasic;
  DcMeanMode mode = DcMeanMode::kParametric;
  Metric metric = Metric::kMeanWtp;
  double true_value = 0.0;
  double estimate = 0.0;
  Interval ci;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  /// More than 20% of replicates failed.
  bool flagged = false;

  bool covers_truth() const { return ci.lower <= true_value && true_value <= ci.upper; }
};

/// Per-replicate diagnostics for cross-module identity checks.
struct ReplicateTrace {
  std::size_t grid_set = 0;
  std::size_t replicate = 0;
  Money bdm_mean = 0.0;
  Money dc_mean = 0.0;
  Money basic_mean = 0.0;
  bool ok = false;
};

struct StudyResult {
  DcMeanMode mode = DcMeanMode::kParametric;
  TruthSummary truth;
  std::vector<std::vector<Money>> grid_sets;
  std::vector<StudyCell> cells;
  std::vector<ReplicateTrace> traces;

  const StudyCell& cell(std::size_t grid_set, Procedure p, Metric m) const;
};

StudyResult run_study(const StudyConfig& cfg);

struct NarrowingFinding {
  Procedure procedure = Procedure::kBasic;
  DcMeanMode mode = DcMeanMode::kParametric;
  std::optional<std::size_t> breakdown_set;
  std::optional<std::size_t> breakdown_levels;
  /// 100 * (1 - grid width / true WTP range) at the breakdown set.
  std::optional<double> narrowing_pct;
};

struct NarrowingReport {
  bool sufficient_sets = true;
  std::vector<NarrowingFinding> findings;
  std::string summary;
};

/// First grid set whose recovered-mean interval excludes the true mean, per
/// procedure and mode.
NarrowingReport narrowing_threshold_report(std::span<const StudyResult> results,
                                           const TruncatedNormalSpec& truth);

}  // namespace wtp

#endif  // WTP_STUDY_HPP_
