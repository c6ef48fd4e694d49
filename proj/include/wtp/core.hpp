#ifndef WTP_CORE_HPP_
#define WTP_CORE_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wtp {

/// Money amounts are finite reals in currency units.
using Money = double;

enum class ErrorCode {
  kEmptyInput,
  kNonFiniteValue,
  kNegativeValue,
  kDuplicateId,
  kInvalidConfig,
  kDegenerateSpec,
  kOffGrid,
  kInsufficientLevels,
  kCompleteSeparation,
  kNoVariation,
  kNonConvergence,
  kNonNegativeSlope,
  kTooManyDiscards,
  kTooManyFailedReplicates,
  kZeroVariance,
  kParseError,
  kSchemaMismatch,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by malformed inputs or configuration (CLI exit 2);
/// false for failures of an estimation step on valid data (CLI exit 3).
bool is_validation_error(ErrorCode code);

/// One offending input row. `row` is 0-based in the input sequence
/// (1-based file line numbers are carried in `message` by the CSV loader).
struct RowIssue {
  std::size_t row = 0;
  std::string id;
  ErrorCode code = ErrorCode::kInvalidConfig;
  std::string message;
};

class WtpError : public std::runtime_error {
 public:
  WtpError(ErrorCode code, const std::string& message,
           std::vector<RowIssue> issues = {});

  ErrorCode code() const noexcept { return code_; }
  const std::vector<RowIssue>& issues() const noexcept { return issues_; }

 private:
  ErrorCode code_;
  std::vector<RowIssue> issues_;
};

enum class Label {
  kOe,
  kBdm,
  kDebiasedBasic,
  kDebiasedEpsilon,
  kDebiasedFull,
  kSimulatedTrue,
};

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);

/// Labels whose values are observed WTP amounts and therefore p >= 0.
bool requires_nonnegative(Label label);

/// A labeled sequence of individual WTP amounts. Immutable once built; the
/// constructor enforces every invariant and throws WtpError listing all
/// offending rows.
class WtpSample {
 public:
  WtpSample(Label label, std::vector<Money> values,
            std::optional<std::vector<std::string>> respondent_ids = {});

  Label label() const noexcept { return label_; }
  std::span<const Money> values() const noexcept { return values_; }
  const std::optional<std::vector<std::string>>& respondent_ids() const noexcept {
    return ids_;
  }
  std::size_t size() const noexcept { return values_.size(); }

  /// Same ids, new values and label. Used by transforms that keep respondents
  /// aligned (bias models, de-biasing).
  WtpSample relabeled(Label label, std::vector<Money> values) const;

 private:
  Label label_;
  std::vector<Money> values_;
  std::optional<std::vector<std::string>> ids_;
};

struct RawWtpRow {
  std::string id;
  Money value = 0.0;
};

/// Builds a WtpSample from raw (id, value) rows, collecting every violation
/// before throwing.
WtpSample validate_sample(std::span<const RawWtpRow> rows, Label label);

Money sample_mean(std::span<const Money> values);
inline Money sample_mean(const WtpSample& s) { return sample_mean(s.values()); }

/// Sample standard deviation with the n-1 denominator; 0 for n == 1.
Money sample_sd(std::span<const Money> values);

struct DcRecord {
  Money price_cue = 0.0;
  bool accept = false;
};

/// Dichotomous-choice responses plus the designed price grid.
class DcDataset {
 public:
  DcDataset(std::vector<DcRecord> records, std::vector<Money> grid,
            std::optional<std::vector<std::string>> respondent_ids = {});

  std::span<const DcRecord> records() const noexcept { return records_; }
  std::span<const Money> grid() const noexcept { return grid_; }
  const std::optional<std::vector<std::string>>& respondent_ids() const noexcept {
    return ids_;
  }
  std::size_t size() const noexcept { return records_.size(); }

  /// Same grid, different records (bootstrap resamples, splits).
  DcDataset with_records(std::vector<DcRecord> records) const;

 private:
  std::vector<DcRecord> records_;
  std::vector<Money> grid_;
  std::optional<std::vector<std::string>> ids_;
};

/// Checks that `grid` is non-empty, finite and strictly increasing.
void validate_grid(std::span<const Money> grid);

enum class CurveKind { kNonparametricSurvival, kDcChoiceShares };

struct CurvePoint {
  Money price = 0.0;
  double share = 0.0;
  std::size_t count = 0;  // observations behind the share (DC levels only)
};

struct DemandCurve {
  CurveKind kind = CurveKind::kNonparametricSurvival;
  std::vector<CurvePoint> points;
};

/// Symmetric 2x2 matrix stored as its upper triangle.
struct Matrix2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  bool is_psd(double tol = 1e-12) const;
};

/// Logistic demand q(p) = e^(a+bp) / (1 + e^(a+bp)).
struct LogisticDemand {
  double intercept = 0.0;
  double slope = 0.0;
  Matrix2 coef_covariance;
  std::size_t n_obs = 0;
  double log_likelihood = 0.0;
  int iterations = 0;
  /// False for fits on respondent x grid expansions, where observations
  /// within a respondent are dependent.
  bool covariance_valid_for_inference = true;

  double share(Money price) const;
  bool usable() const noexcept { return slope < 0.0; }
};

/// Piecewise-uniform anchoring distribution: density `neg_density` on
/// [-neg_width, 0) and `pos_density` on [0, pos_width]. Construction enforces
/// unit mass and zero mean within 1e-12.
class ThetaDistribution {
 public:
  ThetaDistribution(double neg_width, double pos_width, double neg_density,
                    double pos_density);

  /// The unique zero-mean member with support [-neg_width, pos_width].
  static ThetaDistribution zero_mean_on(double neg_width, double pos_width);

  double neg_width() const noexcept { return x1_; }
  double pos_width() const noexcept { return x2_; }
  double neg_density() const noexcept { return y1_; }
  double pos_density() const noexcept { return y2_; }
  double mass_below_zero() const noexcept { return x1_ * y1_; }

 private:
  double x1_, x2_, y1_, y2_;
};

struct MarketConfig {
  Money marginal_cost = 5.0;
  double market_size = 1000.0;

  void validate() const;
};

enum class TestKind { kWelchT, kKsTwoSample, kLikelihoodRatio, kBootstrapDifference };

std::string_view to_string(TestKind kind);

struct TestResult {
  TestKind kind = TestKind::kWelchT;
  double statistic = 0.0;
  std::optional<double> df;
  double p_value = 1.0;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Percentile interval from replicate values: the order statistics at
/// 1-based ranks ceil(R*alpha/2) and ceil(R*(1-alpha/2)), alpha = 1 - confidence.
Interval percentile_interval(std::vector<double> values, double confidence);

struct OptimumReport {
  Money optimal_price = 0.0;
  double optimal_quantity = 0.0;
  Money optimal_profit = 0.0;
  Interval ci_price;
  Interval ci_quantity;
  Interval ci_profit;
  std::optional<double> profit_pct_diff_vs_benchmark;
  /// Bootstrap difference tests against the benchmark, when one was given.
  std::optional<TestResult> price_test;
  std::optional<TestResult> quantity_test;
  std::optional<TestResult> profit_test;
  bool boundary_max = false;
  std::size_t failed_replicates = 0;
};

}  // namespace wtp

#endif  // WTP_CORE_HPP_
