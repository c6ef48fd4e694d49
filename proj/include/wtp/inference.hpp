#ifndef WTP_INFERENCE_HPP_
#define WTP_INFERENCE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wtp/core.hpp"
#include "wtp/demand.hpp"

namespace wtp {

struct BootstrapSettings {
  std::size_t reps = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Either kind of survey data a statistic can be evaluated on.
using DataSource = std::variant<WtpSample, DcDataset>;

std::size_t source_size(const DataSource& source);

/// A (possibly vector-valued) estimator. Either callable may be empty when
/// the statistic is undefined on that kind of data.
struct Statistic {
  std::string name;
  std::function<std::vector<double>(std::span<const Money>)> on_values;
  std::function<std::vector<double>(const DcDataset&)> on_dc;

  std::vector<double> operator()(const DataSource& source) const;
};

namespace statistics {
Statistic mean();
Statistic parametric_dc_mean();
Statistic nonparametric_dc_mean(NonparametricRule rule = NonparametricRule::kLinearInterpolation);
}  // namespace statistics

/// Rows sorted by respondent id then value (or cue, accept); resampling
/// indexes into this order so permuting input rows changes nothing.
DataSource canonicalize(const DataSource& source);

struct BootstrapResult {
  std::vector<double> point;
  std::vector<Interval> intervals;
  /// replicates[component][r] over successful replicates only.
  std::vector<std::vector<double>> replicates;
  std::size_t failed = 0;
};

/// Percentile bootstrap with case resampling at the respondent level.
/// Replicates whose statistic throws WtpError are counted and excluded;
/// more than 20% failures throws TOO_MANY_FAILED_REPLICATES.
BootstrapResult bootstrap_ci(const DataSource& source, const Statistic& statistic,
                             const BootstrapSettings& cfg);

struct BootstrapDifference {
  /// One test per statistic component; statistic = point difference a - b.
  std::vector<TestResult> tests;
  std::vector<Interval> difference_intervals;
  std::vector<std::vector<double>> differences;
  std::size_t failed = 0;
};

BootstrapDifference bootstrap_difference(const DataSource& a, const DataSource& b,
                                         const Statistic& statistic,
                                         const BootstrapSettings& cfg);

/// As above with a separate estimator per side (e.g. different search bounds).
BootstrapDifference bootstrap_difference(const DataSource& a, const DataSource& b,
                                         const Statistic& statistic_a,
                                         const Statistic& statistic_b,
                                         const BootstrapSettings& cfg);

/// Scalar convenience: the first component of bootstrap_difference.
TestResult bootstrap_difference_test(const DataSource& a, const DataSource& b,
                                     const Statistic& statistic, const BootstrapSettings& cfg);

/// Two-sided p-value 2 * min(frac <= 0, frac >= 0), floored at 1/reps.
double bootstrap_p_value(std::span<const double> differences, std::size_t reps);

TestResult welch_t_test(std::span<const Money> a, std::span<const Money> b);
inline TestResult welch_t_test(const WtpSample& a, const WtpSample& b) {
  return welch_t_test(a.values(), b.values());
}

/// Welch-Satterthwaite degrees of freedom.
double welch_df(double var_a, std::size_t n_a, double var_b, std::size_t n_b);

TestResult ks_two_sample(std::span<const Money> a, std::span<const Money> b);
inline TestResult ks_two_sample(const WtpSample& a, const WtpSample& b) {
  return ks_two_sample(a.values(), b.values());
}

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) e^(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Pooled versus separate logistic demand fits, chi-square with 2 df.
TestResult lr_test_cells(std::span<const BinomialCell> first, std::span<const BinomialCell> second);
TestResult lr_test_dc(const DcDataset& d1, const DcDataset& d2);
/// DC data against a WTP sample expanded onto the DC grid.
TestResult lr_test_dc(const DcDataset& d1, const WtpSample& s2);

}  // namespace wtp

#endif  // WTP_INFERENCE_HPP_
