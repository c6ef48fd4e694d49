#include "wtp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace wtp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kNonFiniteValue: return "NON_FINITE_VALUE";
    case ErrorCode::kNegativeValue: return "NEGATIVE_VALUE";
    case ErrorCode::kDuplicateId: return "DUPLICATE_ID";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kDegenerateSpec: return "DEGENERATE_SPEC";
    case ErrorCode::kOffGrid: return "OFF_GRID";
    case ErrorCode::kInsufficientLevels: return "INSUFFICIENT_LEVELS";
    case ErrorCode::kCompleteSeparation: return "COMPLETE_SEPARATION";
    case ErrorCode::kNoVariation: return "NO_VARIATION";
    case ErrorCode::kNonConvergence: return "NON_CONVERGENCE";
    case ErrorCode::kNonNegativeSlope: return "NON_NEGATIVE_SLOPE";
    case ErrorCode::kTooManyDiscards: return "TOO_MANY_DISCARDS";
    case ErrorCode::kTooManyFailedReplicates: return "TOO_MANY_FAILED_REPLICATES";
    case ErrorCode::kZeroVariance: return "ZERO_VARIANCE";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kSchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::kIoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCompleteSeparation:
    case ErrorCode::kNoVariation:
    case ErrorCode::kNonConvergence:
    case ErrorCode::kNonNegativeSlope:
    case ErrorCode::kTooManyDiscards:
    case ErrorCode::kTooManyFailedReplicates:
    case ErrorCode::kZeroVariance:
      return false;
    default:
      return true;
  }
}

namespace {

std::string compose(ErrorCode code, const std::string& message,
                    const std::vector<RowIssue>& issues) {
  std::ostringstream os;
  os << to_string(code) << ": " << message;
  for (const auto& issue : issues) {
    os << "\n  row " << issue.row;
    if (!issue.id.empty()) os << " (" << issue.id << ")";
    os << ": " << to_string(issue.code) << " " << issue.message;
  }
  return os.str();
}

}  // namespace

WtpError::WtpError(ErrorCode code, const std::string& message,
                   std::vector<RowIssue> issues)
    : std::runtime_error(compose(code, message, issues)),
      code_(code),
      issues_(std::move(issues)) {}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kOe: return "OE";
    case Label::kBdm: return "BDM";
    case Label::kDebiasedBasic: return "DEBIASED_BASIC";
    case Label::kDebiasedEpsilon: return "DEBIASED_EPSILON";
    case Label::kDebiasedFull: return "DEBIASED_FULL";
    case Label::kSimulatedTrue: return "SIMULATED_TRUE";
  }
  return "UNKNOWN";
}

Label label_from_string(std::string_view text) {
  for (Label l : {Label::kOe, Label::kBdm, Label::kDebiasedBasic,
                  Label::kDebiasedEpsilon, Label::kDebiasedFull,
                  Label::kSimulatedTrue}) {
    if (to_string(l) == text) return l;
  }
  throw WtpError(ErrorCode::kInvalidConfig,
                 "unknown sample label '" + std::string(text) + "'");
}

bool requires_nonnegative(Label label) {
  return label == Label::kOe || label == Label::kBdm ||
         label == Label::kSimulatedTrue;
}

namespace {

std::vector<RowIssue> check_values(std::span<const Money> values,
                                   const std::vector<std::string>* ids,
                                   Label label) {
  std::vector<RowIssue> issues;
  auto id_of = [&](std::size_t i) { return ids ? (*ids)[i] : std::string(); };
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Money v = values[i];
    if (!std::isfinite(v)) {
      issues.push_back({i, id_of(i), ErrorCode::kNonFiniteValue, "value is not finite"});
    } else if (v < 0.0 && requires_nonnegative(label)) {
      std::ostringstream os;
      os << "value " << v << " is negative for label " << to_string(label);
      issues.push_back({i, id_of(i), ErrorCode::kNegativeValue, os.str()});
    }
  }
  if (ids) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids->size(); ++i) {
      if (!seen.insert((*ids)[i]).second) {
        issues.push_back({i, (*ids)[i], ErrorCode::kDuplicateId, "duplicate respondent id"});
      }
    }
  }
  return issues;
}

}  // namespace

WtpSample::WtpSample(Label label, std::vector<Money> values,
                     std::optional<std::vector<std::string>> respondent_ids)
    : label_(label), values_(std::move(values)), ids_(std::move(respondent_ids)) {
  if (values_.empty()) {
    throw WtpError(ErrorCode::kEmptyInput, "WTP sample has no values");
  }
  if (ids_ && ids_->size() != values_.size()) {
    throw WtpError(ErrorCode::kInvalidConfig,
                   "respondent_ids length does not match values length");
  }
  auto issues = check_values(values_, ids_ ? &*ids_ : nullptr, label_);
  if (!issues.empty()) {
    const ErrorCode first = issues.front().code;
    throw WtpError(first, "invalid WTP sample", std::move(issues));
  }
}

WtpSample WtpSample::relabeled(Label label, std::vector<Money> values) const {
  return WtpSample(label, std::move(values), ids_);
}

WtpSample validate_sample(std::span<const RawWtpRow> rows, Label label) {
  if (rows.empty()) throw WtpError(ErrorCode::kEmptyInput, "no rows supplied");
  std::vector<Money> values;
  std::vector<std::string> ids;
  values.reserve(rows.size());
  ids.reserve(rows.size());
  for (const auto& r : rows) {
    values.push_back(r.value);
    ids.push_back(r.id);
  }
  return WtpSample(label, std::move(values), std::move(ids));
}

Money sample_mean(std::span<const Money> values) {
  if (values.empty()) throw WtpError(ErrorCode::kEmptyInput, "mean of empty sample");
  // Kahan summation.
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(values.size());
}

Money sample_sd(std::span<const Money> values) {
  if (values.empty()) throw WtpError(ErrorCode::kEmptyInput, "sd of empty sample");
  if (values.size() == 1) return 0.0;
  const double m = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void validate_grid(std::span<const Money> grid) {
  if (grid.empty()) throw WtpError(ErrorCode::kInsufficientLevels, "price grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) {
      throw WtpError(ErrorCode::kNonFiniteValue, "price grid has a non-finite level");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw WtpError(ErrorCode::kInvalidConfig, "price grid is not strictly increasing");
    }
  }
}

DcDataset::DcDataset(std::vector<DcRecord> records, std::vector<Money> grid,
                     std::optional<std::vector<std::string>> respondent_ids)
    : records_(std::move(records)), grid_(std::move(grid)), ids_(std::move(respondent_ids)) {
  validate_grid(grid_);
  if (records_.empty()) throw WtpError(ErrorCode::kEmptyInput, "DC dataset has no records");
  if (ids_ && ids_->size() != records_.size()) {
    throw WtpError(ErrorCode::kInvalidConfig,
                   "respondent_ids length does not match records length");
  }
  std::vector<RowIssue> issues;
  auto id_of = [&](std::size_t i) { return ids_ ? (*ids_)[i] : std::string(); };
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const Money cue = records_[i].price_cue;
    if (!std::isfinite(cue)) {
      issues.push_back({i, id_of(i), ErrorCode::kNonFiniteValue, "price cue is not finite"});
    } else if (!std::binary_search(grid_.begin(), grid_.end(), cue)) {
      std::ostringstream os;
      os << "price cue " << cue << " is not a grid level";
      issues.push_back({i, id_of(i), ErrorCode::kOffGrid, os.str()});
    }
  }
  if (ids_) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids_->size(); ++i) {
      if (!seen.insert((*ids_)[i]).second) {
        issues.push_back({i, (*ids_)[i], ErrorCode::kDuplicateId, "duplicate respondent id"});
      }
    }
  }
  if (!issues.empty()) {
    const ErrorCode first = issues.front().code;
    throw WtpError(first, "invalid DC dataset", std::move(issues));
  }
}

DcDataset DcDataset::with_records(std::vector<DcRecord> records) const {
  return DcDataset(std::move(records), grid_);
}

bool Matrix2::is_psd(double tol) const {
  if (std::abs(xy) > 0.0 && !(std::isfinite(xx) && std::isfinite(yy))) return false;
  const double scale = std::max({std::abs(xx), std::abs(yy), std::abs(xy), 1e-300});
  return xx >= -tol * scale && yy >= -tol * scale &&
         xx * yy - xy * xy >= -tol * scale * scale;
}

double LogisticDemand::share(Money price) const {
  const double z = intercept + slope * price;
  // Branches keep exp() from overflowing for large |z|.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ThetaDistribution::ThetaDistribution(double neg_width, double pos_width,
                                     double neg_density, double pos_density)
    : x1_(neg_width), x2_(pos_width), y1_(neg_density), y2_(pos_density) {
  for (double v : {x1_, x2_, y1_, y2_}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw WtpError(ErrorCode::kInvalidConfig,
                     "theta distribution parameters must be finite and >= 0");
    }
  }
  const double mass = x1_ * y1_ + x2_ * y2_;
  if (std::abs(mass - 1.0) > 1e-12) {
    throw WtpError(ErrorCode::kInvalidConfig, "theta distribution mass is not 1");
  }
  const double mean = y2_ * x2_ * x2_ / 2.0 - y1_ * x1_ * x1_ / 2.0;
  if (std::abs(mean) > 1e-12) {
    throw WtpError(ErrorCode::kInvalidConfig, "theta distribution mean is not 0");
  }
}

ThetaDistribution ThetaDistribution::zero_mean_on(double neg_width, double pos_width) {
  if (!(neg_width > 0.0) || !(pos_width > 0.0)) {
    throw WtpError(ErrorCode::kInvalidConfig, "theta support widths must be positive");
  }
  // y1*x1 + y2*x2 = 1 and y1*x1^2 = y2*x2^2.
  const double total = neg_width + pos_width;
  return ThetaDistribution(neg_width, pos_width, pos_width / (neg_width * total),
                           neg_width / (pos_width * total));
}

void MarketConfig::validate() const {
  if (!std::isfinite(marginal_cost) || marginal_cost < 0.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "marginal cost must be finite and >= 0");
  }
  if (!std::isfinite(market_size) || market_size < 1.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "market size must be >= 1");
  }
}

Interval percentile_interval(std::vector<double> values, double confidence) {
  if (values.empty()) throw WtpError(ErrorCode::kEmptyInput, "no replicate values");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw WtpError(ErrorCode::kInvalidConfig, "confidence must lie in (0, 1)");
  }
  std::sort(values.begin(), values.end());
  const double r = static_cast<double>(values.size());
  const double alpha = 1.0 - confidence;
  auto rank = [&](double x) {
    // 1e-9 absorbs representation error in products like 1000 * 0.025.
    const auto k = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::clamp<std::size_t>(k, 1, values.size()) - 1;
  };
  return {values[rank(r * alpha / 2.0)], values[rank(r * (1.0 - alpha / 2.0))]};
}

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::kWelchT: return "WELCH_T";
    case TestKind::kKsTwoSample: return "KS_TWO_SAMPLE";
    case TestKind::kLikelihoodRatio: return "LIKELIHOOD_RATIO";
    case TestKind::kBootstrapDifference: return "BOOTSTRAP_DIFFERENCE";
  }
  return "UNKNOWN";
}

}  // namespace wtp
