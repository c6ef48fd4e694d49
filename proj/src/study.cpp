#include "wtp/study.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "wtp/pricing.hpp"
#include "wtp/random.hpp"

namespace wtp {

std::string_view to_string(DcMeanMode mode) {
  return mode == DcMeanMode::kParametric ? "parametric" : "nonparametric";
}

DcMeanMode dc_mean_mode_from_string(std::string_view text) {
  if (text == "parametric") return DcMeanMode::kParametric;
  if (text == "nonparametric") return DcMeanMode::kNonparametric;
  throw WtpError(ErrorCode::kInvalidConfig, "unknown DC mean mode '" + std::string(text) + "'");
}

Money estimate_dc_mean(const DcDataset& d, DcMeanMode mode, NonparametricRule rule) {
  if (mode == DcMeanMode::kParametric) return parametric_dc_mean(fit_dc_logistic(d));
  return nonparametric_dc_mean(dc_choice_shares(d), rule);
}

void GridNarrowingPlan::validate() const {
  validate_grid(full_grid);
  if (n_sets == 0) throw WtpError(ErrorCode::kInvalidConfig, "plan needs >= 1 grid set");
  if (full_grid.size() < 2 * (n_sets - 1) + 3) {
    throw WtpError(ErrorCode::kInsufficientLevels,
                   "narrowest grid set would have fewer than 3 levels");
  }
}

std::vector<Money> default_study_grid() {
  std::vector<Money> g;
  for (int k = 0; k <= 20; ++k) g.push_back(5.0 * k);
  return g;
}

std::vector<std::vector<Money>> build_grid_sets(const GridNarrowingPlan& plan) {
  plan.validate();
  std::vector<std::vector<Money>> sets;
  const auto& g = plan.full_grid;
  for (std::size_t k = 0; k < plan.n_sets; ++k) {
    sets.emplace_back(g.begin() + static_cast<std::ptrdiff_t>(k),
                      g.end() - static_cast<std::ptrdiff_t>(k));
  }
  return sets;
}

void StudyConfig::validate() const {
  truth.validate();
  plan.validate();
  market.validate();
  if (n_per_group < 2) throw WtpError(ErrorCode::kInvalidConfig, "n_per_group must be >= 2");
  if (n_samples < 1) throw WtpError(ErrorCode::kInvalidConfig, "n_samples must be >= 1");
  if (!std::isfinite(oe_alpha) || !std::isfinite(oe_epsilon_sd) || oe_epsilon_sd < 0.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "OE bias parameters must be finite");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw WtpError(ErrorCode::kInvalidConfig, "confidence must lie in (0, 1)");
  }
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kMeanWtp: return "mean_wtp";
    case Metric::kOptimalPrice: return "optimal_price";
    case Metric::kOptimalQuantity: return "optimal_quantity";
    case Metric::kOptimalProfit: return "optimal_profit";
  }
  return "unknown";
}

double TruthSummary::value(Metric m) const {
  switch (m) {
    case Metric::kMeanWtp: return mean;
    case Metric::kOptimalPrice: return optimal_price;
    case Metric::kOptimalQuantity: return optimal_quantity;
    case Metric::kOptimalProfit: return optimal_profit;
  }
  return 0.0;
}

TruthSummary truth_summary(const TruncatedNormalSpec& truth, const MarketConfig& market) {
  truth.validate();
  market.validate();
  TruthSummary t;
  t.mean = truth.analytic_mean();
  const double c = market.marginal_cost;
  const auto steps = static_cast<std::size_t>(std::ceil((truth.high - c) / 0.001));
  t.optimal_profit = -1.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double p = c + 0.001 * static_cast<double>(k);
    const double q = truth.survival(p);
    const double v = (p - c) * q * market.market_size;
    if (v > t.optimal_profit) {
      t.optimal_profit = v;
      t.optimal_price = p;
      t.optimal_quantity = q;
    }
  }
  return t;
}

const StudyCell& StudyResult::cell(std::size_t grid_set, Procedure p, Metric m) const {
  for (const auto& c : cells) {
    if (c.grid_set == grid_set && c.procedure == p && c.metric == m) return c;
  }
  throw WtpError(ErrorCode::kInvalidConfig, "no such study cell");
}

namespace {

constexpr std::array kProcedures{Procedure::kBasic, Procedure::kEpsilon, Procedure::kFull};
constexpr std::array kMetrics{Metric::kMeanWtp, Metric::kOptimalPrice, Metric::kOptimalQuantity,
                              Metric::kOptimalProfit};

enum Group : std::uint64_t { kOeGroup = 1, kDcGroup = 2, kBdmGroup = 3, kDebiasNoise = 4 };

// Outcome of one replicate: per procedure, the four metrics or nothing.
struct ReplicateOutcome {
  std::array<std::optional<std::array<double, 4>>, 3> by_procedure;
  ReplicateTrace trace;
};

ReplicateOutcome run_replicate(const StudyConfig& cfg, std::span<const Money> grid,
                               std::size_t set, std::size_t rep) {
  ReplicateOutcome out;
  out.trace.grid_set = set;
  out.trace.replicate = rep;
  const std::uint64_t unit = substream_seed(cfg.seed, Stream::kStudy, (set << 32) | rep);
  auto group_seed = [unit](Group g) { return substream_seed(unit, Stream::kStudy, g); };

  Money dc_mean = 0.0, bdm_mean = 0.0;
  std::optional<WtpSample> oe;
  try {
    const auto oe_true = sample_true_wtp(cfg.truth, cfg.n_per_group, group_seed(kOeGroup));
    oe = apply_oe_bias(oe_true, {cfg.oe_alpha, cfg.oe_epsilon_sd}, group_seed(kOeGroup));
    const auto dc_true = sample_true_wtp(cfg.truth, cfg.n_per_group, group_seed(kDcGroup));
    const auto dc = simulate_dc_responses(dc_true, grid, cfg.theta, group_seed(kDcGroup));
    const auto bdm = sample_true_wtp(cfg.truth, cfg.n_per_group, group_seed(kBdmGroup));
    bdm_mean = sample_mean(bdm);
    dc_mean = estimate_dc_mean(dc.dataset, cfg.dc_mean_mode, cfg.nonparametric_rule);
  } catch (const WtpError&) {
    return out;
  }
  out.trace.bdm_mean = bdm_mean;
  out.trace.dc_mean = dc_mean;

  for (std::size_t k = 0; k < kProcedures.size(); ++k) {
    try {
      DebiasConfig dcfg;
      dcfg.procedure = kProcedures[k];
      if (dcfg.procedure == Procedure::kFull) dcfg.cov = theoretical_cov(bdm_mean, dc_mean);
      dcfg.seed = group_seed(kDebiasNoise);
      const auto est = debias(*oe, dc_mean, dcfg);
      const auto values = est.debiased.values();
      const Money mean = sample_mean(values);
      if (dcfg.procedure == Procedure::kBasic) {
        out.trace.basic_mean = mean;
        out.trace.ok = true;
      }
      const Money p_max = 2.0 * *std::max_element(values.begin(), values.end());
      const auto opt = optimize_price(fit_sample_logistic(values, cfg.plan.full_grid),
                                      cfg.market, p_max);
      out.by_procedure[k] = std::array<double, 4>{mean, opt.price, opt.quantity, opt.profit};
    } catch (const WtpError&) {
    }
  }
  return out;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult result;
  result.mode = cfg.dc_mean_mode;
  result.truth = truth_summary(cfg.truth, cfg.market);
  result.grid_sets = build_grid_sets(cfg.plan);

  for (std::size_t set = 0; set < result.grid_sets.size(); ++set) {
    const auto& grid = result.grid_sets[set];
    // values[procedure][metric] over successful replicates
    std::array<std::array<std::vector<double>, 4>, 3> values;
    std::array<std::size_t, 3> failed{};
    for (std::size_t rep = 0; rep < cfg.n_samples; ++rep) {
      auto outcome = run_replicate(cfg, grid, set, rep);
      result.traces.push_back(outcome.trace);
      for (std::size_t k = 0; k < kProcedures.size(); ++k) {
        if (!outcome.by_procedure[k]) {
          ++failed[k];
          continue;
        }
        for (std::size_t m = 0; m < kMetrics.size(); ++m) {
          values[k][m].push_back((*outcome.by_procedure[k])[m]);
        }
      }
    }
    for (std::size_t k = 0; k < kProcedures.size(); ++k) {
      for (std::size_t m = 0; m < kMetrics.size(); ++m) {
        StudyCell c;
        c.grid_set = set;
        c.levels = grid.size();
        c.procedure = kProcedures[k];
        c.mode = cfg.dc_mean_mode;
        c.metric = kMetrics[m];
        c.true_value = result.truth.value(kMetrics[m]);
        c.replicates = values[k][m].size();
        c.failed = failed[k];
        c.flagged = static_cast<double>(failed[k]) > 0.2 * static_cast<double>(cfg.n_samples);
        if (!values[k][m].empty()) {
          c.estimate = sample_mean(values[k][m]);
          c.ci = percentile_interval(values[k][m], cfg.confidence);
        } else {
          c.estimate = c.ci.lower = c.ci.upper = NAN;
        }
        result.cells.push_back(c);
      }
    }
  }
  return result;
}

NarrowingReport narrowing_threshold_report(std::span<const StudyResult> results,
                                           const TruncatedNormalSpec& truth) {
  NarrowingReport report;
  std::ostringstream os;
  for (const auto& r : results) {
    if (r.grid_sets.size() < 2) {
      report.sufficient_sets = false;
      os << to_string(r.mode) << ": insufficient grid sets (" << r.grid_sets.size()
         << ") to locate a breakdown\n";
      continue;
    }
    for (Procedure p : kProcedures) {
      NarrowingFinding f;
      f.procedure = p;
      f.mode = r.mode;
      for (std::size_t s = 0; s < r.grid_sets.size(); ++s) {
        const auto& c = r.cell(s, p, Metric::kMeanWtp);
        if (!c.covers_truth()) {
          const auto& g = r.grid_sets[s];
          f.breakdown_set = s;
          f.breakdown_levels = g.size();
          const double width = g.back() - g.front();
          f.narrowing_pct = std::max(0.0, 100.0 * (1.0 - width / (truth.high - truth.low)));
          break;
        }
      }
      os << to_string(r.mode) << " " << to_string(p) << ": ";
      if (f.breakdown_set) {
        os << "breakdown at set " << *f.breakdown_set << " (" << *f.breakdown_levels
           << " levels, " << static_cast<int>(std::lround(*f.narrowing_pct))
           << "% narrower than the true WTP range)\n";
      } else {
        os << "no breakdown across " << r.grid_sets.size() << " sets\n";
      }
      report.findings.push_back(f);
    }
  }
  report.summary = os.str();
  return report;
}

}  // namespace wtp
