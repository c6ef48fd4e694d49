#include "wtp/demand.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "wtp/random.hpp"

namespace wtp {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

DemandCurve empirical_survival(const WtpSample& s) {
  std::vector<Money> sorted(s.values().begin(), s.values().end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Money> prices = sorted;
  prices.push_back(0.0);
  std::sort(prices.begin(), prices.end());
  prices.erase(std::unique(prices.begin(), prices.end()), prices.end());

  const double n = static_cast<double>(sorted.size());
  DemandCurve curve{CurveKind::kNonparametricSurvival, {}};
  curve.points.reserve(prices.size());
  for (Money p : prices) {
    const auto at_least = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), p);
    curve.points.push_back({p, static_cast<double>(at_least) / n, 0});
  }
  return curve;
}

double survival_at(std::span<const Money> values, Money price) {
  if (values.empty()) throw WtpError(ErrorCode::kEmptyInput, "survival of empty sample");
  const auto at_least = std::count_if(values.begin(), values.end(),
                                      [price](Money v) { return v >= price; });
  return static_cast<double>(at_least) / static_cast<double>(values.size());
}

double survival_area(const DemandCurve& survival) {
  // q is constant on (p_k, p_k+1] and equals the share recorded at p_k+1.
  double area = 0.0;
  const auto& pts = survival.points;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (pts[k + 1].price <= 0.0) continue;
    const double from = std::max(pts[k].price, 0.0);
    area += (pts[k + 1].price - from) * pts[k + 1].share;
  }
  return area;
}

DemandCurve dc_choice_shares(const DcDataset& d, std::vector<Money>* empty_levels) {
  const auto grid = d.grid();
  std::vector<std::size_t> yes(grid.size(), 0), total(grid.size(), 0);
  for (const auto& r : d.records()) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(grid.begin(), grid.end(), r.price_cue) - grid.begin());
    ++total[k];
    if (r.accept) ++yes[k];
  }
  DemandCurve curve{CurveKind::kDcChoiceShares, {}};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (total[k] == 0) {
      if (empty_levels) empty_levels->push_back(grid[k]);
      continue;
    }
    curve.points.push_back(
        {grid[k], static_cast<double>(yes[k]) / static_cast<double>(total[k]), total[k]});
  }
  return curve;
}

std::vector<BinomialCell> aggregate_cells(std::span<const PriceResponse> obs) {
  std::map<Money, BinomialCell> by_price;
  for (const auto& o : obs) {
    auto& cell = by_price[o.price];
    cell.price = o.price;
    cell.trials += 1.0;
    if (o.accept) cell.successes += 1.0;
  }
  std::vector<BinomialCell> cells;
  cells.reserve(by_price.size());
  for (const auto& [price, cell] : by_price) cells.push_back(cell);
  return cells;
}

std::vector<BinomialCell> dc_cells(const DcDataset& d) {
  const auto grid = d.grid();
  std::vector<BinomialCell> cells(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) cells[k].price = grid[k];
  for (const auto& r : d.records()) {
    auto& cell = cells[static_cast<std::size_t>(
        std::lower_bound(grid.begin(), grid.end(), r.price_cue) - grid.begin())];
    cell.trials += 1.0;
    if (r.accept) cell.successes += 1.0;
  }
  std::erase_if(cells, [](const BinomialCell& c) { return c.trials == 0.0; });
  return cells;
}

double logistic_log_likelihood(std::span<const BinomialCell> cells, double intercept,
                               double slope) {
  double ll = 0.0;
  for (const auto& c : cells) {
    const double z = intercept + slope * c.price;
    // log q = -softplus(-z), log(1 - q) = -softplus(z)
    ll -= c.successes * softplus(-z) + (c.trials - c.successes) * softplus(z);
  }
  return ll;
}

std::array<double, 2> logistic_score(std::span<const BinomialCell> cells, double intercept,
                                     double slope) {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& c : cells) {
    const double resid = c.successes - c.trials * logistic(intercept + slope * c.price);
    g[0] += resid;
    g[1] += resid * c.price;
  }
  return g;
}

namespace {

Matrix2 information(std::span<const BinomialCell> cells, double a, double b) {
  Matrix2 h;
  for (const auto& c : cells) {
    const double q = logistic(a + b * c.price);
    const double w = c.trials * q * (1.0 - q);
    h.xx += w;
    h.xy += w * c.price;
    h.yy += w * c.price * c.price;
  }
  return h;
}

bool invert(const Matrix2& m, Matrix2& out) {
  const double det = m.xx * m.yy - m.xy * m.xy;
  if (!(det > 0.0) || !std::isfinite(det)) return false;
  out = {m.yy / det, -m.xy / det, m.xx / det};
  return true;
}

void check_design(std::span<const BinomialCell> cells) {
  double successes = 0.0, failures = 0.0;
  std::size_t distinct = 0;
  double max_acc = -INFINITY, min_acc = INFINITY, max_rej = -INFINITY, min_rej = INFINITY;
  Money last = NAN;
  for (const auto& c : cells) {
    if (c.trials < 0.0 || c.successes < 0.0 || c.successes > c.trials ||
        !std::isfinite(c.price)) {
      throw WtpError(ErrorCode::kInvalidConfig, "malformed binomial cell");
    }
    if (c.trials == 0.0) continue;
    if (!(c.price == last)) ++distinct;
    last = c.price;
    successes += c.successes;
    failures += c.trials - c.successes;
    if (c.successes > 0.0) {
      max_acc = std::max(max_acc, c.price);
      min_acc = std::min(min_acc, c.price);
    }
    if (c.trials - c.successes > 0.0) {
      max_rej = std::max(max_rej, c.price);
      min_rej = std::min(min_rej, c.price);
    }
  }
  if (successes + failures == 0.0) throw WtpError(ErrorCode::kEmptyInput, "no observations");
  if (successes == 0.0 || failures == 0.0) {
    throw WtpError(ErrorCode::kNoVariation, "all responses fall in one class");
  }
  if (distinct < 2) {
    throw WtpError(ErrorCode::kInsufficientLevels, "logistic fit needs >= 2 distinct prices");
  }
  // Complete or quasi-complete separation: no finite maximum exists.
  if (max_acc <= min_rej || min_acc >= max_rej) {
    throw WtpError(ErrorCode::kCompleteSeparation,
                   "accept and reject prices are separable; the MLE does not exist");
  }
}

}  // namespace

LogisticDemand fit_logistic(std::span<const BinomialCell> cells,
                            const LogisticFitOptions& options) {
  std::vector<BinomialCell> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& l, const auto& r) { return l.price < r.price; });
  check_design(sorted);

  double s = 0.0, n = 0.0;
  for (const auto& c : sorted) {
    s += c.successes;
    n += c.trials;
  }
  double a = std::log(s / (n - s));
  double b = 0.0;
  double ll = logistic_log_likelihood(sorted, a, b);

  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto g = logistic_score(sorted, a, b);
    if (std::max(std::abs(g[0]), std::abs(g[1])) < options.score_tolerance) {
      LogisticDemand m;
      m.intercept = a;
      m.slope = b;
      m.n_obs = static_cast<std::size_t>(n);
      m.log_likelihood = ll;
      m.iterations = it - 1;
      if (!invert(information(sorted, a, b), m.coef_covariance)) {
        throw WtpError(ErrorCode::kNonConvergence, "information matrix is singular");
      }
      return m;
    }
    Matrix2 inv;
    if (!invert(information(sorted, a, b), inv)) {
      throw WtpError(ErrorCode::kNonConvergence, "information matrix is singular");
    }
    double da = inv.xx * g[0] + inv.xy * g[1];
    double db = inv.xy * g[0] + inv.yy * g[1];
    double next_ll = logistic_log_likelihood(sorted, a + da, b + db);
    for (int halvings = 0; next_ll < ll && halvings < 40; ++halvings) {
      da *= 0.5;
      db *= 0.5;
      next_ll = logistic_log_likelihood(sorted, a + da, b + db);
    }
    a += da;
    b += db;
    ll = next_ll;
    if (std::max(std::abs(da), std::abs(db)) < options.step_tolerance) {
      LogisticDemand m;
      m.intercept = a;
      m.slope = b;
      m.n_obs = static_cast<std::size_t>(n);
      m.log_likelihood = ll;
      m.iterations = it;
      if (!invert(information(sorted, a, b), m.coef_covariance)) {
        throw WtpError(ErrorCode::kNonConvergence, "information matrix is singular");
      }
      return m;
    }
  }
  throw WtpError(ErrorCode::kNonConvergence, "logistic fit did not converge in " +
                                                 std::to_string(options.max_iterations) +
                                                 " iterations");
}

LogisticDemand fit_logistic(std::span<const PriceResponse> obs, const LogisticFitOptions& options) {
  const auto cells = aggregate_cells(obs);
  return fit_logistic(cells, options);
}

std::vector<PriceResponse> expand_sample_to_bernoulli(const WtpSample& s,
                                                      std::span<const Money> grid) {
  validate_grid(grid);
  std::vector<PriceResponse> out;
  out.reserve(s.size() * grid.size());
  for (Money v : s.values()) {
    for (Money level : grid) out.push_back({level, v >= level});
  }
  return out;
}

std::vector<BinomialCell> expand_sample_to_cells(std::span<const Money> values,
                                                 std::span<const Money> grid) {
  validate_grid(grid);
  std::vector<Money> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<BinomialCell> cells;
  cells.reserve(grid.size());
  for (Money level : grid) {
    const auto at_least = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), level);
    cells.push_back({level, static_cast<double>(at_least), n});
  }
  return cells;
}

LogisticDemand fit_sample_logistic(std::span<const Money> values, std::span<const Money> grid) {
  const auto cells = expand_sample_to_cells(values, grid);
  auto m = fit_logistic(cells);
  m.covariance_valid_for_inference = false;
  return m;
}

LogisticDemand fit_dc_logistic(const DcDataset& d) {
  const auto cells = dc_cells(d);
  return fit_logistic(cells);
}

Money parametric_dc_mean(const LogisticDemand& m) {
  if (!(m.slope < 0.0)) {
    throw WtpError(ErrorCode::kNonNegativeSlope, "mean WTP needs a downward-sloping demand");
  }
  return softplus(m.intercept) / -m.slope;
}

Money nonparametric_dc_mean(const DemandCurve& shares, NonparametricRule rule) {
  const auto& pts = shares.points;
  if (pts.empty()) throw WtpError(ErrorCode::kInsufficientLevels, "no DC levels with data");
  if (pts.front().price < 0.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "DC price levels must be >= 0");
  }
  double area = 0.0;
  if (rule == NonparametricRule::kLeftStep) {
    area = pts.front().price;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      area += pts[k].share * (pts[k + 1].price - pts[k].price);
    }
    return area;
  }
  // The lower bound of WTP is zero, where everybody buys.
  Money prev_price = 0.0;
  double prev_share = 1.0;
  std::size_t start = 0;
  if (pts.front().price == 0.0) {
    prev_share = pts.front().share;
    start = 1;
  }
  for (std::size_t k = start; k < pts.size(); ++k) {
    area += 0.5 * (prev_share + pts[k].share) * (pts[k].price - prev_price);
    prev_price = pts[k].price;
    prev_share = pts[k].share;
  }
  return area;
}

KrinskyRobbResult krinsky_robb_ci(const LogisticDemand& m, std::size_t reps, double level,
                                  std::uint64_t seed) {
  if (!(m.slope < 0.0)) {
    throw WtpError(ErrorCode::kNonNegativeSlope, "Krinsky-Robb needs a downward-sloping demand");
  }
  if (!m.coef_covariance.is_psd()) {
    throw WtpError(ErrorCode::kInvalidConfig, "coefficient covariance is not PSD");
  }
  if (reps == 0) throw WtpError(ErrorCode::kInvalidConfig, "reps must be >= 1");
  const auto& c = m.coef_covariance;
  const double l11 = std::sqrt(std::max(c.xx, 0.0));
  const double l21 = l11 > 0.0 ? c.xy / l11 : 0.0;
  const double l22 = std::sqrt(std::max(c.yy - l21 * l21, 0.0));

  Engine eng = make_engine(seed, Stream::kKrinskyRobb);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> means;
  means.reserve(reps);
  std::size_t discarded = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const double z1 = z(eng), z2 = z(eng);
    LogisticDemand draw = m;
    draw.intercept = m.intercept + l11 * z1;
    draw.slope = m.slope + l21 * z1 + l22 * z2;
    if (!(draw.slope < 0.0)) {
      ++discarded;
      continue;
    }
    means.push_back(parametric_dc_mean(draw));
  }
  if (2 * discarded > reps) {
    throw WtpError(ErrorCode::kTooManyDiscards,
                   "more than half of the Krinsky-Robb draws had a non-negative slope");
  }
  return {percentile_interval(std::move(means), level), discarded, reps};
}

}  // namespace wtp
