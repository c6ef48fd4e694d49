#include "wtp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "wtp/random.hpp"

namespace wtp {

void BootstrapSettings::validate() const {
  if (reps < 100) throw WtpError(ErrorCode::kInvalidConfig, "bootstrap needs reps >= 100");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw WtpError(ErrorCode::kInvalidConfig, "confidence must lie in (0, 1)");
  }
}

std::size_t source_size(const DataSource& source) {
  return std::visit([](const auto& s) { return s.size(); }, source);
}

std::vector<double> Statistic::operator()(const DataSource& source) const {
  if (const auto* s = std::get_if<WtpSample>(&source)) {
    if (!on_values) {
      throw WtpError(ErrorCode::kInvalidConfig, "statistic '" + name + "' is undefined on WTP samples");
    }
    return on_values(s->values());
  }
  if (!on_dc) {
    throw WtpError(ErrorCode::kInvalidConfig, "statistic '" + name + "' is undefined on DC data");
  }
  return on_dc(std::get<DcDataset>(source));
}

namespace statistics {

Statistic mean() {
  return {"mean", [](std::span<const Money> v) { return std::vector<double>{sample_mean(v)}; },
          {}};
}

Statistic parametric_dc_mean() {
  return {"parametric_dc_mean", {}, [](const DcDataset& d) {
            return std::vector<double>{wtp::parametric_dc_mean(fit_dc_logistic(d))};
          }};
}

Statistic nonparametric_dc_mean(NonparametricRule rule) {
  return {"nonparametric_dc_mean", {}, [rule](const DcDataset& d) {
            return std::vector<double>{wtp::nonparametric_dc_mean(dc_choice_shares(d), rule)};
          }};
}

}  // namespace statistics

DataSource canonicalize(const DataSource& source) {
  if (const auto* s = std::get_if<WtpSample>(&source)) {
    std::vector<std::size_t> idx(s->size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto vals = s->values();
    const auto& ids = s->respondent_ids();
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
      if (ids) return std::tie((*ids)[l], vals[l]) < std::tie((*ids)[r], vals[r]);
      return vals[l] < vals[r];
    });
    std::vector<Money> v;
    v.reserve(idx.size());
    for (auto i : idx) v.push_back(vals[i]);
    if (!ids) return WtpSample(s->label(), std::move(v));
    std::vector<std::string> new_ids;
    for (auto i : idx) new_ids.push_back((*ids)[i]);
    return WtpSample(s->label(), std::move(v), std::move(new_ids));
  }
  const auto& d = std::get<DcDataset>(source);
  const auto recs = d.records();
  const auto& ids = d.respondent_ids();
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
    const auto key = [&](std::size_t i) { return std::make_tuple(recs[i].price_cue, recs[i].accept); };
    if (ids) return std::tie((*ids)[l], recs[l].price_cue) < std::tie((*ids)[r], recs[r].price_cue);
    return key(l) < key(r);
  });
  std::vector<DcRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(recs[i]);
  std::vector<Money> grid(d.grid().begin(), d.grid().end());
  if (!ids) return DcDataset(std::move(out), std::move(grid));
  std::vector<std::string> new_ids;
  for (auto i : idx) new_ids.push_back((*ids)[i]);
  return DcDataset(std::move(out), std::move(grid), std::move(new_ids));
}

namespace {

// Resample of a canonicalized source, driven by one engine.
DataSource resample(const DataSource& canonical, Engine& eng) {
  const std::size_t n = source_size(canonical);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  if (const auto* s = std::get_if<WtpSample>(&canonical)) {
    std::vector<Money> v(n);
    for (auto& x : v) x = s->values()[pick(eng)];
    return WtpSample(s->label(), std::move(v));
  }
  const auto& d = std::get<DcDataset>(canonical);
  std::vector<DcRecord> r(n);
  for (auto& x : r) x = d.records()[pick(eng)];
  return d.with_records(std::move(r));
}

constexpr double kMaxFailedShare = 0.2;

void check_failures(std::size_t failed, std::size_t reps) {
  if (static_cast<double>(failed) > kMaxFailedShare * static_cast<double>(reps)) {
    throw WtpError(ErrorCode::kTooManyFailedReplicates,
                   std::to_string(failed) + " of " + std::to_string(reps) +
                       " bootstrap replicates failed");
  }
}

}  // namespace

BootstrapResult bootstrap_ci(const DataSource& source, const Statistic& statistic,
                             const BootstrapSettings& cfg) {
  cfg.validate();
  if (source_size(source) < 2) throw WtpError(ErrorCode::kEmptyInput, "bootstrap needs n >= 2");
  const DataSource canonical = canonicalize(source);
  BootstrapResult out;
  out.point = statistic(canonical);
  out.replicates.assign(out.point.size(), {});
  for (auto& r : out.replicates) r.reserve(cfg.reps);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    Engine eng = make_engine(cfg.seed, Stream::kBootstrap, r);
    try {
      const auto value = statistic(resample(canonical, eng));
      for (std::size_t k = 0; k < value.size(); ++k) out.replicates[k].push_back(value[k]);
    } catch (const WtpError&) {
      ++out.failed;
    }
  }
  check_failures(out.failed, cfg.reps);
  for (const auto& reps : out.replicates) {
    out.intervals.push_back(percentile_interval(reps, cfg.confidence));
  }
  return out;
}

double bootstrap_p_value(std::span<const double> differences, std::size_t reps) {
  if (differences.empty()) return 1.0;
  const double n = static_cast<double>(differences.size());
  const double le = static_cast<double>(
      std::count_if(differences.begin(), differences.end(), [](double d) { return d <= 0.0; }));
  const double ge = static_cast<double>(
      std::count_if(differences.begin(), differences.end(), [](double d) { return d >= 0.0; }));
  const double p = 2.0 * std::min(le, ge) / n;
  return std::clamp(p, 1.0 / static_cast<double>(reps), 1.0);
}

BootstrapDifference bootstrap_difference(const DataSource& a, const DataSource& b,
                                         const Statistic& statistic,
                                         const BootstrapSettings& cfg) {
  return bootstrap_difference(a, b, statistic, statistic, cfg);
}

BootstrapDifference bootstrap_difference(const DataSource& a, const DataSource& b,
                                         const Statistic& statistic_a,
                                         const Statistic& statistic_b,
                                         const BootstrapSettings& cfg) {
  cfg.validate();
  const DataSource ca = canonicalize(a), cb = canonicalize(b);
  const auto pa = statistic_a(ca), pb = statistic_b(cb);
  if (pa.size() != pb.size()) {
    throw WtpError(ErrorCode::kInvalidConfig, "statistic dimension differs between sources");
  }
  BootstrapDifference out;
  out.differences.assign(pa.size(), {});
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    Engine ea = make_engine(cfg.seed, Stream::kBootstrap, 2 * r);
    Engine eb = make_engine(cfg.seed, Stream::kBootstrap, 2 * r + 1);
    try {
      const auto va = statistic_a(resample(ca, ea));
      const auto vb = statistic_b(resample(cb, eb));
      for (std::size_t k = 0; k < va.size(); ++k) out.differences[k].push_back(va[k] - vb[k]);
    } catch (const WtpError&) {
      ++out.failed;
    }
  }
  check_failures(out.failed, cfg.reps);
  for (std::size_t k = 0; k < pa.size(); ++k) {
    TestResult t;
    t.kind = TestKind::kBootstrapDifference;
    t.statistic = pa[k] - pb[k];
    t.p_value = bootstrap_p_value(out.differences[k], cfg.reps);
    out.tests.push_back(t);
    out.difference_intervals.push_back(percentile_interval(out.differences[k], cfg.confidence));
  }
  return out;
}

TestResult bootstrap_difference_test(const DataSource& a, const DataSource& b,
                                     const Statistic& statistic, const BootstrapSettings& cfg) {
  return bootstrap_difference(a, b, statistic, cfg).tests.front();
}

double welch_df(double var_a, std::size_t n_a, double var_b, std::size_t n_b) {
  const double sa = var_a / static_cast<double>(n_a);
  const double sb = var_b / static_cast<double>(n_b);
  return (sa + sb) * (sa + sb) /
         (sa * sa / static_cast<double>(n_a - 1) + sb * sb / static_cast<double>(n_b - 1));
}

TestResult welch_t_test(std::span<const Money> a, std::span<const Money> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw WtpError(ErrorCode::kEmptyInput, "Welch test needs >= 2 values per sample");
  }
  const double sa = sample_sd(a), sb = sample_sd(b);
  if (!(sa > 0.0) || !(sb > 0.0)) {
    throw WtpError(ErrorCode::kZeroVariance, "Welch test needs positive variance in both samples");
  }
  const double va = sa * sa, vb = sb * sb;
  const double se = std::sqrt(va / static_cast<double>(a.size()) + vb / static_cast<double>(b.size()));
  TestResult t;
  t.kind = TestKind::kWelchT;
  t.statistic = (sample_mean(a) - sample_mean(b)) / se;
  t.df = welch_df(va, a.size(), vb, b.size());
  const boost::math::students_t dist(*t.df);
  t.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t.statistic))),
                         0.0, 1.0);
  return t;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0, prev_term = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-12 * std::abs(prev_term) || std::abs(term) <= 1e-16 * sum) {
      return std::clamp(sum, 0.0, 1.0);
    }
    sign = -sign;
    prev_term = term;
  }
  // Series did not settle: lambda is tiny, Q is 1.
  return 1.0;
}

TestResult ks_two_sample(std::span<const Money> a, std::span<const Money> b) {
  if (a.empty() || b.empty()) throw WtpError(ErrorCode::kEmptyInput, "KS test needs two samples");
  std::vector<Money> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  // Walk the pooled support; at each distinct point both ECDFs absorb all ties.
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double x = (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) ? sa[i] : sb[j];
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  TestResult t;
  t.kind = TestKind::kKsTwoSample;
  t.statistic = d;
  t.p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
  return t;
}

TestResult lr_test_cells(std::span<const BinomialCell> first, std::span<const BinomialCell> second) {
  const auto m1 = fit_logistic(first);
  const auto m2 = fit_logistic(second);
  std::vector<BinomialCell> pooled(first.begin(), first.end());
  pooled.insert(pooled.end(), second.begin(), second.end());
  const auto mp = fit_logistic(pooled);
  TestResult t;
  t.kind = TestKind::kLikelihoodRatio;
  // Nested models: negative values are rounding noise.
  t.statistic = std::max(0.0, 2.0 * (m1.log_likelihood + m2.log_likelihood - mp.log_likelihood));
  t.df = 2.0;
  const boost::math::chi_squared chi2(2.0);
  t.p_value = boost::math::cdf(boost::math::complement(chi2, t.statistic));
  return t;
}

TestResult lr_test_dc(const DcDataset& d1, const DcDataset& d2) {
  return lr_test_cells(dc_cells(d1), dc_cells(d2));
}

TestResult lr_test_dc(const DcDataset& d1, const WtpSample& s2) {
  return lr_test_cells(dc_cells(d1), expand_sample_to_cells(s2.values(), d1.grid()));
}

}  // namespace wtp
