#include "wtp/debias.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wtp/demand.hpp"
#include "wtp/pricing.hpp"
#include "wtp/random.hpp"

namespace wtp {

std::string_view to_string(Procedure p) {
  switch (p) {
    case Procedure::kBasic: return "BASIC";
    case Procedure::kEpsilon: return "EPSILON";
    case Procedure::kFull: return "FULL";
  }
  return "UNKNOWN";
}

Procedure procedure_from_string(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto p : {Procedure::kBasic, Procedure::kEpsilon, Procedure::kFull}) {
    if (to_string(p) == upper) return p;
  }
  throw WtpError(ErrorCode::kInvalidConfig, "unknown procedure '" + std::string(text) + "'");
}

Label debiased_label(Procedure p) {
  switch (p) {
    case Procedure::kBasic: return Label::kDebiasedBasic;
    case Procedure::kEpsilon: return Label::kDebiasedEpsilon;
    case Procedure::kFull: return Label::kDebiasedFull;
  }
  return Label::kDebiasedBasic;
}

void DebiasConfig::validate() const {
  if (procedure == Procedure::kFull && !cov) {
    throw WtpError(ErrorCode::kInvalidConfig, "FULL de-biasing needs cov(theta, p)");
  }
  if (cov && !std::isfinite(*cov)) throw WtpError(ErrorCode::kInvalidConfig, "cov must be finite");
  if (epsilon_sd && (!std::isfinite(*epsilon_sd) || *epsilon_sd < 0.0)) {
    throw WtpError(ErrorCode::kInvalidConfig, "epsilon_sd must be finite and >= 0");
  }
}

DebiasEstimate debias(const WtpSample& oe, Money dc_mean, const DebiasConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(dc_mean)) throw WtpError(ErrorCode::kInvalidConfig, "dc_mean must be finite");

  const Money oe_mean = sample_mean(oe);
  const Money cov = cfg.procedure == Procedure::kFull ? *cfg.cov : 0.0;
  const Money eps_sd = cfg.procedure == Procedure::kBasic
                           ? 0.0
                           : cfg.epsilon_sd.value_or(sample_sd(oe.values()));

  Engine eng = make_engine(cfg.seed, Stream::kDebiasEpsilon);
  std::normal_distribution<double> z(0.0, 1.0);
  const Money shift = -oe_mean + dc_mean + cov;
  std::vector<Money> out;
  out.reserve(oe.size());
  for (Money stated : oe.values()) {
    const double eps = eps_sd * z(eng);
    double v = stated + shift - eps;
    if (cfg.clamp_at_zero) v = std::max(v, 0.0);
    out.push_back(v);
  }
  return DebiasEstimate{oe_mean - dc_mean - cov, oe_mean, dc_mean, cov, eps_sd,
                        oe.relabeled(debiased_label(cfg.procedure), std::move(out))};
}

std::vector<SweepPoint> cov_sensitivity_sweep(const WtpSample& oe, Money dc_mean, Money cov_lo,
                                              Money cov_hi, std::size_t steps,
                                              const DebiasConfig& base,
                                              std::span<const Money> grid,
                                              const MarketConfig& market,
                                              Money benchmark_profit,
                                              const SweepOptions& options) {
  if (!(cov_lo < cov_hi)) throw WtpError(ErrorCode::kInvalidConfig, "sweep needs cov_lo < cov_hi");
  if (steps < 2) throw WtpError(ErrorCode::kInvalidConfig, "sweep needs >= 2 steps");
  std::vector<SweepPoint> out;
  out.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    const Money cov = k + 1 == steps ? cov_hi : cov_lo + t * (cov_hi - cov_lo);
    DebiasConfig cfg = base;
    cfg.procedure = Procedure::kFull;
    cfg.cov = cov;
    const auto est = debias(oe, dc_mean, cfg);
    const auto values = est.debiased.values();
    const Money p_max =
        options.p_max.value_or(2.0 * *std::max_element(values.begin(), values.end()));
    const auto opt = optimize_price(fit_sample_logistic(values, grid), market, p_max);
    out.push_back({cov, opt.price, opt.profit, opt.profit - benchmark_profit});
  }
  return out;
}

}  // namespace wtp
