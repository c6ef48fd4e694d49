#include "wtp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "wtp/random.hpp"

namespace wtp {

namespace {

const boost::math::normal kStdNormal;

double std_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double std_pdf(double z) { return boost::math::pdf(kStdNormal, z); }

constexpr double kMinWindowMass = 1e-12;
// Below this acceptance rate rejection sampling is replaced by inversion.
constexpr double kRejectionFloor = 0.01;

}  // namespace

double TruncatedNormalSpec::window_mass() const {
  if (sd == 0.0) return (low <= mean && mean <= high) ? 1.0 : 0.0;
  return std_cdf((high - mean) / sd) - std_cdf((low - mean) / sd);
}

void TruncatedNormalSpec::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !std::isfinite(low) ||
      !std::isfinite(high) || sd < 0.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "truncated normal parameters must be finite, sd >= 0");
  }
  if (!(low < high)) throw WtpError(ErrorCode::kInvalidConfig, "truncation requires low < high");
  if (sd == 0.0) {
    if (!(low <= mean && mean <= high)) {
      throw WtpError(ErrorCode::kDegenerateSpec, "point mass lies outside the truncation window");
    }
    return;
  }
  if (!(window_mass() > kMinWindowMass)) {
    throw WtpError(ErrorCode::kDegenerateSpec, "truncation window has ~0 probability");
  }
}

Money TruncatedNormalSpec::analytic_mean() const {
  validate();
  if (sd == 0.0) return mean;
  const double a = (low - mean) / sd, b = (high - mean) / sd;
  return mean + sd * (std_pdf(a) - std_pdf(b)) / window_mass();
}

double TruncatedNormalSpec::survival(Money p) const {
  if (p <= low) return 1.0;
  if (p > high) return 0.0;
  if (sd == 0.0) return p <= mean ? 1.0 : 0.0;
  const double b = (high - mean) / sd;
  return (std_cdf(b) - std_cdf((p - mean) / sd)) / window_mass();
}

std::vector<Money> draw_truncated_normal(const TruncatedNormalSpec& spec, std::size_t n,
                                         std::uint64_t seed) {
  spec.validate();
  std::vector<Money> out;
  out.reserve(n);
  if (spec.sd == 0.0) {
    out.assign(n, spec.mean);
    return out;
  }
  Engine eng = make_engine(seed, Stream::kTrueWtp);
  const double mass = spec.window_mass();
  if (mass >= kRejectionFloor) {
    std::normal_distribution<double> normal(spec.mean, spec.sd);
    while (out.size() < n) {
      const double x = normal(eng);
      if (x >= spec.low && x <= spec.high) out.push_back(x);
    }
    return out;
  }
  const double lo = std_cdf((spec.low - spec.mean) / spec.sd);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = lo + unif(eng) * mass;
    double z = boost::math::quantile(kStdNormal, std::clamp(u, 1e-300, 1.0 - 1e-16));
    out.push_back(std::clamp(spec.mean + spec.sd * z, spec.low, spec.high));
  }
  return out;
}

WtpSample sample_true_wtp(const TruncatedNormalSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw WtpError(ErrorCode::kEmptyInput, "sample size must be >= 1");
  return WtpSample(Label::kSimulatedTrue, draw_truncated_normal(spec, n, seed));
}

WtpSample apply_oe_bias(const WtpSample& true_wtp, const OeBiasSpec& spec,
                        std::uint64_t seed) {
  if (!std::isfinite(spec.alpha) || !std::isfinite(spec.epsilon_sd) || spec.epsilon_sd < 0.0) {
    throw WtpError(ErrorCode::kInvalidConfig, "OE bias needs finite alpha and epsilon_sd >= 0");
  }
  Engine eng = make_engine(seed, Stream::kOeNoise);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Money> stated;
  stated.reserve(true_wtp.size());
  for (Money p : true_wtp.values()) {
    // Draw even when epsilon_sd == 0 so the stream layout is parameter-free.
    const double eps = spec.epsilon_sd * z(eng);
    stated.push_back(p + spec.alpha + eps);
  }
  return true_wtp.relabeled(Label::kOe, std::move(stated));
}

std::vector<double> sample_theta(const ThetaDistribution& dist, std::size_t n,
                                 std::uint64_t seed) {
  Engine eng = make_engine(seed, Stream::kTheta);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double below = dist.mass_below_zero();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(eng);
    if (u < below) {
      out.push_back(-dist.neg_width() + (u / below) * dist.neg_width());
    } else {
      out.push_back(((u - below) / (1.0 - below)) * dist.pos_width());
    }
  }
  return out;
}

DcSimulation simulate_dc_responses(const WtpSample& true_wtp, std::span<const Money> grid,
                                   const ThetaDistribution& theta_dist, std::uint64_t seed) {
  validate_grid(grid);
  const auto thetas = sample_theta(theta_dist, true_wtp.size(), seed);
  Engine eng = make_engine(seed, Stream::kCue);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);

  std::vector<DcRecord> records;
  std::vector<LatentDcResponse> latent;
  records.reserve(true_wtp.size());
  latent.reserve(true_wtp.size());
  for (std::size_t i = 0; i < true_wtp.size(); ++i) {
    LatentDcResponse r;
    r.true_wtp = true_wtp.values()[i];
    r.cue = grid[pick(eng)];
    r.theta = thetas[i];
    r.stated = anchored_statement(r.true_wtp, r.cue, r.theta);
    r.accept = r.stated >= r.cue;
    records.push_back({r.cue, r.accept});
    latent.push_back(r);
  }
  return {DcDataset(std::move(records), std::vector<Money>(grid.begin(), grid.end()),
                    true_wtp.respondent_ids()),
          std::move(latent)};
}

}  // namespace wtp
