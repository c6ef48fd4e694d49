#ifndef WTP_SIMULATION_HPP_
#define WTP_SIMULATION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "wtp/core.hpp"

namespace wtp {

/// Normal(mean, sd^2) restricted to [low, high].
struct TruncatedNormalSpec {
  Money mean = 50.0;
  Money sd = 10.0;
  Money low = 15.0;
  Money high = 85.0;

  /// Throws DEGENERATE_SPEC when the truncation window carries no mass.
  void validate() const;
  /// Probability mass of the parent normal inside [low, high].
  double window_mass() const;
  Money analytic_mean() const;
  /// Pr(X >= p).
  double survival(Money p) const;
};

struct OeBiasSpec {
  Money alpha = 0.0;
  Money epsilon_sd = 0.0;
};

/// One simulated DC respondent with the quantities an analyst never sees.
struct LatentDcResponse {
  Money true_wtp = 0.0;
  Money cue = 0.0;
  double theta = 0.0;
  Money stated = 0.0;
  bool accept = false;
};

/// stated = theta * (cue - true_wtp) + true_wtp.
inline Money anchored_statement(Money true_wtp, Money cue, double theta) {
  return theta * (cue - true_wtp) + true_wtp;
}

struct DcSimulation {
  DcDataset dataset;
  std::vector<LatentDcResponse> latent;
};

std::vector<Money> draw_truncated_normal(const TruncatedNormalSpec& spec, std::size_t n,
                                         std::uint64_t seed);

WtpSample sample_true_wtp(const TruncatedNormalSpec& spec, std::size_t n, std::uint64_t seed);

/// Stated OE values p_i + alpha + eps_i, eps_i ~ Normal(0, epsilon_sd^2).
WtpSample apply_oe_bias(const WtpSample& true_wtp, const OeBiasSpec& spec,
                        std::uint64_t seed);

std::vector<double> sample_theta(const ThetaDistribution& dist, std::size_t n,
                                 std::uint64_t seed);

/// Assigns each respondent a uniformly random cue from `grid` and an
/// independent theta; accepts when the anchored statement is >= the cue.
DcSimulation simulate_dc_responses(const WtpSample& true_wtp, std::span<const Money> grid,
                                   const ThetaDistribution& theta_dist, std::uint64_t seed);

}  // namespace wtp

#endif  // WTP_SIMULATION_HPP_
