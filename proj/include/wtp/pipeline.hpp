#ifndef WTP_PIPELINE_HPP_
#define WTP_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wtp/debias.hpp"
#include "wtp/inference.hpp"
#include "wtp/io.hpp"
#include "wtp/simulation.hpp"
#include "wtp/study.hpp"

namespace wtp {

inline constexpr std::string_view kVersion = "0.1.0";

/// Either (min, max, step) or an explicit level list.
struct GridDecl {
  std::optional<Money> min, max, step;
  std::vector<Money> levels;

  bool empty() const { return !min && levels.empty(); }
  /// Throws INVALID_CONFIG unless max > min and step divides the range.
  std::vector<Money> resolve() const;
};

/// Scenario behind `simulate`.
struct SimulationScenario {
  TruncatedNormalSpec truth;
  std::size_t n_per_group = 250;
  OeBiasSpec oe_bias{0.5 * 45.758, 0.0};
  double theta_neg_width = 1.0;
  double theta_pos_width = 2.0;
};

struct StudySettings {
  std::string mode = "both";  // parametric | nonparametric | both
  std::size_t n_samples = 1000;
  std::size_t n_per_group = 250;
  std::size_t n_sets = 10;
  Money oe_alpha = 0.5 * 45.758;
  Money oe_epsilon_sd = 0.0;
  double confidence = 0.95;
};

struct RunConfig {
  std::optional<std::filesystem::path> oe, dc, bdm, debiased, input;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  GridDecl grid;
  DebiasConfig debias;
  /// Overrides the DC mean estimated from the DC file.
  std::optional<Money> dc_mean;
  DcMeanMode dc_mean_mode = DcMeanMode::kParametric;
  NonparametricRule nonparametric_rule = NonparametricRule::kLinearInterpolation;
  MarketConfig market;
  BootstrapSettings bootstrap;
  SimulationScenario simulation;
  StudySettings study;

  void validate() const;
};

/// Accepts a config document or a run manifest (its "config" member).
RunConfig run_config_from_json(const io::Json& j);
io::Json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr std::string_view kSubcommands[] = {"simulate", "debias",   "estimate",
                                                   "optimize", "study", "report"};

/// Runs one subcommand, writing outputs and manifest.json into cfg.out.
/// Returns the exit status: 0 success, 2 validation error, 3 estimation
/// failure. Errors are also written as JSON to `err` and error.json.
int run_pipeline(const RunConfig& cfg, std::string_view subcommand, std::ostream& out,
                 std::ostream& err);

}  // namespace wtp

#endif  // WTP_PIPELINE_HPP_
