// Command-line front end: wtpdebias <subcommand> [options]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "wtp/pipeline.hpp"

namespace {

// Monetary flags arrive as text and go through the same decimal parser as
// config files.
wtp::Money money_flag(const std::string& name, const std::string& text) {
  const auto v = wtp::io::parse_decimal(text);
  if (!v) throw wtp::WtpError(wtp::ErrorCode::kInvalidConfig, "--" + name + ": cannot parse '" + text + "'");
  return *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De-bias willingness-to-pay survey data, estimate demand and set prices"};
  app.set_version_flag("--version", std::string(wtp::kVersion));

  std::string subcommand;
  std::optional<std::string> oe, dc, bdm, debiased, input, config, procedure, cov, dc_mean,
      dc_mean_mode, mode, out;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;

  app.add_option("subcommand", subcommand, "simulate | debias | estimate | optimize | study | report")
      ->required()
      ->check(CLI::IsMember({"simulate", "debias", "estimate", "optimize", "study", "report"}));
  app.add_option("--oe", oe, "OE sample CSV (respondent_id,stated_wtp)");
  app.add_option("--dc", dc, "DC responses CSV (respondent_id,price_cue,accept)");
  app.add_option("--bdm", bdm, "BDM sample CSV (respondent_id,stated_wtp)");
  app.add_option("--debiased", debiased, "already de-biased sample CSV");
  app.add_option("--input", input, "JSON report to re-render (report)");
  app.add_option("--config", config, "JSON config or a previous run's manifest.json");
  app.add_option("--procedure", procedure, "basic | epsilon | full");
  app.add_option("--cov", cov, "cov(theta, p) for FULL");
  app.add_option("--dc-mean", dc_mean, "use this DC mean instead of estimating it");
  app.add_option("--dc-mean-mode", dc_mean_mode, "parametric | nonparametric")
      ->check(CLI::IsMember({"parametric", "nonparametric"}));
  app.add_option("--mode", mode, "study: parametric | nonparametric | both")
      ->check(CLI::IsMember({"parametric", "nonparametric", "both"}));
  app.add_option("--reps", reps, "bootstrap replicates (study: simulation replicates)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  wtp::RunConfig cfg;
  try {
    if (config) cfg = wtp::load_run_config(*config);
    if (oe) cfg.oe = *oe;
    if (dc) cfg.dc = *dc;
    if (bdm) cfg.bdm = *bdm;
    if (debiased) cfg.debiased = *debiased;
    if (input) cfg.input = *input;
    if (out) cfg.out = *out;
    if (seed) cfg.seed = *seed;
    if (procedure) cfg.debias.procedure = wtp::procedure_from_string(*procedure);
    if (cov) cfg.debias.cov = money_flag("cov", *cov);
    if (dc_mean) cfg.dc_mean = money_flag("dc-mean", *dc_mean);
    if (dc_mean_mode) cfg.dc_mean_mode = wtp::dc_mean_mode_from_string(*dc_mean_mode);
    if (mode) cfg.study.mode = *mode;
    if (reps) {
      if (subcommand == "study") cfg.study.n_samples = *reps;
      else cfg.bootstrap.reps = *reps;
    }
  } catch (const wtp::WtpError& e) {
    std::cerr << wtp::io::Json{{"error", wtp::to_string(e.code())}, {"message", e.what()}}.dump(2)
              << '\n';
    return wtp::is_validation_error(e.code()) ? 2 : 3;
  }
  return wtp::run_pipeline(cfg, subcommand, std::cout, std::cerr);
}
