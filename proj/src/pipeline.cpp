#include "wtp/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "wtp/demand.hpp"
#include "wtp/pricing.hpp"
#include "wtp/random.hpp"

namespace wtp {

namespace fs = std::filesystem;
using io::Json;

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw WtpError(ErrorCode::kInvalidConfig, what);
}

// Monetary fields are decimal strings; other numbers may be plain JSON.
Money money_field(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_string()) bad_config(fmt::format("'{}' must be a decimal string", key));
  const auto parsed = io::parse_decimal(v.get<std::string>());
  if (!parsed || !std::isfinite(*parsed)) {
    bad_config(fmt::format("'{}': cannot parse '{}'", key, v.get<std::string>()));
  }
  return *parsed;
}

std::optional<Money> optional_money(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return money_field(j, key);
}

template <typename T>
void read_number(const Json& j, const char* key, T& target) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  const Json& v = j.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (v.is_string()) {
      const auto p = io::parse_decimal(v.get<std::string>());
      if (!p) bad_config(fmt::format("'{}': cannot parse '{}'", key, v.get<std::string>()));
      target = *p;
      return;
    }
    if (!v.is_number()) bad_config(fmt::format("'{}' must be a number", key));
  } else {
    if (!v.is_number_unsigned()) {
      bad_config(fmt::format("'{}' must be a non-negative integer", key));
    }
  }
  target = v.get<T>();
}

void read_path(const Json& j, const char* key, std::optional<fs::path>& target) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if (!j.at(key).is_string()) bad_config(fmt::format("'{}' must be a path string", key));
  target = fs::path(j.at(key).get<std::string>());
}

std::string_view to_string(NonparametricRule r) {
  return r == NonparametricRule::kLeftStep ? "left_step" : "linear_interpolation";
}

NonparametricRule rule_from_string(std::string_view s) {
  if (s == "left_step") return NonparametricRule::kLeftStep;
  if (s == "linear_interpolation") return NonparametricRule::kLinearInterpolation;
  bad_config(fmt::format("unknown nonparametric rule '{}'", s));
}

Json money_json(std::optional<Money> v) {
  return v ? Json(io::format_decimal(*v)) : Json(nullptr);
}

Json path_json(const std::optional<fs::path>& p) {
  return p ? Json(p->string()) : Json(nullptr);
}

}  // namespace

std::vector<Money> GridDecl::resolve() const {
  if (!levels.empty()) {
    if (min) bad_config("grid: give either min/max/step or levels, not both");
    std::vector<Money> out = levels;
    validate_grid(out);
    return out;
  }
  if (!min || !max || !step) bad_config("grid: min, max and step are all required");
  if (!(*max > *min)) bad_config("grid: max must exceed min");
  if (!(*step > 0.0)) bad_config("grid: step must be positive");
  const double k = (*max - *min) / *step;
  const double n = std::round(k);
  if (std::abs(k - n) > 1e-9 * std::max(1.0, k)) bad_config("grid: step must divide max - min");
  std::vector<Money> out;
  for (long i = 0; i <= static_cast<long>(n); ++i) out.push_back(*min + static_cast<double>(i) * *step);
  out.back() = *max;
  return out;
}

void RunConfig::validate() const {
  if (!grid.empty()) (void)grid.resolve();
  DebiasConfig d = debias;
  if (!d.cov) d.cov = 0.0;  // FULL may still take cov from a BDM sample at run time
  d.validate();
  market.validate();
  bootstrap.validate();
  simulation.truth.validate();
  if (simulation.n_per_group == 0) bad_config("simulation.n_per_group must be positive");
  (void)ThetaDistribution::zero_mean_on(simulation.theta_neg_width, simulation.theta_pos_width);
  if (study.mode != "parametric" && study.mode != "nonparametric" && study.mode != "both") {
    bad_config("study mode must be parametric, nonparametric or both");
  }
  if (dc_mean && !std::isfinite(*dc_mean)) bad_config("dc_mean must be finite");
}

RunConfig run_config_from_json(const Json& doc) {
  if (!doc.is_object()) bad_config("config must be a JSON object");
  const Json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
  RunConfig c;
  try {
    read_path(j, "oe", c.oe);
    read_path(j, "dc", c.dc);
    read_path(j, "bdm", c.bdm);
    read_path(j, "debiased", c.debiased);
    read_path(j, "input", c.input);
    std::optional<fs::path> out;
    read_path(j, "out", out);
    if (out) c.out = *out;
    read_number(j, "seed", c.seed);
    if (j.contains("grid") && !j.at("grid").is_null()) {
      const Json& g = j.at("grid");
      if (g.contains("levels")) {
        for (const auto& v : g.at("levels")) {
          if (!v.is_string()) bad_config("grid levels must be decimal strings");
          const auto p = io::parse_decimal(v.get<std::string>());
          if (!p) bad_config("grid: cannot parse level '" + v.get<std::string>() + "'");
          c.grid.levels.push_back(*p);
        }
      }
      c.grid.min = optional_money(g, "min");
      c.grid.max = optional_money(g, "max");
      c.grid.step = optional_money(g, "step");
    }
    if (j.contains("debias")) {
      const Json& d = j.at("debias");
      if (d.contains("procedure")) {
        c.debias.procedure = procedure_from_string(d.at("procedure").get<std::string>());
      }
      c.debias.cov = optional_money(d, "cov");
      c.debias.epsilon_sd = optional_money(d, "epsilon_sd");
      if (d.contains("clamp_at_zero")) c.debias.clamp_at_zero = d.at("clamp_at_zero").get<bool>();
    }
    c.dc_mean = optional_money(j, "dc_mean");
    if (j.contains("dc_mean_mode")) {
      c.dc_mean_mode = dc_mean_mode_from_string(j.at("dc_mean_mode").get<std::string>());
    }
    if (j.contains("nonparametric_rule")) {
      c.nonparametric_rule = rule_from_string(j.at("nonparametric_rule").get<std::string>());
    }
    if (j.contains("market")) {
      const Json& m = j.at("market");
      if (m.contains("marginal_cost")) c.market.marginal_cost = money_field(m, "marginal_cost");
      read_number(m, "market_size", c.market.market_size);
    }
    if (j.contains("bootstrap")) {
      const Json& b = j.at("bootstrap");
      read_number(b, "reps", c.bootstrap.reps);
      read_number(b, "confidence", c.bootstrap.confidence);
    }
    if (j.contains("simulation")) {
      const Json& s = j.at("simulation");
      if (s.contains("truth")) {
        const Json& t = s.at("truth");
        if (t.contains("mean")) c.simulation.truth.mean = money_field(t, "mean");
        if (t.contains("sd")) c.simulation.truth.sd = money_field(t, "sd");
        if (t.contains("low")) c.simulation.truth.low = money_field(t, "low");
        if (t.contains("high")) c.simulation.truth.high = money_field(t, "high");
      }
      read_number(s, "n_per_group", c.simulation.n_per_group);
      if (s.contains("oe_alpha")) c.simulation.oe_bias.alpha = money_field(s, "oe_alpha");
      if (s.contains("oe_epsilon_sd")) {
        c.simulation.oe_bias.epsilon_sd = money_field(s, "oe_epsilon_sd");
      }
      if (s.contains("theta")) {
        read_number(s.at("theta"), "neg_width", c.simulation.theta_neg_width);
        read_number(s.at("theta"), "pos_width", c.simulation.theta_pos_width);
      }
    }
    if (j.contains("study")) {
      const Json& s = j.at("study");
      if (s.contains("mode")) c.study.mode = s.at("mode").get<std::string>();
      read_number(s, "n_samples", c.study.n_samples);
      read_number(s, "n_per_group", c.study.n_per_group);
      read_number(s, "n_sets", c.study.n_sets);
      if (s.contains("oe_alpha")) c.study.oe_alpha = money_field(s, "oe_alpha");
      if (s.contains("oe_epsilon_sd")) c.study.oe_epsilon_sd = money_field(s, "oe_epsilon_sd");
      read_number(s, "confidence", c.study.confidence);
    }
  } catch (const nlohmann::json::exception& e) {
    bad_config(std::string("config: ") + e.what());
  }
  return c;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["oe"] = path_json(c.oe);
  j["dc"] = path_json(c.dc);
  j["bdm"] = path_json(c.bdm);
  j["debiased"] = path_json(c.debiased);
  j["input"] = path_json(c.input);
  j["out"] = c.out.string();
  j["seed"] = c.seed;
  if (c.grid.empty()) {
    j["grid"] = nullptr;
  } else if (!c.grid.levels.empty()) {
    Json levels = Json::array();
    for (Money v : c.grid.levels) levels.push_back(io::format_decimal(v));
    j["grid"] = {{"levels", levels}};
  } else {
    j["grid"] = {{"min", money_json(c.grid.min)},
                 {"max", money_json(c.grid.max)},
                 {"step", money_json(c.grid.step)}};
  }
  j["debias"] = {{"procedure", to_string(c.debias.procedure)},
                 {"cov", money_json(c.debias.cov)},
                 {"epsilon_sd", money_json(c.debias.epsilon_sd)},
                 {"clamp_at_zero", c.debias.clamp_at_zero}};
  j["dc_mean"] = money_json(c.dc_mean);
  j["dc_mean_mode"] = to_string(c.dc_mean_mode);
  j["nonparametric_rule"] = to_string(c.nonparametric_rule);
  j["market"] = {{"marginal_cost", io::format_decimal(c.market.marginal_cost)},
                 {"market_size", c.market.market_size}};
  j["bootstrap"] = {{"reps", c.bootstrap.reps}, {"confidence", c.bootstrap.confidence}};
  const auto& s = c.simulation;
  j["simulation"] = {{"truth",
                      {{"mean", io::format_decimal(s.truth.mean)},
                       {"sd", io::format_decimal(s.truth.sd)},
                       {"low", io::format_decimal(s.truth.low)},
                       {"high", io::format_decimal(s.truth.high)}}},
                     {"n_per_group", s.n_per_group},
                     {"oe_alpha", io::format_decimal(s.oe_bias.alpha)},
                     {"oe_epsilon_sd", io::format_decimal(s.oe_bias.epsilon_sd)},
                     {"theta", {{"neg_width", s.theta_neg_width}, {"pos_width", s.theta_pos_width}}}};
  j["study"] = {{"mode", c.study.mode},
                {"n_samples", c.study.n_samples},
                {"n_per_group", c.study.n_per_group},
                {"n_sets", c.study.n_sets},
                {"oe_alpha", io::format_decimal(c.study.oe_alpha)},
                {"oe_epsilon_sd", io::format_decimal(c.study.oe_epsilon_sd)},
                {"confidence", c.study.confidence}};
  return j;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(io::read_json(path)); }

namespace {

struct Inputs {
  std::optional<WtpSample> oe, bdm, debiased;
  std::optional<DcDataset> dc;
  std::vector<Money> grid;  // declared grid, may be empty
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  if (!cfg.grid.empty()) in.grid = cfg.grid.resolve();
  if (cfg.oe) in.oe = io::load_wtp_csv(*cfg.oe, Label::kOe);
  if (cfg.bdm) in.bdm = io::load_wtp_csv(*cfg.bdm, Label::kBdm);
  if (cfg.dc) in.dc = io::load_dc_csv(*cfg.dc, in.grid);
  if (cfg.debiased) {
    in.debiased = io::load_wtp_csv(*cfg.debiased, debiased_label(cfg.debias.procedure));
  }
  return in;
}

std::vector<Money> fit_grid(const Inputs& in) {
  if (!in.grid.empty()) return in.grid;
  if (in.dc) return {in.dc->grid().begin(), in.dc->grid().end()};
  return default_study_grid();
}

Money dc_mean_of(const RunConfig& cfg, const Inputs& in) {
  if (cfg.dc_mean) return *cfg.dc_mean;
  if (!in.dc) bad_config("a DC mean is required: supply --dc or --dc-mean");
  return estimate_dc_mean(*in.dc, cfg.dc_mean_mode, cfg.nonparametric_rule);
}

struct DebiasRun {
  DebiasEstimate estimate;
  DebiasConfig config;
  std::string source;  // table label
};

DebiasRun run_debias_step(const RunConfig& cfg, const Inputs& in, std::ostream& err) {
  if (!in.oe) bad_config("de-biasing needs an OE sample (--oe)");
  const Money dc_mean = dc_mean_of(cfg, in);
  DebiasConfig d = cfg.debias;
  d.seed = cfg.seed;
  if (d.procedure == Procedure::kFull && !d.cov) {
    if (!in.bdm) {
      bad_config(
          "FULL needs cov(theta, p): supply --cov or a BDM sample (--bdm, at least 50 "
          "respondents)");
    }
    if (in.bdm->size() < 50) {
      err << fmt::format("warning: BDM sample has {} respondents; at least 50 are recommended\n",
                         in.bdm->size());
    }
    d.cov = theoretical_cov(sample_mean(*in.bdm), dc_mean);
  }
  DebiasRun run{debias(*in.oe, dc_mean, d), d, std::string(to_string(d.procedure))};
  if (d.procedure == Procedure::kFull) {
    run.source += fmt::format(" [cov = {:.3f}]", run.estimate.cov_used);
  }
  return run;
}

Json interval_json(const Interval& i) { return io::to_json(i); }

Interval interval_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::optional<TestResult> test_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  TestResult t;
  t.statistic = j.at("statistic").get<double>();
  if (!j.at("df").is_null()) t.df = j.at("df").get<double>();
  t.p_value = j.at("p_value").get<double>();
  return t;
}

bool significant(const std::optional<TestResult>& t) { return t && t->p_value < 0.05; }

std::string join_markers(std::initializer_list<std::pair<bool, char>> flags) {
  std::string out;
  for (const auto& [on, c] : flags) {
    if (!on) continue;
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

// ---- rendering (shared by subcommands and `report`) ----

std::string render_simulate(const Json& j) {
  std::string out = fmt::format("seed {}\n", j.at("seed").get<std::uint64_t>());
  for (const auto& g : j.at("groups")) {
    out += fmt::format("{:<4} {:>6} respondents  mean {:.3f}  -> {}\n",
                       g.at("group").get<std::string>(), g.at("n").get<std::size_t>(),
                       g.at("mean").get<double>(), g.at("file").get<std::string>());
  }
  return out;
}

std::string render_debias(const Json& j) {
  const Json& e = j.at("estimate");
  std::string out = fmt::format("procedure {}  seed {}\n", e.at("procedure").get<std::string>(),
                                j.at("seed").get<std::uint64_t>());
  out += fmt::format("OE mean        {:.3f}\n", e.at("oe_mean").get<double>());
  out += fmt::format("DC mean        {:.3f}\n", e.at("dc_mean").get<double>());
  out += fmt::format("cov used       {:.3f}\n", e.at("cov_used").get<double>());
  out += fmt::format("epsilon sd     {:.3f}\n", e.at("epsilon_sd_used").get<double>());
  out += fmt::format("alpha_hat      {:.3f}\n", e.at("alpha_hat").get<double>());
  out += fmt::format("de-biased mean {:.3f}  (n = {})\n", e.at("debiased_mean").get<double>(),
                     e.at("n").get<std::size_t>());
  return out;
}

std::string render_estimate(const Json& j) {
  std::vector<io::MeanRow> rows;
  for (const auto& r : j.at("rows")) {
    rows.push_back({r.at("source").get<std::string>(), r.at("mean").get<double>(),
                    interval_from(r.at("ci")), r.at("markers").get<std::string>()});
  }
  std::string out = io::render_mean_table(rows);
  if (j.at("benchmark").is_null()) out += "(no BDM benchmark: markers omitted)\n";
  return out;
}

OptimumReport optimum_from(const Json& r) {
  OptimumReport o;
  o.optimal_price = r.at("optimal_price").get<double>();
  o.optimal_quantity = r.at("optimal_quantity").get<double>();
  o.optimal_profit = r.at("optimal_profit").get<double>();
  o.ci_price = interval_from(r.at("ci_price"));
  o.ci_quantity = interval_from(r.at("ci_quantity"));
  o.ci_profit = interval_from(r.at("ci_profit"));
  if (!r.at("profit_pct_diff_vs_benchmark").is_null()) {
    o.profit_pct_diff_vs_benchmark = r.at("profit_pct_diff_vs_benchmark").get<double>();
  }
  o.price_test = test_from(r.at("price_test"));
  o.quantity_test = test_from(r.at("quantity_test"));
  o.profit_test = test_from(r.at("profit_test"));
  o.boundary_max = r.at("boundary_max").get<bool>();
  o.failed_replicates = r.at("failed_replicates").get<std::size_t>();
  return o;
}

std::string render_optimize(const Json& j) {
  std::vector<io::OptimumRow> rows;
  for (const auto& r : j.at("rows")) {
    const Json& m = r.at("markers");
    rows.push_back({r.at("source").get<std::string>(), optimum_from(r.at("optimum")),
                    m.at("price").get<std::string>(), m.at("quantity").get<std::string>(),
                    m.at("profit").get<std::string>(), m.at("pct").get<std::string>()});
  }
  std::string out = io::render_optimum_table(rows);
  for (const auto& r : rows) {
    if (r.report.boundary_max) {
      out += fmt::format("note: {} optimum sits at the search ceiling\n", r.source);
    }
  }
  out += fmt::format("marginal cost {:.3f}, market size {:.3f}\n",
                     j.at("market").at("marginal_cost").get<double>(),
                     j.at("market").at("market_size").get<double>());
  return out;
}

Metric metric_from_string(std::string_view s) {
  for (Metric m : {Metric::kMeanWtp, Metric::kOptimalPrice, Metric::kOptimalQuantity,
                   Metric::kOptimalProfit}) {
    if (to_string(m) == s) return m;
  }
  throw WtpError(ErrorCode::kSchemaMismatch, fmt::format("unknown metric '{}'", s));
}

StudyResult study_from(const Json& j) {
  StudyResult r;
  r.mode = dc_mean_mode_from_string(j.at("mode").get<std::string>());
  for (const auto& c : j.at("cells")) {
    StudyCell cell;
    cell.grid_set = c.at("grid_set").get<std::size_t>();
    cell.levels = c.at("levels").get<std::size_t>();
    cell.procedure = procedure_from_string(c.at("procedure").get<std::string>());
    cell.mode = r.mode;
    cell.metric = metric_from_string(c.at("metric").get<std::string>());
    cell.true_value = c.at("true_value").get<double>();
    cell.estimate = c.at("estimate").get<double>();
    cell.ci = interval_from(c.at("ci"));
    cell.replicates = c.at("replicates").get<std::size_t>();
    cell.failed = c.at("failed").get<std::size_t>();
    cell.flagged = c.at("flagged").get<bool>();
    r.cells.push_back(cell);
  }
  return r;
}

std::string render_narrowing(const Json& n) {
  std::string out = n.at("summary").get<std::string>();
  if (!out.empty() && out.back() != '\n') out += '\n';
  return out;
}

std::string render_study(const Json& j) {
  std::string out;
  for (const auto& r : j.at("results")) out += io::render_study_table(study_from(r)) + "\n";
  out += render_narrowing(j.at("narrowing"));
  return out;
}

std::string render_any(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw WtpError(ErrorCode::kSchemaMismatch, "report input has no 'kind' member");
  }
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "simulate") return render_simulate(j);
    if (kind == "debias") return render_debias(j);
    if (kind == "estimate") return render_estimate(j);
    if (kind == "optimize") return render_optimize(j);
    if (kind == "study") return render_study(j);
  } catch (const nlohmann::json::exception& e) {
    throw WtpError(ErrorCode::kSchemaMismatch, fmt::format("malformed {} report: {}", kind, e.what()));
  }
  throw WtpError(ErrorCode::kSchemaMismatch, fmt::format("unknown report kind '{}'", kind));
}

Json base_json(std::string_view kind, const RunConfig& cfg) {
  Json j;
  j["kind"] = kind;
  j["seed"] = cfg.seed;
  return j;
}

// ---- subcommands ----

std::string cmd_simulate(const RunConfig& cfg) {
  const auto& s = cfg.simulation;
  const auto grid = cfg.grid.empty() ? default_study_grid() : cfg.grid.resolve();
  const auto theta = ThetaDistribution::zero_mean_on(s.theta_neg_width, s.theta_pos_width);
  auto ids = [&](std::string_view prefix) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < s.n_per_group; ++i) v.push_back(fmt::format("{}{}", prefix, i + 1));
    return v;
  };
  const auto seed_for = [&](Stream st, std::uint64_t i) { return substream_seed(cfg.seed, st, i); };

  const auto oe_true = draw_truncated_normal(s.truth, s.n_per_group, seed_for(Stream::kTrueWtp, 0));
  const auto oe_biased = apply_oe_bias(WtpSample(Label::kSimulatedTrue, oe_true), s.oe_bias,
                                       seed_for(Stream::kOeNoise, 0));
  const WtpSample oe(Label::kOe, {oe_biased.values().begin(), oe_biased.values().end()}, ids("oe"));

  const WtpSample dc_true(Label::kSimulatedTrue,
                          draw_truncated_normal(s.truth, s.n_per_group, seed_for(Stream::kTrueWtp, 1)));
  const auto sim = simulate_dc_responses(dc_true, grid, theta, seed_for(Stream::kTheta, 0));
  const DcDataset dc({sim.dataset.records().begin(), sim.dataset.records().end()}, grid, ids("dc"));

  const WtpSample bdm(Label::kBdm,
                      draw_truncated_normal(s.truth, s.n_per_group, seed_for(Stream::kTrueWtp, 2)),
                      ids("bdm"));

  io::save_wtp_csv(cfg.out / "oe.csv", oe);
  io::save_dc_csv(cfg.out / "dc.csv", dc);
  io::save_wtp_csv(cfg.out / "bdm.csv", bdm);

  std::size_t accepts = 0;
  for (const auto& r : dc.records()) accepts += r.accept ? 1 : 0;
  Json j = base_json("simulate", cfg);
  j["true_mean"] = s.truth.analytic_mean();
  j["groups"] = Json::array(
      {{{"group", "OE"}, {"file", "oe.csv"}, {"n", oe.size()}, {"mean", sample_mean(oe)}},
       {{"group", "DC"},
        {"file", "dc.csv"},
        {"n", dc.size()},
        {"mean", static_cast<double>(accepts) / static_cast<double>(dc.size())}},
       {{"group", "BDM"}, {"file", "bdm.csv"}, {"n", bdm.size()}, {"mean", sample_mean(bdm)}}});
  j["note"] = "DC 'mean' is the overall acceptance share";
  io::write_json(cfg.out / "simulate.json", j);
  return render_simulate(j);
}

std::string cmd_debias(const RunConfig& cfg, std::ostream& err) {
  const auto in = load_inputs(cfg);
  const auto run = run_debias_step(cfg, in, err);
  io::save_wtp_csv(cfg.out / "debiased.csv", run.estimate.debiased);
  Json j = base_json("debias", cfg);
  j["estimate"] = io::to_json(run.estimate, run.config);
  j["dc_mean_mode"] = cfg.dc_mean ? "given" : to_string(cfg.dc_mean_mode);
  j["output"] = "debiased.csv";
  io::write_json(cfg.out / "debias.json", j);
  const auto text = render_debias(j);
  io::write_text(cfg.out / "debias.txt", text);
  return text;
}

Json tests_json(const std::optional<TestResult>& welch, const std::optional<TestResult>& ks,
                const std::optional<TestResult>& lr) {
  auto t = [](const std::optional<TestResult>& x) { return x ? io::to_json(*x) : Json(nullptr); };
  return {{"welch_t", t(welch)}, {"ks", t(ks)}, {"lr", t(lr)}};
}

std::string cmd_estimate(const RunConfig& cfg, std::ostream& err) {
  const auto in = load_inputs(cfg);
  if (!in.oe && !in.dc && !in.bdm && !in.debiased) {
    bad_config("estimate needs at least one of --oe, --dc, --bdm, --debiased");
  }
  std::optional<DebiasRun> deb;
  if (!in.debiased && in.oe && (in.dc || cfg.dc_mean)) deb = run_debias_step(cfg, in, err);

  BootstrapSettings bs = cfg.bootstrap;
  bs.seed = cfg.seed;
  std::optional<Interval> bdm_ci;
  if (in.bdm) bdm_ci = bootstrap_ci(*in.bdm, statistics::mean(), bs).intervals[0];

  Json rows = Json::array();
  Json curves = Json::array();
  auto sample_row = [&](const std::string& source, const WtpSample& s, const std::string& file) {
    const auto ci = s.label() == Label::kBdm ? *bdm_ci
                                             : bootstrap_ci(s, statistics::mean(), bs).intervals[0];
    std::optional<TestResult> welch, ks;
    std::string markers;
    if (in.bdm && s.label() != Label::kBdm) {
      welch = welch_t_test(s, *in.bdm);
      ks = ks_two_sample(s, *in.bdm);
      markers = join_markers({{significant(welch), 'a'},
                              {significant(ks), 'b'},
                              {!io::intervals_overlap(ci, *bdm_ci), 'c'}});
    }
    io::save_curve_csv(cfg.out / file, empirical_survival(s));
    curves.push_back(file);
    rows.push_back({{"source", source},
                    {"n", s.size()},
                    {"mean", sample_mean(s)},
                    {"ci", interval_json(ci)},
                    {"markers", markers},
                    {"tests", tests_json(welch, ks, std::nullopt)}});
  };

  Json dc_fit = nullptr, kr = nullptr;
  if (in.oe) sample_row("OE", *in.oe, "oe_curve.csv");
  if (in.dc) {
    const Statistic stat = cfg.dc_mean_mode == DcMeanMode::kParametric
                               ? statistics::parametric_dc_mean()
                               : statistics::nonparametric_dc_mean(cfg.nonparametric_rule);
    const Money point = estimate_dc_mean(*in.dc, cfg.dc_mean_mode, cfg.nonparametric_rule);
    const auto ci = bootstrap_ci(*in.dc, stat, bs).intervals[0];
    std::optional<TestResult> lr;
    std::string markers;
    if (in.bdm) {
      lr = lr_test_dc(*in.dc, *in.bdm);
      markers = join_markers({{significant(lr), 'b'}, {!io::intervals_overlap(ci, *bdm_ci), 'c'}});
    }
    io::save_curve_csv(cfg.out / "dc_curve.csv", dc_choice_shares(*in.dc));
    curves.push_back("dc_curve.csv");
    rows.push_back({{"source", fmt::format("DC ({})", to_string(cfg.dc_mean_mode))},
                    {"n", in.dc->size()},
                    {"mean", point},
                    {"ci", interval_json(ci)},
                    {"markers", markers},
                    {"tests", tests_json(std::nullopt, std::nullopt, lr)}});
    try {
      const auto fit = fit_dc_logistic(*in.dc);
      dc_fit = io::to_json(fit);
      const auto k = krinsky_robb_ci(fit, 5000, bs.confidence,
                                     substream_seed(cfg.seed, Stream::kKrinskyRobb, 0));
      kr = {{"interval", interval_json(k.interval)}, {"discarded", k.discarded}, {"reps", k.reps}};
    } catch (const WtpError& e) {
      kr = {{"error", to_string(e.code())}, {"message", e.what()}};
    }
  }
  if (in.bdm) sample_row("BDM", *in.bdm, "bdm_curve.csv");
  if (in.debiased) sample_row(std::string(to_string(cfg.debias.procedure)), *in.debiased, "debiased_curve.csv");
  if (deb) sample_row(deb->source, deb->estimate.debiased, "debiased_curve.csv");

  Json j = base_json("estimate", cfg);
  j["dc_mean_mode"] = to_string(cfg.dc_mean_mode);
  j["benchmark"] = in.bdm ? Json("BDM") : Json(nullptr);
  j["bootstrap"] = {{"reps", bs.reps}, {"confidence", bs.confidence}};
  j["rows"] = rows;
  j["dc_fit"] = dc_fit;
  j["dc_mean_krinsky_robb"] = kr;
  j["debias"] = deb ? io::to_json(deb->estimate, deb->config) : Json(nullptr);
  j["curves"] = curves;
  io::write_json(cfg.out / "estimate.json", j);
  const auto text = render_estimate(j);
  io::write_text(cfg.out / "table4.txt", text);
  return text;
}

std::string cmd_optimize(const RunConfig& cfg, std::ostream& err) {
  const auto in = load_inputs(cfg);
  std::optional<DebiasRun> deb;
  if (!in.debiased && in.oe && (in.dc || cfg.dc_mean)) deb = run_debias_step(cfg, in, err);
  if (!in.oe && !in.dc && !in.bdm && !in.debiased) {
    bad_config("optimize needs at least one of --oe, --dc, --bdm, --debiased");
  }
  const auto grid = fit_grid(in);
  BootstrapSettings bs = cfg.bootstrap;
  bs.seed = cfg.seed;

  std::optional<DataSource> bench;
  std::optional<OptimumReport> bench_report;
  if (in.bdm) {
    bench = DataSource(*in.bdm);
    bench_report = optimum_with_ci(*bench, grid, cfg.market, bs);
  }

  Json rows = Json::array();
  auto add = [&](const std::string& source, const DataSource& src, bool is_bench) {
    const OptimumReport r = is_bench ? *bench_report
                                     : optimum_with_ci(src, grid, cfg.market, bs,
                                                       bench ? &*bench : nullptr);
    Json markers = {{"price", ""}, {"quantity", ""}, {"profit", ""}, {"pct", ""}};
    if (bench_report && !is_bench) {
      markers["price"] = join_markers({{!io::intervals_overlap(r.ci_price, bench_report->ci_price), 'c'},
                                       {significant(r.price_test), 'd'}});
      markers["quantity"] =
          join_markers({{!io::intervals_overlap(r.ci_quantity, bench_report->ci_quantity), 'c'},
                        {significant(r.quantity_test), 'd'}});
      markers["profit"] =
          join_markers({{!io::intervals_overlap(r.ci_profit, bench_report->ci_profit), 'c'},
                        {significant(r.profit_test), 'd'}});
      markers["pct"] = markers["profit"];
    }
    rows.push_back({{"source", source}, {"optimum", io::to_json(r)}, {"markers", markers}});
  };
  if (in.oe) add("OE", *in.oe, false);
  if (in.dc) add("DC", *in.dc, false);
  if (in.bdm) add("BDM", *in.bdm, true);
  if (in.debiased) add(std::string(to_string(cfg.debias.procedure)), *in.debiased, false);
  if (deb) add(deb->source, deb->estimate.debiased, false);

  Json j = base_json("optimize", cfg);
  j["market"] = {{"marginal_cost", cfg.market.marginal_cost}, {"market_size", cfg.market.market_size}};
  Json g = Json::array();
  for (Money v : grid) g.push_back(v);
  j["fit_grid"] = g;
  j["benchmark"] = in.bdm ? Json("BDM") : Json(nullptr);
  j["bootstrap"] = {{"reps", bs.reps}, {"confidence", bs.confidence}};
  j["rows"] = rows;
  io::write_json(cfg.out / "optimize.json", j);
  const auto text = render_optimize(j);
  io::write_text(cfg.out / "table5.txt", text);
  return text;
}

std::string cmd_study(const RunConfig& cfg) {
  StudyConfig sc;
  sc.truth = cfg.simulation.truth;
  sc.n_per_group = cfg.study.n_per_group;
  sc.n_samples = cfg.study.n_samples;
  sc.oe_alpha = cfg.study.oe_alpha;
  sc.oe_epsilon_sd = cfg.study.oe_epsilon_sd;
  sc.theta = ThetaDistribution::zero_mean_on(cfg.simulation.theta_neg_width,
                                             cfg.simulation.theta_pos_width);
  sc.plan = {cfg.grid.empty() ? default_study_grid() : cfg.grid.resolve(), cfg.study.n_sets};
  sc.nonparametric_rule = cfg.nonparametric_rule;
  sc.market = cfg.market;
  sc.confidence = cfg.study.confidence;
  sc.seed = cfg.seed;

  std::vector<DcMeanMode> modes;
  if (cfg.study.mode != "nonparametric") modes.push_back(DcMeanMode::kParametric);
  if (cfg.study.mode != "parametric") modes.push_back(DcMeanMode::kNonparametric);

  std::vector<StudyResult> results;
  Json jr = Json::array();
  for (DcMeanMode m : modes) {
    sc.dc_mean_mode = m;
    results.push_back(run_study(sc));
    io::save_study_csv(cfg.out / fmt::format("study_{}.csv", to_string(m)), results.back());
    jr.push_back(io::to_json(results.back()));
  }
  const auto report = narrowing_threshold_report(results, sc.truth);
  Json j = base_json("study", cfg);
  j["n_samples"] = sc.n_samples;
  j["n_per_group"] = sc.n_per_group;
  j["results"] = jr;
  j["narrowing"] = io::to_json(report);
  io::write_json(cfg.out / "study_summary.json", j);
  io::write_text(cfg.out / "narrowing.txt", render_narrowing(j.at("narrowing")));
  return render_study(j);
}

std::string cmd_report(const RunConfig& cfg) {
  if (!cfg.input) bad_config("report needs --input PATH (a JSON written by another subcommand)");
  const auto text = render_any(io::read_json(*cfg.input));
  io::write_text(cfg.out / "report.txt", text);
  return text;
}

Json error_json(std::string_view code, std::string_view message, const std::vector<RowIssue>& issues) {
  Json j;
  j["error"] = code;
  j["message"] = message;
  Json list = Json::array();
  for (const auto& i : issues) {
    list.push_back({{"row", i.row}, {"id", i.id}, {"code", to_string(i.code)}, {"message", i.message}});
  }
  j["issues"] = list;
  return j;
}

int fail(const RunConfig& cfg, const Json& j, int status, std::ostream& err) {
  err << j.dump(2) << '\n';
  try {
    io::write_json(cfg.out / "error.json", j);
  } catch (...) {
    // The output directory itself may be the problem; stderr already has it.
  }
  return status;
}

}  // namespace

int run_pipeline(const RunConfig& cfg, std::string_view subcommand, std::ostream& out,
                 std::ostream& err) {
  try {
    if (std::find(std::begin(kSubcommands), std::end(kSubcommands), subcommand) ==
        std::end(kSubcommands)) {
      bad_config(fmt::format("unknown subcommand '{}'", subcommand));
    }
    cfg.validate();
    fs::create_directories(cfg.out);
    fs::remove(cfg.out / "error.json");
    io::write_json(cfg.out / "manifest.json", {{"tool", "wtpdebias"},
                                               {"version", kVersion},
                                               {"subcommand", subcommand},
                                               {"seed", cfg.seed},
                                               {"config", to_json(cfg)}});
    std::string text;
    if (subcommand == "simulate") text = cmd_simulate(cfg);
    else if (subcommand == "debias") text = cmd_debias(cfg, err);
    else if (subcommand == "estimate") text = cmd_estimate(cfg, err);
    else if (subcommand == "optimize") text = cmd_optimize(cfg, err);
    else if (subcommand == "study") text = cmd_study(cfg);
    else text = cmd_report(cfg);
    out << text;
    return 0;
  } catch (const WtpError& e) {
    return fail(cfg, error_json(to_string(e.code()), e.what(), e.issues()),
                is_validation_error(e.code()) ? 2 : 3, err);
  } catch (const fs::filesystem_error& e) {
    return fail(cfg, error_json(to_string(ErrorCode::kIoError), e.what(), {}), 2, err);
  } catch (const nlohmann::json::exception& e) {
    return fail(cfg, error_json(to_string(ErrorCode::kSchemaMismatch), e.what(), {}), 2, err);
  } catch (const std::exception& e) {
    return fail(cfg, error_json("INTERNAL", e.what(), {}), 3, err);
  }
}

}  // namespace wtp
