#include "wtp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace wtp::io {

namespace fs = std::filesystem;

std::optional<double> parse_decimal(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string format_decimal(double value) { return fmt::format("{}", value); }

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return out;
}

struct CsvFile {
  std::vector<std::pair<std::size_t, std::string>> rows;  // (1-based line, text)
};

CsvFile read_csv(const fs::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw WtpError(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  CsvFile file;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!have_header) {
      std::string joined;
      for (const auto& f : split(line)) joined += (joined.empty() ? "" : ",") + f;
      if (joined != header) {
        throw WtpError(ErrorCode::kSchemaMismatch, path.string() + ": expected header '" +
                                                       std::string(header) + "', got '" + line + "'");
      }
      have_header = true;
      continue;
    }
    file.rows.emplace_back(lineno, line);
  }
  if (!have_header) throw WtpError(ErrorCode::kSchemaMismatch, path.string() + ": missing header");
  if (file.rows.empty()) throw WtpError(ErrorCode::kEmptyInput, path.string() + ": no data rows");
  return file;
}

std::string line_msg(const fs::path& path, std::size_t line, const std::string& what) {
  return fmt::format("{}:{}: {}", path.filename().string(), line, what);
}

void throw_issues(std::vector<RowIssue> issues, const fs::path& path) {
  const ErrorCode first = issues.front().code;
  throw WtpError(first, "cannot load " + path.string(), std::move(issues));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WtpError(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::string id_or_default(const std::optional<std::vector<std::string>>& ids, std::size_t i) {
  return ids ? (*ids)[i] : fmt::format("r{}", i + 1);
}

}  // namespace

WtpSample load_wtp_csv(const fs::path& path, Label label) {
  const auto file = read_csv(path, kWtpHeader);
  std::vector<RowIssue> issues;
  std::vector<RawWtpRow> rows;
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& [line, text] = file.rows[i];
    const auto f = split(text);
    if (f.size() != 2) {
      issues.push_back({i, f.empty() ? "" : f[0], ErrorCode::kSchemaMismatch,
                        line_msg(path, line, "expected 2 fields")});
      continue;
    }
    const auto v = parse_decimal(f[1]);
    if (!v) {
      issues.push_back({i, f[0], ErrorCode::kParseError,
                        line_msg(path, line, "cannot parse '" + f[1] + "' as a number")});
      continue;
    }
    rows.push_back({f[0], *v});
  }
  if (!issues.empty()) throw_issues(std::move(issues), path);
  return validate_sample(rows, label);
}

DcDataset load_dc_csv(const fs::path& path, std::span<const Money> grid) {
  const auto file = read_csv(path, kDcHeader);
  std::vector<RowIssue> issues;
  std::vector<DcRecord> records;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& [line, text] = file.rows[i];
    const auto f = split(text);
    if (f.size() != 3) {
      issues.push_back({i, f.empty() ? "" : f[0], ErrorCode::kSchemaMismatch,
                        line_msg(path, line, "expected 3 fields")});
      continue;
    }
    const auto cue = parse_decimal(f[1]);
    if (!cue) {
      issues.push_back({i, f[0], ErrorCode::kParseError,
                        line_msg(path, line, "cannot parse price cue '" + f[1] + "'")});
      continue;
    }
    if (f[2] != "0" && f[2] != "1") {
      issues.push_back({i, f[0], ErrorCode::kSchemaMismatch,
                        line_msg(path, line, "accept must be 0 or 1, got '" + f[2] + "'")});
      continue;
    }
    records.push_back({*cue, f[2] == "1"});
    ids.push_back(f[0]);
  }
  if (!issues.empty()) throw_issues(std::move(issues), path);
  std::vector<Money> levels(grid.begin(), grid.end());
  if (levels.empty()) {
    for (const auto& r : records) levels.push_back(r.price_cue);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  }
  return DcDataset(std::move(records), std::move(levels), std::move(ids));
}

void save_wtp_csv(const fs::path& path, const WtpSample& s) {
  auto out = open_out(path);
  out << kWtpHeader << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << id_or_default(s.respondent_ids(), i) << ',' << format_decimal(s.values()[i]) << '\n';
  }
}

void save_dc_csv(const fs::path& path, const DcDataset& d) {
  auto out = open_out(path);
  out << kDcHeader << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d.records()[i];
    out << id_or_default(d.respondent_ids(), i) << ',' << format_decimal(r.price_cue) << ','
        << (r.accept ? 1 : 0) << '\n';
  }
}

void save_curve_csv(const fs::path& path, const DemandCurve& curve) {
  auto out = open_out(path);
  out << kCurveHeader << '\n';
  for (const auto& p : curve.points) {
    out << format_decimal(p.price) << ',' << format_decimal(p.share) << '\n';
  }
}

void save_study_csv(const fs::path& path, const StudyResult& result) {
  auto out = open_out(path);
  out << kStudyHeader << '\n';
  for (const auto& c : result.cells) {
    out << c.grid_set << ',' << c.levels << ',' << to_string(c.procedure) << ','
        << to_string(c.mode) << ',' << to_string(c.metric) << ',' << format_decimal(c.true_value)
        << ',' << format_decimal(c.estimate) << ',' << format_decimal(c.ci.lower) << ','
        << format_decimal(c.ci.upper) << '\n';
  }
}

void write_text(const fs::path& path, std::string_view text) {
  auto out = open_out(path);
  out << text;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw WtpError(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw WtpError(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json to_json(const TestResult& t) {
  Json j;
  j["kind"] = to_string(t.kind);
  j["statistic"] = t.statistic;
  j["df"] = t.df ? Json(*t.df) : Json(nullptr);
  j["p_value"] = t.p_value;
  return j;
}

Json to_json(const Interval& i) { return Json::array({i.lower, i.upper}); }

Json to_json(const LogisticDemand& m) {
  Json j;
  j["intercept"] = m.intercept;
  j["slope"] = m.slope;
  j["coef_covariance"] = Json::array({Json::array({m.coef_covariance.xx, m.coef_covariance.xy}),
                                      Json::array({m.coef_covariance.xy, m.coef_covariance.yy})});
  j["covariance_valid_for_inference"] = m.covariance_valid_for_inference;
  j["n_obs"] = m.n_obs;
  j["log_likelihood"] = m.log_likelihood;
  j["usable"] = m.usable();
  return j;
}

Json to_json(const OptimumReport& r) {
  Json j;
  j["optimal_price"] = r.optimal_price;
  j["optimal_quantity"] = r.optimal_quantity;
  j["optimal_profit"] = r.optimal_profit;
  j["ci_price"] = to_json(r.ci_price);
  j["ci_quantity"] = to_json(r.ci_quantity);
  j["ci_profit"] = to_json(r.ci_profit);
  j["profit_pct_diff_vs_benchmark"] =
      r.profit_pct_diff_vs_benchmark ? Json(*r.profit_pct_diff_vs_benchmark) : Json(nullptr);
  j["price_test"] = r.price_test ? to_json(*r.price_test) : Json(nullptr);
  j["quantity_test"] = r.quantity_test ? to_json(*r.quantity_test) : Json(nullptr);
  j["profit_test"] = r.profit_test ? to_json(*r.profit_test) : Json(nullptr);
  j["boundary_max"] = r.boundary_max;
  j["failed_replicates"] = r.failed_replicates;
  return j;
}

Json to_json(const DebiasEstimate& e, const DebiasConfig& cfg) {
  Json j;
  j["procedure"] = to_string(cfg.procedure);
  j["alpha_hat"] = e.alpha_hat;
  j["oe_mean"] = e.oe_mean;
  j["dc_mean"] = e.dc_mean;
  j["cov_used"] = e.cov_used;
  j["epsilon_sd_used"] = e.epsilon_sd_used;
  j["debiased_mean"] = sample_mean(e.debiased);
  j["n"] = e.debiased.size();
  Json c;
  c["procedure"] = to_string(cfg.procedure);
  c["cov"] = cfg.cov ? Json(format_decimal(*cfg.cov)) : Json(nullptr);
  c["epsilon_sd"] = cfg.epsilon_sd ? Json(format_decimal(*cfg.epsilon_sd)) : Json(nullptr);
  c["seed"] = cfg.seed;
  c["clamp_at_zero"] = cfg.clamp_at_zero;
  j["config"] = c;
  return j;
}

Json to_json(const StudyResult& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["truth"] = {{"mean", r.truth.mean},
                {"optimal_price", r.truth.optimal_price},
                {"optimal_quantity", r.truth.optimal_quantity},
                {"optimal_profit", r.truth.optimal_profit}};
  Json sets = Json::array();
  for (const auto& g : r.grid_sets) sets.push_back(g);
  j["grid_sets"] = sets;
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"grid_set", c.grid_set},
                     {"levels", c.levels},
                     {"procedure", to_string(c.procedure)},
                     {"mode", to_string(c.mode)},
                     {"metric", to_string(c.metric)},
                     {"true_value", c.true_value},
                     {"estimate", c.estimate},
                     {"ci", to_json(c.ci)},
                     {"replicates", c.replicates},
                     {"failed", c.failed},
                     {"flagged", c.flagged}});
  }
  j["cells"] = cells;
  return j;
}

Json to_json(const NarrowingReport& r) {
  Json j;
  j["sufficient_sets"] = r.sufficient_sets;
  Json f = Json::array();
  for (const auto& x : r.findings) {
    f.push_back({{"procedure", to_string(x.procedure)},
                 {"mode", to_string(x.mode)},
                 {"breakdown_set", x.breakdown_set ? Json(*x.breakdown_set) : Json(nullptr)},
                 {"breakdown_levels", x.breakdown_levels ? Json(*x.breakdown_levels) : Json(nullptr)},
                 {"narrowing_pct", x.narrowing_pct ? Json(*x.narrowing_pct) : Json(nullptr)}});
  }
  j["findings"] = f;
  j["summary"] = r.summary;
  return j;
}

std::string format_with_ci(double value, const Interval& ci, std::string_view markers) {
  std::string out = fmt::format("{:.3f}", value);
  if (!markers.empty()) out += fmt::format("^{{{}}}", markers);
  out += fmt::format(" [{:.3f}, {:.3f}]", ci.lower, ci.upper);
  return out;
}

std::string format_pct(double fraction) { return fmt::format("{:.2f}%", 100.0 * fraction); }

bool intervals_overlap(const Interval& a, const Interval& b) {
  return a.lower <= b.upper && b.lower <= a.upper;
}

std::string render_mean_table(std::span<const MeanRow> rows) {
  std::size_t w = 12;
  for (const auto& r : rows) w = std::max(w, r.source.size());
  std::string out = fmt::format("{:<{}} {}\n", "Data Source", w, "Mean [Confidence Interval]");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}} {}\n", r.source, w, format_with_ci(r.mean, r.ci, r.markers));
  }
  out +=
      "a: mean differs from the benchmark (t-test); b: distribution differs (KS-test, "
      "LR-test for DC); c: non-overlapping confidence intervals\n";
  return out;
}

std::string render_optimum_table(std::span<const OptimumRow> rows) {
  std::size_t w = 12;
  for (const auto& r : rows) w = std::max(w, r.source.size());
  std::string out = fmt::format("{:<{}} | {:<34} | {:<34} | {:<40} | {}\n", "Data Source", w,
                                "Optimal Price", "Optimal Quantity", "Optimal Profit",
                                "Profit Pct Diff");
  for (const auto& r : rows) {
    const auto& o = r.report;
    std::string pct = "N.A.";
    if (o.profit_pct_diff_vs_benchmark) {
      pct = format_pct(*o.profit_pct_diff_vs_benchmark);
      if (!r.pct_markers.empty()) pct += fmt::format("^{{{}}}", r.pct_markers);
    }
    out += fmt::format("{:<{}} | {:<34} | {:<34} | {:<40} | {}\n", r.source, w,
                       format_with_ci(o.optimal_price, o.ci_price, r.price_markers),
                       format_with_ci(o.optimal_quantity, o.ci_quantity, r.quantity_markers),
                       format_with_ci(o.optimal_profit, o.ci_profit, r.profit_markers), pct);
  }
  out +=
      "c: non-overlapping confidence intervals; d: significant difference at p = .05 "
      "(bootstrapped difference)\n";
  return out;
}

std::string render_study_table(const StudyResult& r) {
  std::string out = fmt::format("DC mean mode: {}\n", to_string(r.mode));
  out += fmt::format("{:>8} {:>6} {:<8} {:<17} {:>10} {:>34}\n", "grid_set", "levels",
                     "proc", "metric", "truth", "estimate [95% interval]");
  for (const auto& c : r.cells) {
    out += fmt::format("{:>8} {:>6} {:<8} {:<17} {:>10.3f} {:>34}{}\n", c.grid_set, c.levels,
                       to_string(c.procedure), to_string(c.metric), c.true_value,
                       format_with_ci(c.estimate, c.ci), c.covers_truth() ? "" : "  *");
  }
  out += "*: interval excludes the true value\n";
  return out;
}

}  // namespace wtp::io
