#ifndef WTP_IO_HPP_
#define WTP_IO_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "wtp/core.hpp"
#include "wtp/debias.hpp"
#include "wtp/study.hpp"

namespace wtp::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kWtpHeader = "respondent_id,stated_wtp";
inline constexpr std::string_view kDcHeader = "respondent_id,price_cue,accept";
inline constexpr std::string_view kCurveHeader = "price,share";
inline constexpr std::string_view kStudyHeader =
    "grid_set,levels,procedure,mode,metric,true_value,estimate,ci_lower,ci_upper";

/// Locale-independent decimal parse of the whole string.
std::optional<double> parse_decimal(std::string_view text);
/// Shortest representation that parses back to the same double.
std::string format_decimal(double value);

WtpSample load_wtp_csv(const std::filesystem::path& path, Label label);
/// `grid` empty: the grid is the sorted set of distinct cues in the file.
DcDataset load_dc_csv(const std::filesystem::path& path, std::span<const Money> grid = {});

void save_wtp_csv(const std::filesystem::path& path, const WtpSample& s);
void save_dc_csv(const std::filesystem::path& path, const DcDataset& d);
void save_curve_csv(const std::filesystem::path& path, const DemandCurve& curve);
void save_study_csv(const std::filesystem::path& path, const StudyResult& result);

void write_text(const std::filesystem::path& path, std::string_view text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

Json to_json(const TestResult& t);
Json to_json(const Interval& i);
Json to_json(const LogisticDemand& m);
Json to_json(const OptimumReport& r);
Json to_json(const DebiasEstimate& e, const DebiasConfig& cfg);
Json to_json(const StudyResult& r);
Json to_json(const NarrowingReport& r);

/// "16.046^{a,b} [15.041, 17.051]": three decimals, optional markers.
std::string format_with_ci(double value, const Interval& ci, std::string_view markers = {});
/// "38.22%" from a fraction.
std::string format_pct(double fraction);

/// One row of the mean-comparison table.
struct MeanRow {
  std::string source;
  double mean = 0.0;
  Interval ci;
  std::string markers;
};

/// One row of the economic-analysis table.
struct OptimumRow {
  std::string source;
  OptimumReport report;
  std::string price_markers, quantity_markers, profit_markers, pct_markers;
};

std::string render_mean_table(std::span<const MeanRow> rows);
std::string render_optimum_table(std::span<const OptimumRow> rows);
std::string render_study_table(const StudyResult& r);

bool intervals_overlap(const Interval& a, const Interval& b);

}  // namespace wtp::io

#endif  // WTP_IO_HPP_
