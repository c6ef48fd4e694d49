// Python bindings: plain lists in, plain dicts out.  Result objects go through
// the same JSON serialisation the CLI writes, so both surfaces agree.

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wtp/debias.hpp"
#include "wtp/demand.hpp"
#include "wtp/io.hpp"
#include "wtp/pipeline.hpp"
#include "wtp/pricing.hpp"
#include "wtp/simulation.hpp"
#include "wtp/study.hpp"

namespace py = pybind11;
using namespace wtp;

namespace {

py::object to_py(const io::Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

io::Json from_py(const py::object& o) {
  return io::Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

DcDataset make_dc(std::vector<Money> cues, std::vector<bool> accepts, std::optional<std::vector<Money>> grid) {
  if (cues.size() != accepts.size()) {
    throw WtpError(ErrorCode::kSchemaMismatch, "cues and accepts differ in length");
  }
  std::vector<DcRecord> rec(cues.size());
  for (std::size_t i = 0; i < rec.size(); ++i) rec[i] = {cues[i], accepts[i]};
  if (!grid) {
    std::vector<Money> g = cues;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    grid = std::move(g);
  }
  return DcDataset(std::move(rec), std::move(*grid));
}

NonparametricRule rule_from(const std::string& s) {
  if (s == "linear_interpolation") return NonparametricRule::kLinearInterpolation;
  if (s == "left_step") return NonparametricRule::kLeftStep;
  throw WtpError(ErrorCode::kInvalidConfig, "unknown nonparametric rule '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_wtpdebias, m) {
  m.attr("__version__") = std::string(kVersion);

  static py::exception<WtpError> wtp_error(m, "WtpError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const WtpError& e) {
      py::set_error(wtp_error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "sample_true_wtp",
      [](std::size_t n, std::uint64_t seed, double mean, double sd, double low, double high) {
        const auto s = sample_true_wtp({mean, sd, low, high}, n, seed);
        return std::vector<Money>(s.values().begin(), s.values().end());
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("mean") = 50.0, py::arg("sd") = 10.0, py::arg("low") = 15.0,
      py::arg("high") = 85.0);

  m.def(
      "simulate_dc",
      [](std::vector<Money> true_wtp, std::vector<Money> grid, std::uint64_t seed, double neg_width,
         double pos_width) {
        const WtpSample truth(Label::kBdm, std::move(true_wtp));
        const auto sim = simulate_dc_responses(truth, grid, ThetaDistribution::zero_mean_on(neg_width, pos_width), seed);
        std::vector<Money> cues;
        std::vector<bool> accepts;
        for (const auto& r : sim.dataset.records()) {
          cues.push_back(r.price_cue);
          accepts.push_back(r.accept);
        }
        return py::make_tuple(cues, accepts);
      },
      py::arg("true_wtp"), py::arg("grid"), py::arg("seed") = 0, py::arg("neg_width") = 1.0,
      py::arg("pos_width") = 2.0);

  m.def("theoretical_cov", &theoretical_cov, py::arg("bdm_mean"), py::arg("dc_mean"));

  m.def(
      "debias",
      [](std::vector<Money> oe, Money dc_mean, const std::string& procedure, std::optional<Money> cov,
         std::optional<Money> epsilon_sd, std::uint64_t seed, bool clamp_at_zero) {
        DebiasConfig cfg;
        cfg.procedure = procedure_from_string(procedure);
        cfg.cov = cov;
        cfg.epsilon_sd = epsilon_sd;
        cfg.seed = seed;
        cfg.clamp_at_zero = clamp_at_zero;
        const auto est = debias(WtpSample(Label::kOe, std::move(oe)), dc_mean, cfg);
        py::dict d = to_py(io::to_json(est, cfg));
        d["debiased"] = std::vector<Money>(est.debiased.values().begin(), est.debiased.values().end());
        return d;
      },
      py::arg("oe"), py::arg("dc_mean"), py::arg("procedure") = "basic", py::arg("cov") = py::none(),
      py::arg("epsilon_sd") = py::none(), py::arg("seed") = 0, py::arg("clamp_at_zero") = false);

  m.def(
      "fit_dc",
      [](std::vector<Money> cues, std::vector<bool> accepts, std::optional<std::vector<Money>> grid) {
        return to_py(io::to_json(fit_dc_logistic(make_dc(std::move(cues), std::move(accepts), std::move(grid)))));
      },
      py::arg("cues"), py::arg("accepts"), py::arg("grid") = py::none());

  m.def(
      "dc_mean",
      [](std::vector<Money> cues, std::vector<bool> accepts, const std::string& mode, const std::string& rule,
         std::optional<std::vector<Money>> grid) {
        return estimate_dc_mean(make_dc(std::move(cues), std::move(accepts), std::move(grid)),
                                dc_mean_mode_from_string(mode), rule_from(rule));
      },
      py::arg("cues"), py::arg("accepts"), py::arg("mode") = "parametric", py::arg("rule") = "linear_interpolation",
      py::arg("grid") = py::none());

  m.def(
      "optimize_price",
      [](double intercept, double slope, Money cost, double market_size, Money p_max) {
        LogisticDemand d;
        d.intercept = intercept;
        d.slope = slope;
        const MarketConfig mkt{cost, market_size};
        mkt.validate();
        const auto o = optimize_price(d, mkt, p_max);
        py::dict r;
        r["price"] = o.price;
        r["quantity"] = o.quantity;
        r["profit"] = o.profit;
        r["boundary_max"] = o.boundary_max;
        return r;
      },
      py::arg("intercept"), py::arg("slope"), py::arg("cost") = 5.0, py::arg("market_size") = 1000.0,
      py::arg("p_max") = 200.0);

  m.def(
      "run_study",
      [](const std::string& mode, std::size_t n_samples, std::uint64_t seed) {
        StudyConfig cfg;
        cfg.dc_mean_mode = dc_mean_mode_from_string(mode);
        cfg.n_samples = n_samples;
        cfg.seed = seed;
        std::optional<StudyResult> r;
        {
          py::gil_scoped_release release;
          r = run_study(cfg);
        }
        return to_py(io::to_json(*r));
      },
      py::arg("mode") = "parametric", py::arg("n_samples") = 100, py::arg("seed") = 0);

  m.def(
      "run_pipeline",
      [](const std::string& subcommand, const py::object& config) {
        const auto cfg = run_config_from_json(from_py(config));
        std::ostringstream out, err;
        const int code = run_pipeline(cfg, subcommand, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("subcommand"), py::arg("config"));
}
