#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "wtp/core.hpp"

using namespace wtp;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const WtpError& e) {
    return e.code();
  }
  FAIL("expected WtpError");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("validate_sample accepts well-formed rows") {
  const std::vector<RawWtpRow> rows{{"r1", 10.0}, {"r2", 20.0}};
  const auto s = validate_sample(rows, Label::kOe);
  CHECK(s.size() == 2);
  CHECK(s.label() == Label::kOe);
  REQUIRE(s.respondent_ids());
  CHECK((*s.respondent_ids())[1] == "r2");
}

TEST_CASE("negative OE value is rejected naming the row") {
  const std::vector<RawWtpRow> rows{{"r1", -3.0}};
  try {
    validate_sample(rows, Label::kOe);
    FAIL("no throw");
  } catch (const WtpError& e) {
    CHECK(e.code() == ErrorCode::kNegativeValue);
    REQUIRE(e.issues().size() == 1);
    CHECK(e.issues()[0].id == "r1");
    CHECK(std::string(e.what()).find("r1") != std::string::npos);
  }
}

TEST_CASE("empty input") {
  CHECK(code_of([] { validate_sample({}, Label::kOe); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([] { WtpSample(Label::kBdm, {}); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("every offending row is listed") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<RawWtpRow> rows{{"a", nan}, {"b", 1.0}, {"b", -1.0}, {"c", 2.0}};
  try {
    validate_sample(rows, Label::kBdm);
    FAIL("no throw");
  } catch (const WtpError& e) {
    CHECK(e.issues().size() == 3);
    CHECK(e.issues()[0].code == ErrorCode::kNonFiniteValue);
  }
}

TEST_CASE("de-biased labels admit negative values") {
  CHECK_NOTHROW(WtpSample(Label::kDebiasedBasic, {-1.0, 2.0}));
  CHECK_NOTHROW(WtpSample(Label::kDebiasedFull, {-5.0}));
  CHECK(code_of([] { WtpSample(Label::kSimulatedTrue, {-1.0}); }) == ErrorCode::kNegativeValue);
}

TEST_CASE("id vector must align") {
  CHECK_THROWS_AS(WtpSample(Label::kOe, {1.0, 2.0}, std::vector<std::string>{"x"}), WtpError);
}

TEST_CASE("fuzzed rows: accept iff invariant predicate holds") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> kind(0, 9);
  for (int trial = 0; trial < 500; ++trial) {
    const Label label = trial % 2 ? Label::kOe : Label::kDebiasedEpsilon;
    std::vector<RawWtpRow> rows;
    bool ok = true;
    const int n = 1 + trial % 6;
    for (int i = 0; i < n; ++i) {
      double v = 10.0;
      std::string id = "r" + std::to_string(i);
      switch (kind(rng)) {
        case 0: v = std::numeric_limits<double>::infinity(); ok = false; break;
        case 1: v = -2.0; if (requires_nonnegative(label)) ok = false; break;
        case 2: if (i > 0) { id = "r0"; ok = false; } break;
        default: v = static_cast<double>(kind(rng));
      }
      rows.push_back({id, v});
    }
    bool accepted = true;
    try {
      validate_sample(rows, label);
    } catch (const WtpError&) {
      accepted = false;
    }
    CHECK(accepted == ok);
  }
}

TEST_CASE("sample mean and sd") {
  const std::vector<Money> five{5, 5, 5};
  CHECK(sample_mean(five) == 5.0);
  CHECK(sample_sd(five) == 0.0);
  const std::vector<Money> v{1, 2, 3, 4};
  CHECK(sample_mean(v) == doctest::Approx(2.5));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(code_of([] { sample_mean(std::span<const Money>{}); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("sample mean is translation equivariant") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Money> v(1000);
  for (auto& x : v) x = u(rng);
  const double m = sample_mean(v);
  for (double k : {-1e6, -3.5, 0.25, 1e6}) {
    std::vector<Money> w = v;
    for (auto& x : w) x += k;
    CHECK(std::abs(sample_mean(w) - (m + k)) <= 1e-9);
  }
}

TEST_CASE("dc dataset rejects off-grid cues and bad grids") {
  const std::vector<Money> grid{10, 20, 30};
  CHECK_NOTHROW(DcDataset({{10, true}, {30, false}}, grid));
  CHECK(code_of([&] { DcDataset({{15, true}}, grid); }) == ErrorCode::kOffGrid);
  CHECK_THROWS_AS(DcDataset({{10, true}}, {20, 10}), WtpError);
  CHECK_THROWS_AS(DcDataset({{10, true}}, {10, 10}), WtpError);
  CHECK(code_of([&] { DcDataset({}, grid); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([&] {
          DcDataset({{10, true}, {20, false}}, grid, std::vector<std::string>{"a", "a"});
        }) == ErrorCode::kDuplicateId);
}

TEST_CASE("theta distribution invariants") {
  CHECK_NOTHROW(ThetaDistribution(3.0, 7.0, 0.7 / 3.0, 0.3 / 7.0));
  const auto t = ThetaDistribution::zero_mean_on(1.0, 2.0);
  CHECK(t.neg_density() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(t.pos_density() == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(t.mass_below_zero() == doctest::Approx(2.0 / 3.0));
  // mass 1 but nonzero mean
  CHECK_THROWS_AS(ThetaDistribution(1.0, 1.0, 0.6, 0.4), WtpError);
  // zero mean but mass != 1
  CHECK_THROWS_AS(ThetaDistribution(1.0, 1.0, 0.6, 0.6), WtpError);
  CHECK_THROWS_AS(ThetaDistribution(-1.0, 2.0, 2.0 / 3.0, 1.0 / 6.0), WtpError);
}

TEST_CASE("fuzzed theta parameters: construction iff both invariants hold") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double x1 = u(rng), x2 = u(rng);
    const auto good = ThetaDistribution::zero_mean_on(x1, x2);
    CHECK(std::abs(good.neg_width() * good.neg_density() + x2 * good.pos_density() - 1.0) <= 1e-12);
    const double bump = (i % 2 ? 1.0 : -1.0) * 1e-6;
    CHECK_THROWS_AS(ThetaDistribution(x1, x2, good.neg_density() + bump, good.pos_density()),
                    WtpError);
  }
}

TEST_CASE("percentile interval ranks") {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = 1000 - i;  // unsorted input
  const auto ci = percentile_interval(v, 0.95);
  CHECK(ci.lower == 25.0);
  CHECK(ci.upper == 975.0);
  const auto one = percentile_interval({7.0}, 0.95);
  CHECK(one.lower == 7.0);
  CHECK(one.upper == 7.0);
}

TEST_CASE("logistic share stays inside (0, 1)") {
  LogisticDemand m;
  m.intercept = 5.0;
  m.slope = -0.5;
  CHECK(m.share(10.0) == doctest::Approx(0.5));
  for (double p : {-1e6, -100.0, 0.0, 100.0, 1e3}) {
    const double q = m.share(p);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(std::isfinite(q));
  }
  CHECK(m.usable());
  m.slope = 0.0;
  CHECK_FALSE(m.usable());
}

TEST_CASE("matrix psd") {
  CHECK(Matrix2{2, 1, 2}.is_psd());
  CHECK_FALSE(Matrix2{1, 2, 1}.is_psd());
  CHECK_FALSE(Matrix2{-1, 0, 1}.is_psd());
}

TEST_CASE("market config and error classes") {
  CHECK_NOTHROW(MarketConfig{}.validate());
  CHECK_THROWS_AS((MarketConfig{-1.0, 1000.0}.validate()), WtpError);
  CHECK_THROWS_AS((MarketConfig{5.0, 0.5}.validate()), WtpError);
  CHECK(is_validation_error(ErrorCode::kNegativeValue));
  CHECK(is_validation_error(ErrorCode::kParseError));
  CHECK_FALSE(is_validation_error(ErrorCode::kCompleteSeparation));
  CHECK_FALSE(is_validation_error(ErrorCode::kNonConvergence));
  CHECK(label_from_string("DEBIASED_FULL") == Label::kDebiasedFull);
  CHECK(to_string(Label::kBdm) == "BDM");
}

}
