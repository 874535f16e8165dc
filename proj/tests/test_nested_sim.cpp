#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vascr/errors.hpp"
#include "vascr/nested_sim.hpp"

using namespace vascr;

namespace {

// Engine with a known, linear-in-C1 one-year liability.
class LinearEngine : public LiabilityEngine {
 public:
  double time_zero() override { return 100.0; }
  double one_year(double c1) override {
    calls.push_back(c1);
    return 300.0 - 120.0 * c1;
  }
  std::vector<double> calls;
};

}  // namespace

TEST_CASE("quantile index is the rounded 99.5% rank") {
  CHECK(quantile_index(1000) == 995);
  CHECK(quantile_index(40000) == 39800);
  CHECK(quantile_index(4000) == 3980);
  CHECK(quantile_index(1) == 1);
  CHECK(quantile_index(100) == 100);  // floor(99.5 + 0.5)
  CHECK(quantile_index(10) == 10);
}

TEST_CASE("quantile of a permutation of 1..1000 is 995") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  std::mt19937_64 rng(41);
  std::shuffle(v.begin(), v.end(), rng);
  CHECK(scr_quantile(v) == 995.0);
}

TEST_CASE("quantile is permutation invariant and shift equivariant") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1e6);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(200 + i * 13);
    for (double& x : v) x = normal(rng);
    const double q = scr_quantile(v);
    auto p = v;
    std::shuffle(p.begin(), p.end(), rng);
    CHECK(scr_quantile(p) == q);
    const double c = normal(rng);
    for (double& x : p) x += c;
    CHECK(scr_quantile(p) == doctest::Approx(q + c).epsilon(1e-12));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(q == sorted[quantile_index(v.size()) - 1]);
  }
}

TEST_CASE("scenario coefficients follow the log-normal law") {
  MarketModel m;
  const auto s = generate_scenarios(40000, m, 43);
  REQUIRE(s.coefficients.size() == 40000);
  double mean = 0.0, sq = 0.0;
  for (double c : s.coefficients) {
    REQUIRE(c > 0.0);
    const double l = std::log(c);
    mean += l;
    sq += l * l;
  }
  mean /= 40000;
  const double sd = std::sqrt(sq / 40000 - mean * mean);
  const double mu = m.drift - 0.5 * m.volatility * m.volatility;
  CHECK(std::abs(mean - mu) < 3.0 * m.volatility / std::sqrt(40000.0));
  CHECK(sd == doctest::Approx(m.volatility).epsilon(0.02));
  CHECK(generate_scenarios(100, m, 7).coefficients == generate_scenarios(100, m, 7).coefficients);
  CHECK_THROWS_AS(generate_scenarios(1, m, 7), ConfigError);
}

TEST_CASE("knots are equally spaced and span the scenarios exactly") {
  const auto s = generate_scenarios(4000, MarketModel{}, 44);
  const auto k = build_sample_paths(s, 20);
  REQUIRE(k.size() == 20);
  const auto [lo, hi] = std::minmax_element(s.coefficients.begin(), s.coefficients.end());
  CHECK(k.front() == *lo);
  CHECK(k.back() == *hi);
  const double step = (*hi - *lo) / 19.0;
  for (std::size_t i = 1; i < k.size(); ++i) CHECK(k[i] - k[i - 1] == doctest::Approx(step).epsilon(1e-9));
  CHECK_THROWS_AS(build_sample_paths(s, 1), ConfigError);
  ScenarioSet flat{{1.0, 1.0, 1.0}, 0};
  CHECK_THROWS_AS(build_sample_paths(flat, 5), ConfigError);
}

TEST_CASE("linear interpolation is exact at knots and for linear data") {
  const double knots[] = {0.5, 1.0, 2.0, 2.5};
  double values[4];
  for (int i = 0; i < 4; ++i) values[i] = 3.0 - 2.0 * knots[i];
  for (int i = 0; i < 4; ++i) CHECK(interpolate_linear(knots, values, knots[i]) == values[i]);
  for (double x = 0.5; x <= 2.5; x += 0.01)
    CHECK(interpolate_linear(knots, values, x) == doctest::Approx(3.0 - 2.0 * x).epsilon(1e-12));
  CHECK_THROWS_AS(interpolate_linear(knots, values, 0.49), DomainError);
  CHECK_THROWS_AS(interpolate_linear(knots, values, 2.51), DomainError);
  const double one[] = {1.0};
  const double val[] = {7.0};
  CHECK(interpolate_linear(one, val, 1.0) == 7.0);
}

TEST_CASE("knot deltas discount the one-year liability") {
  LinearEngine e;
  const double knots[] = {0.8, 1.0, 1.2};
  const auto p = compute_delta_at_knots(knots, e, 0.03);
  CHECK(p.mvl0 == 100.0);
  CHECK(e.calls == std::vector<double>{0.8, 1.0, 1.2});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p.mvl1[i] == 300.0 - 120.0 * knots[i]);
    CHECK(p.deltas[i] == doctest::Approx(-100.0 + p.mvl1[i] / 1.03));
  }
  const double unsorted[] = {1.0, 0.9};
  CHECK_THROWS_AS(compute_delta_at_knots(unsorted, e, 0.03), ConfigError);
}

TEST_CASE("interpolated deltas reproduce a linear loss exactly") {
  LinearEngine e;
  const auto s = generate_scenarios(500, MarketModel{}, 45);
  const auto k = build_sample_paths(s, 7);
  const auto p = compute_delta_at_knots(k, e, 0.03);
  const auto d = interpolate_deltas(p, s);
  REQUIRE(d.values.size() == 500);
  for (std::size_t i = 0; i < 500; ++i)
    CHECK(d.values[i] == doctest::Approx(-100.0 + (300.0 - 120.0 * s.coefficients[i]) / 1.03));
  CHECK(std::is_sorted(d.sorted.begin(), d.sorted.end()));
}

TEST_CASE("relative error") {
  CHECK(relative_error(110.0, 100.0) == doctest::Approx(0.1));
  CHECK(relative_error(90.0, -100.0) == doctest::Approx(1.9));
  CHECK_THROWS_AS(relative_error(1.0, 0.0), DomainError);
}

TEST_CASE("MC pipeline at zero volatility has a single-point loss") {
  NestedInputs in;
  in.portfolio = testkit::random_contracts(20, 46);
  in.market.volatility = 0.0;
  in.mortality = MortalityTable::gompertz_makeham();
  in.valuation = {2, 1, true};
  in.n_scenarios = 50;
  in.n_knots = 5;
  in.threads = 1;
  const auto r = run_nested(in, Mode::McBaseline);
  REQUIRE(r.knots.size() == 1);
  double v0 = 0.0, v1 = 0.0;
  const double c1 = std::exp(in.market.drift);
  for (const auto& c : in.portfolio) {
    v0 += closed_form_oracle(c, in.market, in.mortality);
    v1 += closed_form_oracle_at_one_year(c, c1, in.market, in.mortality);
  }
  CHECK(r.mvl0 == doctest::Approx(v0).epsilon(1e-10));
  CHECK(r.scr == doctest::Approx(-v0 + v1 / 1.03).epsilon(1e-9));
  CHECK(r.timings.back().stage == "total");
  const auto j = report_to_json(r);
  CHECK(j["mode"] == "mc");
  CHECK(j.contains("timings"));
  CHECK_FALSE(j.contains("fine_tune"));
}

TEST_CASE("small MC pipeline yields monotone knots") {
  NestedInputs in;
  in.portfolio = testkit::random_contracts(15, 47);
  in.mortality = MortalityTable::gompertz_makeham();
  in.valuation = {200, 2, true};
  in.n_scenarios = 300;
  in.n_knots = 6;
  in.threads = 2;
  const auto r = run_nested(in, Mode::McBaseline);
  REQUIRE(r.knots.size() == 6);
  for (std::size_t i = 1; i < r.knots.size(); ++i) {
    CHECK(r.knots[i].mvl1 <= r.knots[i - 1].mvl1);
    CHECK(r.knots[i].delta <= r.knots[i - 1].delta);
  }
  CHECK(r.mc_contract_valuations == 15 * 7);
}
