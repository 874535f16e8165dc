#include "vascr/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "vascr/errors.hpp"
#include "vascr/text.hpp"

namespace vascr {

std::string_view to_string(Rider r) { return r == Rider::Gmdb ? "GMDB" : "GMDB_GMWB"; }
std::string_view to_string(Gender g) { return g == Gender::Male ? "M" : "F"; }

bool same_terms(const VaContract& a, const VaContract& b) {
  VaContract x = a;
  x.id = b.id;
  return x == b;
}

namespace {

double round_cents(double v) { return std::round(v * 100.0) / 100.0; }

bool finite_range(const RealRange& r) {
  return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi;
}

template <typename T>
const T& pick(const std::vector<T>& values, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, values.size() - 1);
  return values[dist(rng)];
}

int draw_int(const IntRange& r, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}

double draw_real(const RealRange& r, std::mt19937_64& rng) {
  if (r.lo == r.hi) {
    rng.discard(1);
    return r.lo;
  }
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

auto ordering_key(const VaContract& c) {
  return std::make_tuple(c.rider, c.gender, c.age, c.account_value, c.death_benefit_base,
                         c.withdrawal_benefit_base, c.withdrawal_rate, c.maturity);
}

}  // namespace

void validate(const AttributeRanges& r) {
  if (r.riders.empty() || r.genders.empty() || r.withdrawal_rates.empty())
    throw ConfigError("attribute value set is empty");
  if (r.age.lo > r.age.hi) throw ConfigError("age range is empty");
  if (r.maturity.lo > r.maturity.hi) throw ConfigError("maturity range is empty");
  if (r.maturity.lo < 2) throw ConfigError("maturity must be at least 2 years");
  if (!finite_range(r.account_value) || r.account_value.lo < 0)
    throw ConfigError("account value range is invalid");
  if (!finite_range(r.guarantee) || r.guarantee.lo < 0)
    throw ConfigError("guarantee range is invalid");
  for (double w : r.withdrawal_rates)
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("withdrawal rate outside [0, 1]");
}

SamplingGrid representative_grid() {
  SamplingGrid g;
  g.riders = {Rider::Gmdb, Rider::GmdbGmwb};
  g.genders = {Gender::Male, Gender::Female};
  g.ages = {20, 30, 40, 50, 60};
  g.account_values = {1e4, 1e5, 2e5, 3e5, 4e5, 5e5};
  g.death_benefit_bases = {0.5e4, 1e5, 2e5, 3e5, 4e5, 5e5, 6e5};
  g.withdrawal_benefit_bases = g.death_benefit_bases;
  g.withdrawal_rates = {0.04, 0.08};
  g.maturities = {10, 15, 20, 25};
  g.id_base = 10'000'000;
  return g;
}

SamplingGrid training_grid() {
  SamplingGrid g;
  g.riders = {Rider::Gmdb, Rider::GmdbGmwb};
  g.genders = {Gender::Male, Gender::Female};
  g.ages = {23, 27, 33, 37, 43, 47, 53, 57};
  g.account_values = {0.2e5, 1.5e5, 2.5e5, 3.5e5, 4.5e5};
  g.death_benefit_bases = {0.5e5, 1.5e5, 2.5e5, 3.5e5, 4.5e5, 5.5e5};
  g.withdrawal_benefit_bases = g.death_benefit_bases;
  g.withdrawal_rates = {0.05, 0.06, 0.07};
  g.maturities = {12, 13, 17, 18, 22, 23};
  g.id_base = 20'000'000;
  return g;
}

void check_contract(const VaContract& c) {
  auto fail = [&](const char* what) {
    throw ConfigError("contract " + std::to_string(c.id) + ": " + what);
  };
  if (c.age < 20 || c.age > 60) fail("age outside [20, 60]");
  if (c.maturity < 10 || c.maturity > 25) fail("maturity outside [10, 25]");
  if (!(c.account_value >= 1e4 && c.account_value <= 5e5)) fail("account value outside [1e4, 5e5]");
  if (!(c.death_benefit_base >= 0.5e4 && c.death_benefit_base <= 6e5))
    fail("death benefit base outside [0.5e4, 6e5]");
  if (!(c.withdrawal_rate >= 0.04 - 1e-12 && c.withdrawal_rate <= 0.08 + 1e-12))
    fail("withdrawal rate outside [0.04, 0.08]");
  if (c.rider == Rider::GmdbGmwb) {
    if (c.withdrawal_benefit_base != c.death_benefit_base) fail("GMWB bases differ");
  } else if (c.withdrawal_benefit_base != 0.0) {
    fail("GMDB-only contract carries a withdrawal base");
  }
}

std::vector<VaContract> generate_synthetic_portfolio(const PortfolioSpec& spec) {
  if (spec.size == 0) throw ConfigError("portfolio size must be at least 1");
  validate(spec.ranges);
  const AttributeRanges& r = spec.ranges;

  std::mt19937_64 rng(spec.rng_seed);
  std::vector<VaContract> out;
  out.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    VaContract c;
    c.id = static_cast<std::int64_t>(i);
    c.rider = pick(r.riders, rng);
    c.gender = pick(r.genders, rng);
    c.age = draw_int(r.age, rng);
    c.account_value = round_cents(draw_real(r.account_value, rng));
    c.death_benefit_base = round_cents(draw_real(r.guarantee, rng));
    c.withdrawal_benefit_base = c.rider == Rider::GmdbGmwb ? c.death_benefit_base : 0.0;
    c.withdrawal_rate = pick(r.withdrawal_rates, rng);
    c.maturity = draw_int(r.maturity, rng);
    out.push_back(c);
  }
  return out;
}

std::vector<VaContract> enumerate_grid(const SamplingGrid& g) {
  std::vector<VaContract> out;
  std::set<decltype(ordering_key(VaContract{}))> seen;
  VaContract c;
  for (Rider rider : g.riders)
    for (Gender gender : g.genders)
      for (int age : g.ages)
        for (double av : g.account_values)
          for (double gd : g.death_benefit_bases)
            for (double gw : g.withdrawal_benefit_bases)
              for (double rate : g.withdrawal_rates)
                for (int maturity : g.maturities) {
                  if (rider == Rider::GmdbGmwb && gd != gw) continue;
                  c.rider = rider;
                  c.gender = gender;
                  c.age = age;
                  c.account_value = av;
                  c.death_benefit_base = gd;
                  c.withdrawal_benefit_base = rider == Rider::GmdbGmwb ? gw : 0.0;
                  c.withdrawal_rate = rate;
                  c.maturity = maturity;
                  if (!seen.insert(ordering_key(c)).second) continue;
                  c.id = g.id_base + static_cast<std::int64_t>(out.size());
                  out.push_back(c);
                }
  return out;
}

namespace {

std::vector<VaContract> sample_without_replacement(std::span<const VaContract> pool,
                                                   std::size_t n, std::uint64_t seed) {
  if (n > pool.size())
    throw ConfigError("cannot sample " + std::to_string(n) + " contracts from " +
                      std::to_string(pool.size()));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform n-subset in random order.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
    std::swap(idx[i], idx[dist(rng)]);
  }
  std::vector<VaContract> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[idx[i]]);
  return out;
}

}  // namespace

std::vector<VaContract> sample_representatives(const SamplingGrid& grid, std::size_t n,
                                               std::uint64_t seed) {
  const auto all = enumerate_grid(grid);
  return sample_without_replacement(all, n, seed);
}

std::vector<VaContract> sample_validation(std::span<const VaContract> portfolio, std::size_t n,
                                          std::uint64_t seed) {
  return sample_without_replacement(portfolio, n, seed);
}

void write_portfolio_csv(std::ostream& os, std::span<const VaContract> contracts) {
  os << "id,rider,gender,age,account_value,gd,gw,withdrawal_rate,maturity\n";
  for (const auto& c : contracts) {
    os << c.id << ',' << to_string(c.rider) << ',' << to_string(c.gender) << ',' << c.age << ','
       << text::cents(c.account_value) << ',' << text::cents(c.death_benefit_base) << ','
       << text::cents(c.withdrawal_benefit_base) << ',' << text::shortest(c.withdrawal_rate) << ','
       << c.maturity << '\n';
  }
}

std::vector<VaContract> read_portfolio_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError("empty portfolio file", 1);
  ++lineno;
  if (text::trim(line) != "id,rider,gender,age,account_value,gd,gw,withdrawal_rate,maturity")
    throw ParseError("unexpected portfolio header", lineno);

  std::vector<VaContract> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line), ',');
    if (f.size() != 9) throw ParseError("expected 9 fields, got " + std::to_string(f.size()), lineno);
    VaContract c;
    long long iv = 0;
    if (!text::parse_int(f[0], iv)) throw ParseError("bad id", lineno);
    c.id = iv;
    auto rider = text::trim(f[1]);
    if (rider == "GMDB")
      c.rider = Rider::Gmdb;
    else if (rider == "GMDB_GMWB")
      c.rider = Rider::GmdbGmwb;
    else
      throw ParseError("bad rider '" + std::string(rider) + "'", lineno);
    auto gender = text::trim(f[2]);
    if (gender == "M")
      c.gender = Gender::Male;
    else if (gender == "F")
      c.gender = Gender::Female;
    else
      throw ParseError("bad gender '" + std::string(gender) + "'", lineno);
    if (!text::parse_int(f[3], iv)) throw ParseError("bad age", lineno);
    c.age = static_cast<int>(iv);
    if (!text::parse_double(f[4], c.account_value)) throw ParseError("bad account_value", lineno);
    if (!text::parse_double(f[5], c.death_benefit_base)) throw ParseError("bad gd", lineno);
    if (!text::parse_double(f[6], c.withdrawal_benefit_base)) throw ParseError("bad gw", lineno);
    if (!text::parse_double(f[7], c.withdrawal_rate)) throw ParseError("bad withdrawal_rate", lineno);
    if (!text::parse_int(f[8], iv)) throw ParseError("bad maturity", lineno);
    c.maturity = static_cast<int>(iv);
    out.push_back(c);
  }
  if (out.empty()) throw ParseError("portfolio file has no contracts", lineno);
  return out;
}

}  // namespace vascr
