#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace vascr {

enum class Rider { Gmdb, GmdbGmwb };
enum class Gender { Male, Female };

std::string_view to_string(Rider r);
std::string_view to_string(Gender g);

// One variable annuity policy.
//
// GMDB_GMWB contracts carry equal death and withdrawal benefit bases; GMDB-only
// contracts carry a zero withdrawal benefit base (their withdrawal rate is kept
// but never used by the valuation).
struct VaContract {
  std::int64_t id = 0;
  Rider rider = Rider::Gmdb;
  Gender gender = Gender::Male;
  int age = 0;
  double account_value = 0.0;
  double death_benefit_base = 0.0;
  double withdrawal_benefit_base = 0.0;
  double withdrawal_rate = 0.0;
  int maturity = 0;

  bool operator==(const VaContract&) const = default;
};

// Same contract terms, ignoring the id.
bool same_terms(const VaContract& a, const VaContract& b);

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const RealRange&) const = default;
};

// Attribute space of the input portfolio. Defaults are the production ranges.
struct AttributeRanges {
  std::vector<Rider> riders{Rider::Gmdb, Rider::GmdbGmwb};
  std::vector<Gender> genders{Gender::Male, Gender::Female};
  IntRange age{20, 60};
  RealRange account_value{1e4, 5e5};
  RealRange guarantee{0.5e4, 6e5};
  std::vector<double> withdrawal_rates{0.04, 0.05, 0.06, 0.07, 0.08};
  IntRange maturity{10, 25};

  bool operator==(const AttributeRanges&) const = default;
};

void validate(const AttributeRanges& ranges);

struct PortfolioSpec {
  std::size_t size = 0;
  AttributeRanges ranges;
  std::uint64_t rng_seed = 0;
};

// Discrete per-attribute value lists; the candidate set is their cartesian
// product. Enumerated contracts are numbered from id_base.
struct SamplingGrid {
  std::vector<Rider> riders;
  std::vector<Gender> genders;
  std::vector<int> ages;
  std::vector<double> account_values;
  std::vector<double> death_benefit_bases;
  std::vector<double> withdrawal_benefit_bases;
  std::vector<double> withdrawal_rates;
  std::vector<int> maturities;
  std::int64_t id_base = 0;

  bool operator==(const SamplingGrid&) const = default;
};

// Grid the representative contracts are drawn from.
SamplingGrid representative_grid();
// Grid the training contracts are drawn from; its numeric values avoid the
// representative grid's values.
SamplingGrid training_grid();

// Throws ConfigError unless the contract lies inside the production ranges.
void check_contract(const VaContract& c);

// Uniform, independent draws of every attribute; currency is rounded to cents.
std::vector<VaContract> generate_synthetic_portfolio(const PortfolioSpec& spec);

// Cartesian product with GMWB rows requiring GD == GW, GMDB rows forced to
// GW = 0, and duplicates removed. Order is lexicographic in the grid lists.
std::vector<VaContract> enumerate_grid(const SamplingGrid& grid);

// n distinct grid contracts, uniformly without replacement, in shuffled order.
std::vector<VaContract> sample_representatives(const SamplingGrid& grid, std::size_t n,
                                               std::uint64_t seed);

// n distinct contracts of an existing portfolio, uniformly without replacement.
std::vector<VaContract> sample_validation(std::span<const VaContract> portfolio, std::size_t n,
                                          std::uint64_t seed);

// Portfolio CSV: id,rider,gender,age,account_value,gd,gw,withdrawal_rate,maturity
void write_portfolio_csv(std::ostream& os, std::span<const VaContract> contracts);
std::vector<VaContract> read_portfolio_csv(std::istream& is);

}  // namespace vascr
