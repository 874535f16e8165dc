#include "vascr/config.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <vector>

#include "vascr/errors.hpp"
#include "vascr/seeding.hpp"
#include "vascr/text.hpp"

namespace vascr {

RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "paper") return c;
  if (name == "desk") {
    c.portfolio_size = 1'000;
    c.n_representatives = 30;
    c.n_training = 50;
    c.n_validation = 50;
    c.n_paths = 1'000;
    c.n_scenarios = 4'000;
    c.n_knots = 20;
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected desk or paper)");
}

void validate(const RunConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  validate(cfg.ranges);
  validate(cfg.training);
  require(cfg.portfolio_size > 0 || !cfg.input_csv.empty(), "portfolio size must be positive");
  require(cfg.n_paths > 0, "valuation n_paths must be positive");
  require(cfg.n_scenarios >= 2, "nested n_scenarios must be at least 2");
  require(cfg.n_knots >= 2, "nested n_knots must be at least 2");
  require(cfg.market.volatility >= 0.0, "market volatility must be non-negative");
  require(cfg.market.risk_free_rate > -1.0, "market risk_free_rate must exceed -1");
  if (cfg.mode == Mode::Neural) {
    require(cfg.n_representatives > 0, "sampling representatives must be positive");
    require(cfg.n_training > 0, "sampling training must be positive");
    require(cfg.n_validation > 0, "sampling validation must be positive");
  }
  for (const std::string* path : {&cfg.input_csv, &cfg.mortality_csv}) {
    if (!path->empty() && !std::filesystem::exists(*path))
      throw ConfigError("file not found: " + *path);
  }
}

ModuleSeeds derive_module_seeds(std::uint64_t master) {
  return {derive_seed(master, "portfolio"),       derive_seed(master, "representatives"),
          derive_seed(master, "training_sample"), derive_seed(master, "validation"),
          derive_seed(master, "valuation"),       derive_seed(master, "minibatch"),
          derive_seed(master, "scenarios")};
}

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

[[noreturn]] void bad_value(std::string_view v) {
  throw ConfigError("invalid value '" + std::string(v) + "'");
}

double to_double(std::string_view v) {
  double d = 0;
  if (!text::parse_double(v, d)) bad_value(v);
  return d;
}
long long to_int(std::string_view v) {
  long long i = 0;
  if (!text::parse_int(v, i)) bad_value(v);
  return i;
}
unsigned long long to_uint(std::string_view v) {
  unsigned long long u = 0;
  if (!text::parse_uint(v, u)) bad_value(v);
  return u;
}
bool to_bool(std::string_view v) {
  v = text::trim(v);
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(v);
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view v, F&& parse) {
  std::vector<T> out;
  if (text::trim(v).empty()) return out;
  for (auto item : text::split(v, ',')) out.push_back(parse(text::trim(item)));
  return out;
}

std::string fmt_rider(Rider r) { return std::string(to_string(r)); }
std::string fmt_gender(Gender g) { return std::string(to_string(g)); }
Rider to_rider(std::string_view v) {
  if (v == "GMDB") return Rider::Gmdb;
  if (v == "GMDB_GMWB") return Rider::GmdbGmwb;
  bad_value(v);
}
Gender to_gender(std::string_view v) {
  if (v == "M") return Gender::Male;
  if (v == "F") return Gender::Female;
  bad_value(v);
}

std::string fmt_d(double d) { return text::shortest(d); }
std::string fmt_i(long long i) { return std::to_string(i); }

// Field factories; each accessor returns a reference to the member it names.
template <typename Acc>
Field real(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k), [acc](const RunConfig& c) { return fmt_d(acc(const_cast<RunConfig&>(c))); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = to_double(v); }};
}
template <typename Acc>
Field count(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
          [acc](RunConfig& c, std::string_view v) {
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(to_uint(v));
          }};
}
template <typename Acc>
Field integer(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
          [acc](RunConfig& c, std::string_view v) {
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(to_int(v));
          }};
}
template <typename Acc>
Field flag(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = to_bool(v); }};
}
template <typename Acc>
Field str(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k), [acc](const RunConfig& c) { return acc(const_cast<RunConfig&>(c)); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = std::string(text::trim(v)); }};
}
template <typename Acc>
Field reals(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return join(acc(const_cast<RunConfig&>(c)), fmt_d); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = parse_list<double>(v, to_double); }};
}
template <typename Acc>
Field ints(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) {
            return join(acc(const_cast<RunConfig&>(c)), [](int i) { return fmt_i(i); });
          },
          [acc](RunConfig& c, std::string_view v) {
            acc(c) = parse_list<int>(v, [](std::string_view x) { return static_cast<int>(to_int(x)); });
          }};
}
template <typename Acc>
Field riders(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return join(acc(const_cast<RunConfig&>(c)), fmt_rider); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = parse_list<Rider>(v, to_rider); }};
}
template <typename Acc>
Field genders(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) { return join(acc(const_cast<RunConfig&>(c)), fmt_gender); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = parse_list<Gender>(v, to_gender); }};
}
template <typename Acc>
Field int_range(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) {
            const IntRange& r = acc(const_cast<RunConfig&>(c));
            return fmt_i(r.lo) + "," + fmt_i(r.hi);
          },
          [acc](RunConfig& c, std::string_view v) {
            auto xs = parse_list<int>(v, [](std::string_view x) { return static_cast<int>(to_int(x)); });
            if (xs.size() != 2) bad_value(v);
            acc(c) = IntRange{xs[0], xs[1]};
          }};
}
template <typename Acc>
Field real_range(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](const RunConfig& c) {
            const RealRange& r = acc(const_cast<RunConfig&>(c));
            return fmt_d(r.lo) + "," + fmt_d(r.hi);
          },
          [acc](RunConfig& c, std::string_view v) {
            auto xs = parse_list<double>(v, to_double);
            if (xs.size() != 2) bad_value(v);
            acc(c) = RealRange{xs[0], xs[1]};
          }};
}

void add_grid(std::vector<Field>& f, const std::string& s, SamplingGrid RunConfig::*grid) {
  auto g = [grid](RunConfig& c) -> SamplingGrid& { return c.*grid; };
  f.push_back(riders(s, "riders", [g](RunConfig& c) -> auto& { return g(c).riders; }));
  f.push_back(genders(s, "genders", [g](RunConfig& c) -> auto& { return g(c).genders; }));
  f.push_back(ints(s, "ages", [g](RunConfig& c) -> auto& { return g(c).ages; }));
  f.push_back(reals(s, "account_values", [g](RunConfig& c) -> auto& { return g(c).account_values; }));
  f.push_back(reals(s, "gd", [g](RunConfig& c) -> auto& { return g(c).death_benefit_bases; }));
  f.push_back(reals(s, "gw", [g](RunConfig& c) -> auto& { return g(c).withdrawal_benefit_bases; }));
  f.push_back(reals(s, "withdrawal_rates", [g](RunConfig& c) -> auto& { return g(c).withdrawal_rates; }));
  f.push_back(ints(s, "maturities", [g](RunConfig& c) -> auto& { return g(c).maturities; }));
  f.push_back(integer(s, "id_base", [g](RunConfig& c) -> auto& { return g(c).id_base; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back({"run", "mode",
                 [](const RunConfig& c) { return std::string(to_string(c.mode)); },
                 [](RunConfig& c, std::string_view v) {
                   v = text::trim(v);
                   if (v == "nn")
                     c.mode = Mode::Neural;
                   else if (v == "mc")
                     c.mode = Mode::McBaseline;
                   else
                     bad_value(v);
                 }});
    f.push_back(count("run", "master_seed", [](RunConfig& c) -> auto& { return c.master_seed; }));
    f.push_back(count("run", "threads", [](RunConfig& c) -> auto& { return c.threads; }));

    f.push_back(count("portfolio", "size", [](RunConfig& c) -> auto& { return c.portfolio_size; }));
    f.push_back(riders("portfolio", "riders", [](RunConfig& c) -> auto& { return c.ranges.riders; }));
    f.push_back(genders("portfolio", "genders", [](RunConfig& c) -> auto& { return c.ranges.genders; }));
    f.push_back(int_range("portfolio", "age", [](RunConfig& c) -> auto& { return c.ranges.age; }));
    f.push_back(real_range("portfolio", "account_value",
                           [](RunConfig& c) -> auto& { return c.ranges.account_value; }));
    f.push_back(real_range("portfolio", "guarantee", [](RunConfig& c) -> auto& { return c.ranges.guarantee; }));
    f.push_back(reals("portfolio", "withdrawal_rates",
                      [](RunConfig& c) -> auto& { return c.ranges.withdrawal_rates; }));
    f.push_back(int_range("portfolio", "maturity", [](RunConfig& c) -> auto& { return c.ranges.maturity; }));
    f.push_back(str("portfolio", "input_csv", [](RunConfig& c) -> auto& { return c.input_csv; }));

    f.push_back(count("sampling", "representatives", [](RunConfig& c) -> auto& { return c.n_representatives; }));
    f.push_back(count("sampling", "training", [](RunConfig& c) -> auto& { return c.n_training; }));
    f.push_back(count("sampling", "validation", [](RunConfig& c) -> auto& { return c.n_validation; }));
    add_grid(f, "representative_grid", &RunConfig::representative_grid);
    add_grid(f, "training_grid", &RunConfig::training_grid);

    f.push_back(real("market", "risk_free_rate", [](RunConfig& c) -> auto& { return c.market.risk_free_rate; }));
    f.push_back(real("market", "drift", [](RunConfig& c) -> auto& { return c.market.drift; }));
    f.push_back(real("market", "volatility", [](RunConfig& c) -> auto& { return c.market.volatility; }));

    f.push_back(count("valuation", "n_paths", [](RunConfig& c) -> auto& { return c.n_paths; }));
    f.push_back(flag("valuation", "common_random_numbers",
                     [](RunConfig& c) -> auto& { return c.common_random_numbers; }));
    f.push_back(str("valuation", "mortality_csv", [](RunConfig& c) -> auto& { return c.mortality_csv; }));

    const std::string t = "training";
    f.push_back(real(t, "learning_rate", [](RunConfig& c) -> auto& { return c.training.learning_rate; }));
    f.push_back(count(t, "batch_size", [](RunConfig& c) -> auto& { return c.training.batch_size; }));
    f.push_back(flag(t, "batch_with_replacement",
                     [](RunConfig& c) -> auto& { return c.training.batch_with_replacement; }));
    f.push_back(real(t, "mu_max", [](RunConfig& c) -> auto& { return c.training.mu_max; }));
    f.push_back(count(t, "mse_interval", [](RunConfig& c) -> auto& { return c.training.mse_interval; }));
    f.push_back(count(t, "smoothing_window",
                      [](RunConfig& c) -> auto& { return c.training.stopping.smoothing_window; }));
    f.push_back(integer(t, "poly_degree", [](RunConfig& c) -> auto& { return c.training.stopping.poly_degree; }));
    f.push_back(count(t, "trend_window", [](RunConfig& c) -> auto& { return c.training.stopping.trend_window; }));
    f.push_back(real(t, "drop_factor", [](RunConfig& c) -> auto& { return c.training.stopping.drop_factor; }));
    f.push_back(real(t, "delta_initial", [](RunConfig& c) -> auto& { return c.training.delta_initial; }));
    f.push_back(real(t, "delta_finetune", [](RunConfig& c) -> auto& { return c.training.delta_finetune; }));
    f.push_back(count(t, "max_finetune_iters",
                      [](RunConfig& c) -> auto& { return c.training.max_finetune_iters; }));
    f.push_back(count(t, "max_total_iters", [](RunConfig& c) -> auto& { return c.training.max_total_iters; }));
    f.push_back(real(t, "target_normalizer",
                     [](RunConfig& c) -> auto& { return c.training.target_normalizer; }));

    f.push_back(count("nested", "n_scenarios", [](RunConfig& c) -> auto& { return c.n_scenarios; }));
    f.push_back(count("nested", "n_knots", [](RunConfig& c) -> auto& { return c.n_knots; }));
    return f;
  }();
  return all;
}

}  // namespace

RunConfig parse_config(std::istream& is, RunConfig base) {
  std::map<std::pair<std::string, std::string>, const Field*> index;
  std::map<std::string, bool> sections;
  for (const auto& f : fields()) {
    index[{f.section, f.key}] = &f;
    sections[f.section] = true;
  }
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto s = text::trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("malformed section header");
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      if (!sections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key(text::trim(s.substr(0, eq)));
    const auto it = index.find({section, key});
    if (it == index.end()) fail("unknown key '" + key + "' in [" + section + "]");
    try {
      it->second->set(base, text::trim(s.substr(eq + 1)));
    } catch (const ConfigError& e) {
      fail(key + ": " + e.what());
    }
  }
  return base;
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
  std::istringstream is{std::string(text)};
  return parse_config(is, std::move(base));
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace vascr
