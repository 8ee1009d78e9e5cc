#pragma once

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "tsel/bounds.hpp"
#include "tsel/inference.hpp"
#include "tsel/io.hpp"
#include "tsel/pivotal.hpp"

namespace tsel::cli {

/// Invalid configuration; the message carries "source:line: ".
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string output;  // file name inside --out; empty selects a default
  std::string input;   // data CSV for ci, tune, bootstrap-eval
  std::string critical_values;  // optional table CSV; simulated when empty

  std::string process = "var1";
  std::string model = "mean";
  std::vector<std::string> statistic{"bel"};
  std::vector<std::string> kind{"el"};

  std::vector<double> b{0.1};
  std::vector<double> cstar{0.1};
  std::vector<double> rho{0.0};
  std::vector<double> alpha{0.05};
  std::vector<std::int64_t> k{1};
  std::vector<std::int64_t> n{100};
  std::vector<std::int64_t> L{2};

  bool expansive = false;   // bounds: add expansive-block rows
  bool asymptotic = false;  // bounds: add n = inf rows from limit paths
  bool analytic = false;    // bounds: add determinant-integral and product-bound rows
  bool widths = false;      // coverage: mean interval width (k = 1)

  std::int64_t replications = 20000;           // R
  std::int64_t resamples = 100;                // B
  std::int64_t grid = 2000;                    // M
  std::int64_t critical_replications = 20000;  // R for simulated critical values
  std::int64_t block = 4;                      // b_n

  bool operator==(const RunConfig&) const = default;
};

inline const std::set<std::string>& commands() {
  static const std::set<std::string> c{"critvals", "bounds", "coverage", "ci", "tune", "bootstrap-eval"};
  return c;
}

namespace detail {

inline std::string number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <class T, class F>
std::string list(const std::vector<T>& v, F&& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

class Reader {
 public:
  Reader(const toml::table& t, std::string source) : t_(t), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    std::size_t line = 0;
    if (const auto* node = t_.get(key)) line = node->source().begin.line;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + key + ": " + msg);
  }

  bool has(const std::string& key) const { return t_.get(key) != nullptr; }

  std::string string(const std::string& key, std::string fallback) const {
    const auto* node = t_.get(key);
    if (!node) return fallback;
    if (!node->is_string()) fail(key, "expected a string");
    return node->value<std::string>().value();
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto* node = t_.get(key);
    if (!node) return fallback;
    if (!node->is_boolean()) fail(key, "expected true or false");
    return node->value<bool>().value();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min) const {
    const auto* node = t_.get(key);
    if (!node) return fallback;
    if (!node->is_integer()) fail(key, "expected an integer");
    const auto v = node->value<std::int64_t>().value();
    if (v < min) fail(key, "must be at least " + std::to_string(min));
    return v;
  }

  template <class T>
  std::vector<T> grid(const std::string& key, std::vector<T> fallback) const {
    const auto* node = t_.get(key);
    if (!node) return fallback;
    std::vector<T> out;
    auto take = [&](const toml::node& x) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!x.is_string()) fail(key, "expected strings");
        out.push_back(x.value<std::string>().value());
      } else if constexpr (std::is_integral_v<T>) {
        if (!x.is_integer()) fail(key, "expected integers");
        out.push_back(x.value<std::int64_t>().value());
      } else {
        if (!x.is_number()) fail(key, "expected numbers");
        out.push_back(x.value<double>().value());
      }
    };
    if (const auto* arr = node->as_array()) {
      for (const auto& x : *arr) take(x);
    } else {
      take(*node);
    }
    if (out.empty()) fail(key, "grid must be nonempty");
    return out;
  }

 private:
  const toml::table& t_;
  std::string source_;
};

}  // namespace detail

/// Parses and validates a TOML run configuration.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  toml::table t;
  try {
    t = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  static const std::set<std::string> known{
      "command", "seed", "output", "input", "critical_values", "process", "model", "statistic",
      "kind", "b", "cstar", "rho", "alpha", "k", "n", "L", "expansive", "asymptotic", "analytic",
      "widths", "replications", "resamples", "grid", "critical_replications", "block"};
  detail::Reader r(t, source);
  for (const auto& [key, node] : t) {
    const std::string name(key.str());
    if (!known.count(name)) r.fail(name, "unknown key");
  }

  RunConfig c;
  if (!r.has("command")) throw ConfigError(source + ":1: command: missing required key");
  c.command = r.string("command", "");
  if (!commands().count(c.command)) r.fail("command", "unknown subcommand '" + c.command + "'");
  if (!r.has("seed")) throw ConfigError(source + ":1: seed: missing required key (no wall-clock default)");
  c.seed = static_cast<std::uint64_t>(r.integer("seed", 0, 0));
  c.output = r.string("output", "");
  c.input = r.string("input", "");
  c.critical_values = r.string("critical_values", "");
  c.process = r.string("process", c.process);
  c.model = r.string("model", c.model);
  c.statistic = r.grid("statistic", c.statistic);
  c.kind = r.grid("kind", c.kind);
  c.b = r.grid("b", c.b);
  c.cstar = r.grid("cstar", c.cstar);
  c.rho = r.grid("rho", c.rho);
  c.alpha = r.grid("alpha", c.alpha);
  c.k = r.grid("k", c.k);
  c.n = r.grid("n", c.n);
  c.L = r.grid("L", c.L);
  c.expansive = r.boolean("expansive", c.expansive);
  c.asymptotic = r.boolean("asymptotic", c.asymptotic);
  c.analytic = r.boolean("analytic", c.analytic);
  c.widths = r.boolean("widths", c.widths);
  c.replications = r.integer("replications", c.replications, 1);
  c.resamples = r.integer("resamples", c.resamples, 1);
  c.grid = r.integer("grid", c.grid, 100);
  c.critical_replications = r.integer("critical_replications", c.critical_replications, 1);
  c.block = r.integer("block", c.block, 1);

  try {
    parse_process_kind(c.process);
  } catch (const InvalidArgument& e) {
    r.fail("process", e.what());
  }
  if (c.model != "mean" && c.model != "regression" && c.model != "origin-regression")
    r.fail("model", "expected mean, regression or origin-regression");
  for (const auto& s : c.statistic) {
    try {
      parse_statistic(s);
    } catch (const InvalidArgument& e) {
      r.fail("statistic", e.what());
    }
  }
  for (const auto& s : c.kind) {
    try {
      parse_limit_kind(s);
    } catch (const InvalidArgument& e) {
      r.fail("kind", e.what());
    }
  }
  for (double x : c.b)
    if (!(x > 0.0 && x < 1.0)) r.fail("b", "entries must lie in (0, 1)");
  for (double x : c.cstar)
    if (!(x > 0.0 && std::isfinite(x))) r.fail("cstar", "entries must be positive");
  for (double x : c.alpha)
    if (!(x > 0.0 && x < 1.0)) r.fail("alpha", "entries must lie in (0, 1)");
  for (double x : c.rho)
    if (!std::isfinite(x)) r.fail("rho", "entries must be finite");
  for (auto x : c.k)
    if (x < 1) r.fail("k", "entries must be positive");
  for (auto x : c.n)
    if (x < 2) r.fail("n", "entries must be at least 2");
  for (auto x : c.L)
    if (x < 2) r.fail("L", "entries must be at least 2");
  const bool needs_input = c.command == "ci" || c.command == "tune" || c.command == "bootstrap-eval";
  if (needs_input && c.input.empty())
    throw ConfigError(source + ":1: input: required by '" + c.command + "'");
  if (c.command == "tune") {
    const auto s = parse_statistic(c.statistic.front());
    if (s != Statistic::PBEL && s != Statistic::PEBEL)
      r.fail("statistic", "tune needs pbel or pebel");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":0: cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// TOML text that parses back to an equal configuration.
inline std::string serialize(const RunConfig& c) {
  using detail::list;
  using detail::number;
  using detail::quoted;
  auto num = [](double x) { return number(x); };
  auto integer = [](std::int64_t x) { return std::to_string(x); };
  auto str = [](const std::string& s) { return quoted(s); };
  auto flag = [](bool x) { return std::string(x ? "true" : "false"); };
  std::ostringstream os;
  os << "command = " << quoted(c.command) << "\n";
  os << "seed = " << c.seed << "\n";
  if (!c.output.empty()) os << "output = " << quoted(c.output) << "\n";
  if (!c.input.empty()) os << "input = " << quoted(c.input) << "\n";
  if (!c.critical_values.empty()) os << "critical_values = " << quoted(c.critical_values) << "\n";
  os << "process = " << quoted(c.process) << "\n";
  os << "model = " << quoted(c.model) << "\n";
  os << "statistic = " << list(c.statistic, str) << "\n";
  os << "kind = " << list(c.kind, str) << "\n";
  os << "b = " << list(c.b, num) << "\n";
  os << "cstar = " << list(c.cstar, num) << "\n";
  os << "rho = " << list(c.rho, num) << "\n";
  os << "alpha = " << list(c.alpha, num) << "\n";
  os << "k = " << list(c.k, integer) << "\n";
  os << "n = " << list(c.n, integer) << "\n";
  os << "L = " << list(c.L, integer) << "\n";
  os << "expansive = " << flag(c.expansive) << "\n";
  os << "asymptotic = " << flag(c.asymptotic) << "\n";
  os << "analytic = " << flag(c.analytic) << "\n";
  os << "widths = " << flag(c.widths) << "\n";
  os << "replications = " << c.replications << "\n";
  os << "resamples = " << c.resamples << "\n";
  os << "grid = " << c.grid << "\n";
  os << "critical_replications = " << c.critical_replications << "\n";
  os << "block = " << c.block << "\n";
  return os.str();
}

struct RunOptions {
  std::string out_dir = ".";
  unsigned threads = 0;
  bool metadata = true;
  std::string base_dir;  // relative input paths resolve against this
  std::ostream* log = &std::cerr;
};

namespace detail {

inline std::string cell(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "INF" : "-INF";
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void provenance(std::ostream& os, const RunConfig& c, const RunOptions& o) {
  auto num = [](double x) { return cell(x); };
  auto integer = [](std::int64_t x) { return std::to_string(x); };
  auto str = [](const std::string& s) { return s; };
  os << "# tsel " << c.command << "\n";
  os << "# seed=" << c.seed << " M=" << c.grid << " R=" << c.replications << " B=" << c.resamples
     << " critical_R=" << c.critical_replications << "\n";
  os << "# grid: process=" << c.process << " model=" << c.model
     << " statistic=" << list(c.statistic, str) << " kind=" << list(c.kind, str)
     << " b=" << list(c.b, num) << " cstar=" << list(c.cstar, num) << " rho=" << list(c.rho, num)
     << " alpha=" << list(c.alpha, num) << " k=" << list(c.k, integer) << " n=" << list(c.n, integer)
     << " L=" << list(c.L, integer) << "\n";
  if (!c.input.empty()) os << "# input=" << c.input << "\n";
  if (!c.critical_values.empty()) os << "# critical_values=" << c.critical_values << "\n";
  if (o.metadata) os << "# generated=" << timestamp() << "\n";
}

inline std::string resolve(const std::string& path, const RunOptions& o) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || o.base_dir.empty()) return path;
  return (std::filesystem::path(o.base_dir) / p).string();
}

inline MomentModel model_for(const std::string& name, Eigen::Index columns) {
  if (name == "mean") return mean_model(static_cast<int>(columns));
  if (name == "regression") {
    tsel::detail::require(columns >= 1, "regression needs a response column");
    return regression_model(static_cast<int>(columns) - 1);
  }
  tsel::detail::require(columns == 2, "origin-regression needs exactly two columns (x, y)");
  return origin_regression_model();
}

// Expands statistic x b x cstar x alpha; b and cstar only where they apply.
inline std::vector<MethodSpec> methods(const RunConfig& c) {
  std::vector<MethodSpec> out;
  for (const auto& s : c.statistic) {
    MethodSpec base;
    base.statistic = parse_statistic(s);
    const std::vector<double> bs = base.blockwise() ? c.b : std::vector<double>{base.b};
    const std::vector<double> cs = base.penalized() ? c.cstar : std::vector<double>{base.cstar};
    for (double b : bs)
      for (double cs_ : cs)
        for (double a : c.alpha) {
          MethodSpec m = base;
          m.b = b;
          m.cstar = cs_;
          m.alpha = a;
          out.push_back(m);
        }
  }
  return out;
}

class LevelSource {
 public:
  LevelSource(const RunConfig& c, const RunOptions& o) : config_(c), options_(o) {
    if (!c.critical_values.empty()) {
      const std::string path = resolve(c.critical_values, o);
      std::ifstream in(path);
      if (!in) throw InvalidArgument(path + ":0: cannot open critical-value table");
      table_ = CriticalValueTable::read_csv(in);
    }
  }

  CriticalLevel operator()(const MethodSpec& m, int k) {
    if (table_) return lookup_level(m, k, *table_);
    std::ostringstream key;
    key << to_string(m.statistic) << '|' << k << '|' << m.b << '|' << m.cstar << '|' << m.alpha;
    auto it = cache_.find(key.str());
    if (it != cache_.end()) return it->second;
    *options_.log << "simulating critical value " << key.str() << "\n";
    const CriticalLevel level =
        simulate_level(m, k, static_cast<int>(config_.grid),
                       static_cast<std::size_t>(config_.critical_replications),
                       rng::substream(config_.seed, 0x63726974ULL), options_.threads);
    cache_.emplace(key.str(), level);
    return level;
  }

 private:
  const RunConfig& config_;
  const RunOptions& options_;
  std::optional<CriticalValueTable> table_;
  std::map<std::string, CriticalLevel> cache_;
};

inline std::string method_cells(const MethodSpec& m) {
  return to_string(m.statistic) + "," + (m.blockwise() ? cell(m.b) : "NA") + "," +
         (m.penalized() ? cell(m.cstar) : "NA") + "," + cell(m.alpha);
}

inline std::string level_cell(const CriticalLevel& l) { return l.value ? cell(*l.value) : "INF"; }

inline int moment_dimension(const MomentModel& m) { return m.k > m.p ? m.p : m.k; }

inline std::uint64_t sz(std::int64_t x) { return static_cast<std::uint64_t>(x); }

inline void run_critvals(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  CriticalValueTable table;
  table.grid = static_cast<int>(c.grid);
  table.replications = sz(c.replications);
  table.seed = c.seed;
  for (const auto& name : c.kind) {
    const LimitKind kind = parse_limit_kind(name);
    const std::vector<double> bs = blockwise(kind) ? c.b : std::vector<double>{0.1};
    const std::vector<double> cs = penalized_kind(kind) ? c.cstar : std::vector<double>{0.0};
    for (auto k : c.k)
      for (double b : bs)
        for (double cstar : cs) {
          LimitSpec spec;
          spec.kind = kind;
          spec.k = static_cast<int>(k);
          spec.b = b;
          spec.cstar = cstar;
          spec.grid = static_cast<int>(c.grid);
          spec.replications = sz(c.replications);
          spec.seed = c.seed;
          *o.log << "critvals " << name << " k=" << k << " b=" << b << " cstar=" << cstar << "\n";
          for (auto& e : critical_values(draw_limit(spec, o.threads), c.alpha)) table.entries.push_back(e);
        }
  }
  provenance(os, c, o);
  table.write_csv(os);
}

inline void run_bounds(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  const ProcessKind pk = parse_process_kind(c.process);
  tsel::detail::require(pk != ProcessKind::Regression, "bounds use the mean model; choose ar1, ma1 or var1");
  std::vector<BoundRow> rows;
  for (auto n : c.n)
    for (double rho : c.rho)
      for (auto k : c.k) {
        ProcessSpec spec;
        spec.kind = pk;
        spec.coefficient = rho;
        spec.dimension = static_cast<int>(k);
        const MomentModel model = mean_model(static_cast<int>(k));
        const Vector theta0 = Vector::Zero(k);
        auto add = [&](const Scheme& scheme, const std::string& label) {
          *o.log << "bounds n=" << n << " rho=" << rho << " k=" << k << " " << label << "\n";
          rows.push_back({sz(n), rho, static_cast<int>(k), label,
                          finite_sample_bound(spec, sz(n), scheme, model, theta0, sz(c.replications),
                                              c.seed, o.threads)});
        };
        for (auto l : c.L) add(Overlapping{1.0 / static_cast<double>(l)}, "L=" + std::to_string(l));
        if (c.expansive) add(Expansive{}, "expansive");
      }
  if (c.asymptotic)
    for (auto k : c.k)
      for (auto l : c.L) {
        BoundEstimate beta = beta_estimate(static_cast<int>(k), 1.0 / static_cast<double>(l),
                                           static_cast<int>(c.grid), sz(c.replications), c.seed, o.threads);
        beta.probability = 1.0 - beta.probability;
        rows.push_back({0, std::nan(""), static_cast<int>(k), "L=" + std::to_string(l), beta});
      }
  if (c.analytic)
    for (auto l : c.L) {
      const BoundEstimate p =
          theorem1_probability(1.0 / static_cast<double>(l), sz(c.replications), c.seed, o.threads);
      const double pc = std::clamp(p.probability, 0.0, 0.5);
      for (auto k : c.k) {
        BoundEstimate e = p;
        e.probability = proposition1_bound(1.0 / static_cast<double>(l), static_cast<int>(k), pc);
        e.standard_error = 2.0 * static_cast<double>(k) * std::pow(1.0 - 2.0 * pc, static_cast<double>(k - 1)) *
                           p.standard_error;
        rows.push_back({0, std::nan(""), static_cast<int>(k),
                        "L=" + std::to_string(l) + (k == 1 ? " integral" : " product-bound"), e});
      }
    }
  provenance(os, c, o);
  write_bound_rows(os, rows);
}

inline void run_coverage(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  const ProcessKind pk = parse_process_kind(c.process);
  tsel::detail::require(pk != ProcessKind::Regression, "coverage uses the mean model; choose ar1, ma1 or var1");
  LevelSource levels(c, o);
  std::ostringstream body;
  body << "process,rho,n,k,statistic,b,cstar,alpha,critical,coverage,se,hull_rate,mean_width,failures,warning\n";
  for (double rho : c.rho)
    for (auto n : c.n)
      for (auto k : c.k)
        for (const auto& m : methods(c)) {
          ProcessSpec spec;
          spec.kind = pk;
          spec.coefficient = rho;
          spec.dimension = static_cast<int>(k);
          const CriticalLevel level = levels(m, static_cast<int>(k));
          *o.log << "coverage rho=" << rho << " n=" << n << " k=" << k << " " << method_cells(m) << "\n";
          const bool widths = c.widths && k == 1;
          const CoverageResult r =
              coverage_experiment(spec, sz(n), mean_model(static_cast<int>(k)), m, Vector::Zero(k),
                                  sz(c.replications), c.seed, level, o.threads, widths);
          std::string warning;
          if (r.degenerate) warning = "degenerate";
          else if (r.failures) warning = "solver-failures";
          body << c.process << ',' << cell(rho) << ',' << n << ',' << k << ',' << method_cells(m) << ','
               << level_cell(level) << ',' << cell(r.coverage) << ',' << cell(r.standard_error) << ','
               << cell(r.hull_rate) << ',' << (r.mean_width ? cell(*r.mean_width) : "NA") << ','
               << r.failures << ',' << warning << '\n';
        }
  provenance(os, c, o);
  os << body.str();
}

inline Matrix load_input(const RunConfig& c, const RunOptions& o) {
  return read_data_csv(resolve(c.input, o)).values;
}

inline void run_ci(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  const Matrix data = load_input(c, o);
  const MomentModel model = model_for(c.model, data.cols());
  LevelSource levels(c, o);
  nlohmann::ordered_json doc;
  doc["command"] = "ci";
  doc["input"] = c.input;
  doc["model"] = c.model;
  doc["observations"] = data.rows();
  doc["seed"] = c.seed;
  doc["M"] = c.grid;
  doc["critical_R"] = c.critical_replications;
  if (!c.critical_values.empty()) doc["critical_values"] = c.critical_values;
  if (o.metadata) doc["generated"] = timestamp();
  auto vec = [](const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  doc["results"] = nlohmann::ordered_json::array();
  for (const auto& m : methods(c)) {
    const StatisticEvaluator eval(data, model, m);
    const CriticalLevel level = levels(m, eval.dimension());
    const ConfidenceSet cs = confidence_set(eval, level);
    nlohmann::ordered_json r;
    r["statistic"] = to_string(m.statistic);
    r["b"] = m.blockwise() ? nlohmann::ordered_json(m.b) : nlohmann::ordered_json(nullptr);
    r["cstar"] = m.penalized() ? nlohmann::ordered_json(m.cstar) : nlohmann::ordered_json(nullptr);
    r["alpha"] = m.alpha;
    r["critical"] = level.value ? nlohmann::ordered_json(*level.value) : nlohmann::ordered_json(nullptr);
    r["estimate"] = vec(eval.estimate());
    r["scale"] = vec(eval.scale());
    r["degenerate"] = cs.degenerate;
    if (cs.dimension == 1) {
      r["intervals"] = nlohmann::ordered_json::array();
      for (const auto& iv : cs.intervals)
        r["intervals"].push_back({{"lower", iv.lower},
                                  {"upper", iv.upper},
                                  {"lower_closed", iv.lower_closed},
                                  {"upper_closed", iv.upper_closed},
                                  {"lower_truncated", iv.lower_truncated},
                                  {"upper_truncated", iv.upper_truncated}});
      r["hull_width"] = cs.hull_width();
    } else {
      r["members"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < cs.grid.size(); ++i)
        if (cs.member[i]) r["members"].push_back(vec(cs.grid[i]));
      r["grid_points"] = cs.grid.size();
    }
    r["warnings"] = cs.warnings;
    doc["results"].push_back(r);
  }
  os << doc.dump(2) << "\n";
}

inline void run_tune(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  const Matrix data = load_input(c, o);
  const MomentModel model = model_for(c.model, data.cols());
  LevelSource levels(c, o);
  MethodSpec family;
  family.statistic = parse_statistic(c.statistic.front());
  family.b = c.b.front();
  family.alpha = c.alpha.front();
  const int dim = moment_dimension(model);
  const TuneResult t = tune_cstar(
      data, model, family, sz(c.block), c.cstar, sz(c.resamples), c.seed,
      [&](const MethodSpec& m) { return levels(m, dim); }, o.threads);
  provenance(os, c, o);
  os << "# chosen_cstar=" << cell(t.chosen) << "\n";
  os << "cstar,coverage,selected,warning\n";
  for (const auto& row : t.table)
    os << cell(row.cstar) << ',' << cell(row.coverage) << ',' << (row.cstar == t.chosen ? 1 : 0) << ','
       << (row.degenerate ? "degenerate" : "") << '\n';
}

inline void run_bootstrap_eval(const RunConfig& c, const RunOptions& o, std::ostream& os) {
  const Matrix data = load_input(c, o);
  const MomentModel model = model_for(c.model, data.cols());
  LevelSource levels(c, o);
  const int dim = moment_dimension(model);
  std::ostringstream body;
  body << "statistic,b,cstar,alpha,block,critical,coverage,se,hull_violation,failures,warning\n";
  for (const auto& m : methods(c)) {
    const CriticalLevel level = levels(m, dim);
    const BootstrapResult r =
        bootstrap_coverage(data, model, m, sz(c.block), sz(c.resamples), c.seed, level, o.threads);
    std::string warning;
    if (r.degenerate) warning = "degenerate";
    else if (r.failures) warning = "solver-failures";
    body << method_cells(m) << ',' << c.block << ',' << level_cell(level) << ',' << cell(r.coverage) << ','
         << cell(r.standard_error) << ',' << cell(r.hull_violation_rate) << ',' << r.failures << ','
         << warning << '\n';
  }
  provenance(os, c, o);
  os << body.str();
}

inline std::string default_output(const std::string& command) {
  return command == "ci" ? "ci.json" : command + ".csv";
}

}  // namespace detail

/// Runs one configuration. Exit codes: 0 success, 1 configuration or input
/// error, 2 numerical failure.
inline int run(const RunConfig& config, const RunOptions& options) {
  std::ostream& log = *options.log;
  try {
    std::ostringstream out;
    const std::string& cmd = config.command;
    if (cmd == "critvals") detail::run_critvals(config, options, out);
    else if (cmd == "bounds") detail::run_bounds(config, options, out);
    else if (cmd == "coverage") detail::run_coverage(config, options, out);
    else if (cmd == "ci") detail::run_ci(config, options, out);
    else if (cmd == "tune") detail::run_tune(config, options, out);
    else if (cmd == "bootstrap-eval") detail::run_bootstrap_eval(config, options, out);
    else throw ConfigError("config:1: command: unknown subcommand '" + cmd + "'");

    std::filesystem::create_directories(options.out_dir);
    const auto path = std::filesystem::path(options.out_dir) /
                      (config.output.empty() ? detail::default_output(cmd) : config.output);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InvalidArgument(path.string() + ": cannot write output");
    file << out.str();
    log << "wrote " << path.string() << "\n";
    return 0;
  } catch (const InvalidArgument& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    log << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace tsel::cli
