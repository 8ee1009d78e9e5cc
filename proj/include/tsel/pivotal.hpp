#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tsel/blocks.hpp"
#include "tsel/dgp.hpp"
#include "tsel/elcore.hpp"
#include "tsel/estimate.hpp"
#include "tsel/parallel.hpp"
#include "tsel/penalized.hpp"
#include "tsel/rng.hpp"
#include "tsel/selfnorm.hpp"

namespace tsel {

enum class LimitKind { UEl, UPbel, UEbel, UPebel };

inline std::string to_string(LimitKind kind) {
  switch (kind) {
    case LimitKind::UEl: return "el";
    case LimitKind::UPbel: return "pbel";
    case LimitKind::UEbel: return "ebel";
    case LimitKind::UPebel: return "pebel";
  }
  return "?";
}

inline LimitKind parse_limit_kind(const std::string& name) {
  if (name == "el" || name == "bel") return LimitKind::UEl;
  if (name == "pbel") return LimitKind::UPbel;
  if (name == "ebel") return LimitKind::UEbel;
  if (name == "pebel") return LimitKind::UPebel;
  throw InvalidArgument("unknown limit kind '" + name + "'");
}

inline bool blockwise(LimitKind kind) { return kind == LimitKind::UEl || kind == LimitKind::UPbel; }
inline bool penalized_kind(LimitKind kind) {
  return kind == LimitKind::UPbel || kind == LimitKind::UPebel;
}

struct LimitSpec {
  LimitKind kind = LimitKind::UEl;
  int k = 1;
  double b = 0.1;       // blockwise kinds
  double cstar = 0.0;   // penalized kinds
  WeightFunction omega = unit_weight();  // expansive kinds
  KernelSpec kernel = bartlett_kernel();
  int grid = 2000;      // M
  std::size_t replications = 20000;  // R
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(k >= 1, "limit dimension must be positive");
    detail::require(grid >= 100, "grid size must be at least 100");
    detail::require(replications >= 1, "need at least one replication");
    if (blockwise(kind)) {
      detail::require(b > 0.0 && b < 1.0, "block fraction must lie in (0, 1)");
      detail::require(detail::floor_count(b * grid) >= 1 &&
                          detail::floor_count((1.0 - b) * grid) >= 1,
                      "grid too coarse for this block fraction");
    }
    if (penalized_kind(kind)) detail::require(cstar > 0.0, "penalized limits need cstar > 0");
  }
};

struct PivotalDraws {
  std::vector<double> values;  // +inf marks an unbounded realization
  LimitSpec spec;
  std::size_t redraws = 0;     // replications redrawn after NonConverged
  std::size_t refined = 0;     // expansive replications that needed grid refinement near 0

  std::size_t infinite_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_infinite));
  }
};

namespace detail {

// Increment rows W((j + m)/M) - W(j/M), j = 0..M' - 1.
inline Matrix increment_rows(const BrownianPath& path, double b) {
  const int big_m = path.grid();
  const auto m = static_cast<Eigen::Index>(floor_count(b * big_m));
  const auto rows = static_cast<Eigen::Index>(floor_count((1.0 - b) * big_m));
  return path.values.middleRows(m, rows) - path.values.topRows(rows);
}

// Phi realized from the same path: the discretized double integral of Q
// against Brownian-bridge increments (eps_j - mean eps)/sqrt(M).
inline Matrix phi_matrix(const BrownianPath& path, const KernelSpec& kernel) {
  const Matrix centered = path.increments.rowwise() - path.increments.colwise().mean();
  return psi_matrix(centered, kernel);
}

struct ExpansiveRows {
  Matrix rows;
  Vector weights;
  bool refined = false;
};

// omega(r) W(r) at r = j/M, j = 1..M, with right-endpoint weights 1/M. When
// the origin is not interior to their hull (the continuous path crosses zero
// immediately, a coarse grid may miss it) the first cell is bisected with
// exact Brownian-bridge points until it is.
inline ExpansiveRows expansive_rows(const BrownianPath& path, const WeightFunction& omega,
                                    std::uint64_t refine_seed) {
  const int big_m = path.grid();
  const double h0 = 1.0 / big_m;
  ExpansiveRows out;
  out.rows.resize(big_m, path.dimension());
  for (int j = 1; j <= big_m; ++j) out.rows.row(j - 1) = omega(j * h0) * path.values.row(j);
  out.weights = Vector::Constant(big_m, h0);
  if (hull_contains_origin(out.rows).interior()) return out;

  out.refined = true;
  rng::Stream stream(refine_seed);
  std::vector<Eigen::RowVectorXd> extra;  // W(h0/2), W(h0/4), ...
  std::vector<double> times;
  Eigen::RowVectorXd right = path.values.row(1);
  double h = h0;
  for (int level = 0; level < 200; ++level) {
    Eigen::RowVectorXd mid(path.dimension());
    for (int c = 0; c < path.dimension(); ++c)
      mid(c) = 0.5 * right(c) + std::sqrt(h / 4.0) * stream.normal();
    h *= 0.5;
    extra.push_back(mid);
    times.push_back(h);
    right = mid;

    // Rows in increasing time: t_e < ... < t_1 = h0/2 < h0 < 2 h0 < ...
    // Right-endpoint cells: (0, t_e], (t_{i+1}, t_i] of length t_i / 2, and
    // (h0/2, h0] for the first grid point.
    const auto e = static_cast<Eigen::Index>(extra.size());
    Matrix rows(big_m + e, path.dimension());
    Vector w(big_m + e);
    for (Eigen::Index i = 0; i < e; ++i) {
      const auto src = static_cast<std::size_t>(e - 1 - i);
      rows.row(i) = omega(times[src]) * extra[src];
      w(i) = i == 0 ? times[src] : times[src] / 2.0;
    }
    rows.bottomRows(big_m) = out.rows;
    w.tail(big_m) = out.weights;
    w(e) = h0 / 2.0;
    if (hull_contains_origin(rows).interior()) {
      out.rows = std::move(rows);
      out.weights = std::move(w);
      return out;
    }
  }
  throw Error("expansive rows did not reach an interior hull after refinement");
}

}  // namespace detail

/// One realization of the limit functional on a given path. `refine_seed`
/// drives the bridge refinement of expansive kinds.
inline double evaluate_limit(const LimitSpec& spec, const BrownianPath& path,
                             std::uint64_t refine_seed = 0, bool* refined = nullptr) {
  const int big_m = path.grid();
  switch (spec.kind) {
    case LimitKind::UEl: {
      const Matrix rows = detail::increment_rows(path, spec.b);
      const ELSolution s = solve_dual(rows, uniform_weights(rows.rows()));
      if (!s.finite()) return kInfinity;
      return 2.0 / spec.b * (static_cast<double>(rows.rows()) / big_m) * s.value;
    }
    case LimitKind::UPbel: {
      const Matrix rows = detail::increment_rows(path, spec.b) / spec.b;
      const Normalizer phi(detail::phi_matrix(path, spec.kernel));
      const double a = 2.0 / spec.b * (static_cast<double>(rows.rows()) / big_m);
      return penalized_saddle(rows, uniform_weights(rows.rows()), a, spec.cstar / spec.b,
                              phi.inverse())
          .value;
    }
    case LimitKind::UEbel: {
      const auto ex = detail::expansive_rows(path, spec.omega, refine_seed);
      if (refined) *refined = ex.refined;
      const ELSolution s = solve_dual(ex.rows, ex.weights);
      return s.finite() ? s.value : kInfinity;
    }
    case LimitKind::UPebel: {
      Matrix rows(big_m, path.dimension());
      for (int j = 1; j <= big_m; ++j)
        rows.row(j - 1) = spec.omega(static_cast<double>(j) / big_m) * path.values.row(j);
      const Normalizer phi(detail::phi_matrix(path, spec.kernel));
      return penalized_saddle(rows, uniform_weights(big_m), 1.0, spec.cstar, phi.inverse()).value;
    }
  }
  return kInfinity;
}

/// Path of replication `rep`, attempt `attempt` under `seed`.
inline BrownianPath limit_path(const LimitSpec& spec, std::size_t rep, std::size_t attempt) {
  const std::uint64_t s = attempt == 0 ? rng::substream(spec.seed, rep)
                                       : rng::substream(spec.seed, rep, attempt);
  return brownian(spec.k, spec.grid, s);
}

/// Simulates R realizations of the limit. Replications whose solver hits its
/// iteration cap are redrawn from a fresh substream and counted.
inline PivotalDraws draw_limit(const LimitSpec& spec, unsigned threads = 0) {
  spec.validate();
  PivotalDraws out;
  out.spec = spec;
  out.values.assign(spec.replications, 0.0);
  std::vector<unsigned> redraws(spec.replications, 0);
  std::vector<char> refined(spec.replications, 0);
  parallel_for(spec.replications, threads, [&](std::size_t rep) {
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        const BrownianPath path = limit_path(spec, rep, attempt);
        bool ref = false;
        out.values[rep] =
            evaluate_limit(spec, path, rng::substream(spec.seed ^ 0x5bd1e995ULL, rep, attempt), &ref);
        refined[rep] = ref;
        return;
      } catch (const NonConverged&) {
        if (attempt >= 20) throw;
        ++redraws[rep];
      }
    }
  });
  for (auto r : redraws) out.redraws += r;
  for (auto r : refined) out.refined += static_cast<std::size_t>(r);
  return out;
}

/// P(U_el,k(b) = +inf), estimated by the hull check on the discretized
/// increment rows of the same paths draw_limit would use.
inline BoundEstimate beta_estimate(int k, double b, int grid, std::size_t replications,
                                   std::uint64_t seed, unsigned threads = 0) {
  LimitSpec spec;
  spec.kind = LimitKind::UEl;
  spec.k = k;
  spec.b = b;
  spec.grid = grid;
  spec.replications = replications;
  spec.seed = seed;
  spec.validate();
  std::vector<char> violated(replications, 0);
  parallel_for(replications, threads, [&](std::size_t rep) {
    const BrownianPath path = limit_path(spec, rep, 0);
    violated[rep] = !hull_contains_origin(detail::increment_rows(path, b)).interior();
  });
  const auto hits = static_cast<std::size_t>(std::count(violated.begin(), violated.end(), 1));
  std::ostringstream ctx;
  ctx << "k=" << k << " b=" << b << " M=" << grid;
  return BoundEstimate::from_count(hits, replications, ctx.str(), "path-simulation");
}

struct CriticalValue {
  LimitKind kind = LimitKind::UEl;
  int k = 1;
  double b = 0.0;      // NaN for expansive kinds
  double cstar = 0.0;  // 0 for unpenalized kinds
  double alpha = 0.05;
  std::optional<double> quantile;  // empty: no finite quantile

  bool finite() const { return quantile.has_value(); }
};

/// Whether the tabulated quantile refers to U / (1 - b). Only the BEL region
/// compares elr / (1 - b); penalized statistics are compared unscaled.
inline bool quantile_scaled_by_block(LimitKind kind) { return kind == LimitKind::UEl; }

/// Empirical quantile x_(floor(R(1 - alpha)) + 1) of all draws with +inf
/// sorted last; no finite quantile when the finite fraction is <= 1 - alpha.
inline std::optional<double> empirical_quantile(std::vector<double> values, double alpha) {
  detail::require(!values.empty(), "no draws");
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double r = static_cast<double>(values.size());
  const auto idx = static_cast<std::size_t>(std::floor(r * (1.0 - alpha) + 1e-9));
  if (idx >= values.size() || !std::isfinite(values[idx])) return std::nullopt;
  return values[idx];
}

inline std::vector<CriticalValue> critical_values(const PivotalDraws& draws,
                                                  const std::vector<double>& alphas) {
  detail::require(!draws.values.empty(), "no draws");
  std::vector<double> v = draws.values;
  const LimitSpec& s = draws.spec;
  if (quantile_scaled_by_block(s.kind))
    for (double& x : v) x /= (1.0 - s.b);
  std::vector<CriticalValue> out;
  for (double a : alphas) {
    CriticalValue c;
    c.kind = s.kind;
    c.k = s.k;
    c.b = blockwise(s.kind) ? s.b : std::nan("");
    c.cstar = penalized_kind(s.kind) ? s.cstar : 0.0;
    c.alpha = a;
    c.quantile = empirical_quantile(v, a);
    out.push_back(c);
  }
  return out;
}

/// Critical values keyed by (kind, k, b, cstar, alpha) with simulation metadata.
struct CriticalValueTable {
  static constexpr const char* kFormat = "tsel-critical-values/1";

  std::vector<CriticalValue> entries;
  int grid = 0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  std::optional<CriticalValue> find(LimitKind kind, int k, double b, double cstar,
                                    double alpha) const {
    auto close = [](double x, double y) {
      return (std::isnan(x) && std::isnan(y)) || std::abs(x - y) <= 1e-12 * (1 + std::abs(y));
    };
    for (const auto& e : entries) {
      if (e.kind != kind || e.k != k || !close(e.alpha, alpha)) continue;
      if (blockwise(kind) && !close(e.b, b)) continue;
      if (penalized_kind(kind) && !close(e.cstar, cstar)) continue;
      return e;
    }
    return std::nullopt;
  }

  void write_csv(std::ostream& os) const {
    os << "# format=" << kFormat << "\n";
    os << "kind,k,b,cstar,alpha,quantile,M,R,seed\n";
    os << std::setprecision(10);
    for (const auto& e : entries) {
      os << to_string(e.kind) << ',' << e.k << ',';
      if (std::isnan(e.b)) os << "NA";
      else os << e.b;
      os << ',' << e.cstar << ',' << e.alpha << ',';
      if (e.quantile) os << *e.quantile;
      else os << "INF";
      os << ',' << grid << ',' << replications << ',' << seed << '\n';
    }
  }

  static CriticalValueTable read_csv(std::istream& is) {
    CriticalValueTable t;
    std::string line;
    bool header = false, versioned = false;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (line.find(std::string("format=") + kFormat) != std::string::npos) versioned = true;
        continue;
      }
      if (!header) {
        if (line != "kind,k,b,cstar,alpha,quantile,M,R,seed")
          throw InvalidArgument("line " + std::to_string(lineno) + ": unexpected critical-value header");
        header = true;
        continue;
      }
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      if (f.size() != 9)
        throw InvalidArgument("line " + std::to_string(lineno) + ": expected 9 fields");
      try {
        CriticalValue e;
        e.kind = parse_limit_kind(f[0]);
        e.k = std::stoi(f[1]);
        e.b = f[2] == "NA" ? std::nan("") : std::stod(f[2]);
        e.cstar = std::stod(f[3]);
        e.alpha = std::stod(f[4]);
        if (f[5] != "INF") e.quantile = std::stod(f[5]);
        t.grid = std::stoi(f[6]);
        t.replications = std::stoull(f[7]);
        t.seed = std::stoull(f[8]);
        t.entries.push_back(e);
      } catch (const InvalidArgument&) {
        throw;
      } catch (const std::exception& ex) {
        throw InvalidArgument("line " + std::to_string(lineno) + ": " + ex.what());
      }
    }
    if (!versioned) throw InvalidArgument("critical-value file lacks the format line");
    return t;
  }
};

}  // namespace tsel
