#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "tsel/blocks.hpp"
#include "tsel/dgp.hpp"
#include "tsel/elcore.hpp"
#include "tsel/parallel.hpp"
#include "tsel/penalized.hpp"
#include "tsel/pivotal.hpp"
#include "tsel/rng.hpp"
#include "tsel/selfnorm.hpp"

namespace tsel {

enum class Statistic { BEL, PBEL, EBEL, PEBEL, SmallBBEL };

inline std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::BEL: return "bel";
    case Statistic::PBEL: return "pbel";
    case Statistic::EBEL: return "ebel";
    case Statistic::PEBEL: return "pebel";
    case Statistic::SmallBBEL: return "smallb-bel";
  }
  return "?";
}

inline Statistic parse_statistic(const std::string& name) {
  if (name == "bel") return Statistic::BEL;
  if (name == "pbel") return Statistic::PBEL;
  if (name == "ebel") return Statistic::EBEL;
  if (name == "pebel") return Statistic::PEBEL;
  if (name == "smallb-bel" || name == "smallb") return Statistic::SmallBBEL;
  throw InvalidArgument("unknown statistic '" + name + "'");
}

struct MethodSpec {
  Statistic statistic = Statistic::BEL;
  double b = 0.1;       // BEL, PBEL, SmallBBEL
  double cstar = 0.1;   // PBEL, PEBEL
  WeightFunction omega = unit_weight();
  KernelSpec kernel = bartlett_kernel();
  double alpha = 0.05;

  bool blockwise() const {
    return statistic == Statistic::BEL || statistic == Statistic::PBEL ||
           statistic == Statistic::SmallBBEL;
  }
  bool penalized() const { return statistic == Statistic::PBEL || statistic == Statistic::PEBEL; }

  void validate() const {
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    if (blockwise()) detail::require(b > 0.0 && b < 1.0, "block fraction must lie in (0, 1)");
    if (penalized()) detail::require(std::isfinite(cstar) && cstar > 0.0, "cstar must be positive");
  }

  Scheme scheme() const {
    if (blockwise()) return Overlapping{b};
    return Expansive{omega};
  }

  /// Pivotal limit behind the fixed-b critical value; empty for SmallBBEL.
  std::optional<LimitKind> limit_kind() const {
    switch (statistic) {
      case Statistic::BEL: return LimitKind::UEl;
      case Statistic::PBEL: return LimitKind::UPbel;
      case Statistic::EBEL: return LimitKind::UEbel;
      case Statistic::PEBEL: return LimitKind::UPebel;
      case Statistic::SmallBBEL: return std::nullopt;
    }
    return std::nullopt;
  }
};

/// Critical value for "accept theta iff comparable(statistic) <= value".
/// An empty value means the limit has no finite quantile at this level.
struct CriticalLevel {
  std::optional<double> value;
  std::string source;

  bool degenerate() const { return !value.has_value(); }
};

inline CriticalLevel chi_square_level(int k, double alpha) {
  detail::require(k >= 1, "dimension must be positive");
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  boost::math::chi_squared dist(static_cast<double>(k));
  return {boost::math::quantile(dist, 1.0 - alpha), "chi-square"};
}

/// Looks the method up in a simulated table; SmallBBEL ignores the table.
inline CriticalLevel lookup_level(const MethodSpec& method, int k, const CriticalValueTable& table) {
  method.validate();
  const auto kind = method.limit_kind();
  if (!kind) return chi_square_level(k, method.alpha);
  const auto e = table.find(*kind, k, method.b, method.cstar, method.alpha);
  if (!e)
    throw InvalidArgument("critical-value table has no entry for " + to_string(method.statistic) +
                          " k=" + std::to_string(k));
  return {e->quantile, "table"};
}

/// Simulates the fixed-b critical value for this method directly.
inline CriticalLevel simulate_level(const MethodSpec& method, int k, int grid, std::size_t replications,
                                    std::uint64_t seed, unsigned threads = 0) {
  method.validate();
  const auto kind = method.limit_kind();
  if (!kind) return chi_square_level(k, method.alpha);
  LimitSpec spec;
  spec.kind = *kind;
  spec.k = k;
  spec.b = method.b;
  spec.cstar = method.cstar;
  spec.omega = method.omega;
  spec.kernel = method.kernel;
  spec.grid = grid;
  spec.replications = replications;
  spec.seed = seed;
  const auto cv = critical_values(draw_limit(spec, threads), {method.alpha});
  return {cv.front().quantile, "simulated"};
}

/// The quantity compared with the critical value: BEL is divided by 1 - b.
inline double comparable(const MethodSpec& method, double statistic) {
  if (method.statistic == Statistic::BEL) return statistic / (1.0 - method.b);
  return statistic;
}

inline bool accepts(const MethodSpec& method, double statistic, const CriticalLevel& level) {
  if (level.degenerate()) return true;
  return std::isfinite(statistic) && comparable(method, statistic) <= *level.value;
}

/// Precomputes everything that does not depend on theta: the preliminary
/// estimate, the optional GMM projection (W = identity) and the normalizer.
class StatisticEvaluator {
 public:
  StatisticEvaluator(Matrix data, MomentModel model, MethodSpec method,
                     const std::optional<Vector>& start = std::nullopt)
      : data_(std::move(data)), model_(std::move(model)), method_(std::move(method)) {
    method_.validate();
    model_.validate();
    detail::require(data_.rows() >= 2, "need at least two observations");
    if (method_.blockwise())
      detail::require(detail::floor_count(method_.b * static_cast<double>(data_.rows())) >= 1,
                      "sample too short for this block fraction");
    theta_hat_ = preliminary_estimate(model_, data_, start);
    const Matrix raw = evaluate(model_, data_, theta_hat_);
    Matrix residuals = raw;
    if (model_.k > model_.p) {
      const Matrix g = jacobian_mean(model_, data_, theta_hat_);
      const GmmTransform t = gmm_transform(raw, g, Matrix::Identity(model_.k, model_.k),
                                           smooth(raw, method_.scheme()));
      projection_ = t.projection;
      residuals = t.residuals;
    }
    if (method_.penalized()) normalizer_ = std::make_shared<Normalizer>(psi_matrix(residuals, method_.kernel));
    scale_ = Vector::Ones(model_.p);
    if (model_.jacobian) {
      const Matrix g = jacobian_mean(model_, data_, theta_hat_);
      Eigen::ColPivHouseholderQR<Matrix> qr(g);
      if (qr.rank() == model_.p) {
        const Matrix pinv = qr.solve(Matrix::Identity(model_.k, model_.k));
        const Matrix psi = psi_matrix(raw * pinv.transpose(), method_.kernel);
        for (int i = 0; i < model_.p; ++i) {
          const double s = std::sqrt(std::max(0.0, psi(i, i)) / static_cast<double>(data_.rows()));
          if (s > 0.0 && std::isfinite(s)) scale_(i) = s;
        }
      }
    }
  }

  /// Smoothed (and projected) moment rows at theta.
  SmoothedMoments smoothed(const Vector& theta) const {
    SmoothedMoments s = smooth(evaluate(model_, data_, theta), method_.scheme());
    if (projection_) s.values = s.values * projection_->transpose();
    return s;
  }

  /// Unscaled statistic at theta; +inf when the hull constraint binds.
  double operator()(const Vector& theta) const {
    const SmoothedMoments s = smoothed(theta);
    switch (method_.statistic) {
      case Statistic::BEL:
      case Statistic::EBEL:
      case Statistic::SmallBBEL:
        return el_ratio(s);
      case Statistic::PBEL: {
        const auto [a, c] = detail::pbel_coefficients(s, method_.cstar);
        return penalized_saddle(s.values, uniform_weights(s.rows()), a, c, normalizer_->inverse()).value;
      }
      case Statistic::PEBEL: {
        const auto [a, c] = detail::pebel_coefficients(s, method_.cstar);
        return penalized_saddle(s.values, uniform_weights(s.rows()), a, c, normalizer_->inverse()).value;
      }
    }
    return kInfinity;
  }

  HullStatus hull(const Vector& theta) const { return hull_contains_origin(smoothed(theta).values); }

  const Vector& estimate() const { return theta_hat_; }
  const Vector& scale() const { return scale_; }
  const MethodSpec& method() const { return method_; }
  const MomentModel& model() const { return model_; }
  /// Dimension of the (projected) moments, i.e. the k of the pivotal limit.
  int dimension() const { return projection_ ? model_.p : model_.k; }

 private:
  Matrix data_;
  MomentModel model_;
  MethodSpec method_;
  Vector theta_hat_;
  std::optional<Matrix> projection_;
  std::shared_ptr<const Normalizer> normalizer_;
  Vector scale_;
};

inline double statistic_at(const Matrix& data, const MomentModel& model, const MethodSpec& method,
                           const Vector& theta) {
  return StatisticEvaluator(data, model, method)(theta);
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_closed = true;
  bool upper_closed = true;
  bool lower_truncated = false;  // set continues past the scanned range
  bool upper_truncated = false;

  double width() const { return upper - lower; }
};

struct TracePoint {
  Vector theta;
  double statistic = 0.0;
};

struct ConfidenceSet {
  int dimension = 1;
  std::vector<Interval> intervals;  // p = 1 only
  std::vector<Vector> grid;         // scanned points
  std::vector<char> member;         // membership on `grid`
  std::vector<TracePoint> trace;    // every evaluation, scan and bisection
  bool degenerate = false;
  CriticalLevel level;
  std::vector<std::string> warnings;
  std::function<bool(const Vector&)> contains;

  bool disconnected() const { return intervals.size() > 1; }

  /// Width of the convex hull of the set (p = 1).
  double hull_width() const {
    if (intervals.empty()) return 0.0;
    return intervals.back().upper - intervals.front().lower;
  }
};

namespace detail {

inline constexpr int kScanPoints = 401;
inline constexpr double kScanHalfWidth = 10.0;  // in self-normalized scales

// Shrinks [in, out] (in accepted, out rejected) to width <= tol; returns the
// accepted end.
inline double bisect_boundary(double in, double out, double tol,
                              const std::function<bool(double)>& accept) {
  while (std::abs(out - in) > tol) {
    const double mid = 0.5 * (in + out);
    if (accept(mid)) in = mid;
    else out = mid;
  }
  return in;
}

}  // namespace detail

/// Inverts the test over a grid around the point estimate. p = 1 yields a
/// union of intervals with bisection-refined ends; p = 2, 3 yield a grid region.
inline ConfidenceSet confidence_set(const StatisticEvaluator& eval, const CriticalLevel& level) {
  const int p = eval.model().p;
  detail::require(p >= 1 && p <= 3, "confidence sets are limited to p <= 3");
  auto shared = std::make_shared<StatisticEvaluator>(eval);
  const MethodSpec method = eval.method();
  ConfidenceSet cs;
  cs.dimension = p;
  cs.level = level;
  cs.degenerate = level.degenerate();
  cs.contains = [shared, method, level](const Vector& theta) {
    return accepts(method, (*shared)(theta), level);
  };
  if (cs.degenerate)
    cs.warnings.push_back("no finite critical value: the confidence set is the whole parameter space");

  auto record = [&](const Vector& theta) {
    const double s = eval(theta);
    cs.trace.push_back({theta, s});
    return accepts(method, s, level);
  };

  const Vector& center = eval.estimate();
  const Vector& scale = eval.scale();
  if (p == 1) {
    const double lo = center(0) - detail::kScanHalfWidth * scale(0);
    const double step = 2.0 * detail::kScanHalfWidth * scale(0) / (detail::kScanPoints - 1);
    for (int j = 0; j < detail::kScanPoints; ++j) {
      Vector th(1);
      th(0) = lo + step * j;
      cs.grid.push_back(th);
      cs.member.push_back(record(th));
    }
    const double tol = 1e-6 * scale(0);
    auto accept1 = [&](double x) { return record(Vector::Constant(1, x)); };
    for (int j = 0; j < detail::kScanPoints; ++j) {
      if (!cs.member[j]) continue;
      Interval iv;
      if (j == 0) {
        iv.lower = cs.grid[0](0);
        iv.lower_truncated = true;
      } else {
        iv.lower = detail::bisect_boundary(cs.grid[j](0), cs.grid[j - 1](0), tol, accept1);
      }
      int e = j;
      while (e + 1 < detail::kScanPoints && cs.member[e + 1]) ++e;
      if (e == detail::kScanPoints - 1) {
        iv.upper = cs.grid[e](0);
        iv.upper_truncated = true;
      } else {
        iv.upper = detail::bisect_boundary(cs.grid[e](0), cs.grid[e + 1](0), tol, accept1);
      }
      cs.intervals.push_back(iv);
      j = e;
    }
    if (cs.disconnected())
      cs.warnings.push_back("confidence set is a union of " + std::to_string(cs.intervals.size()) +
                            " disjoint intervals");
    if (!cs.intervals.empty() && !cs.degenerate &&
        (cs.intervals.front().lower_truncated || cs.intervals.back().upper_truncated))
      cs.warnings.push_back("confidence set reaches the edge of the scanned range");
    return cs;
  }

  const int per_dim = p == 2 ? 41 : 15;
  std::vector<int> idx(p, 0);
  for (;;) {
    Vector th(p);
    for (int i = 0; i < p; ++i)
      th(i) = center(i) + scale(i) * detail::kScanHalfWidth * (2.0 * idx[i] / (per_dim - 1) - 1.0);
    cs.grid.push_back(th);
    cs.member.push_back(record(th));
    int d = 0;
    while (d < p && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == p) break;
  }
  return cs;
}

inline ConfidenceSet confidence_set(const Matrix& data, const MomentModel& model,
                                    const MethodSpec& method, const CriticalLevel& level) {
  return confidence_set(StatisticEvaluator(data, model, method), level);
}

inline ConfidenceSet confidence_set(const Matrix& data, const MomentModel& model,
                                    const MethodSpec& method, const CriticalValueTable& table) {
  StatisticEvaluator eval(data, model, method);
  return confidence_set(eval, lookup_level(method, eval.dimension(), table));
}

struct CoverageResult {
  double coverage = 0.0;
  double standard_error = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;         // replications whose solver raised an error
  double hull_rate = 0.0;           // fraction with the origin interior to the hull at theta0
  std::optional<double> mean_width; // p = 1 when widths were requested
  std::vector<char> covered;
  std::vector<char> hull_interior;
  bool degenerate = false;
};

/// Monte Carlo coverage of the region at theta0, evaluated directly at theta0.
inline CoverageResult coverage_experiment(const ProcessSpec& spec, std::size_t n,
                                          const MomentModel& model, const MethodSpec& method,
                                          const Vector& theta0, std::size_t replications,
                                          std::uint64_t seed, const CriticalLevel& level,
                                          unsigned threads = 0, bool widths = false) {
  spec.validate();
  method.validate();
  detail::require(replications >= 1, "need at least one replication");
  detail::require(!widths || model.p == 1, "interval widths need a scalar parameter");
  CoverageResult out;
  out.replications = replications;
  out.degenerate = level.degenerate();
  out.covered.assign(replications, 0);
  out.hull_interior.assign(replications, 0);
  std::vector<char> failed(replications, 0);
  std::vector<double> width(replications, 0.0);
  parallel_for(replications, threads, [&](std::size_t rep) {
    const Matrix data = generate(spec, n, rng::substream(seed, rep));
    try {
      const StatisticEvaluator eval(data, model, method);
      out.hull_interior[rep] = eval.hull(theta0).interior();
      out.covered[rep] = accepts(method, eval(theta0), level);
      if (widths) width[rep] = confidence_set(eval, level).hull_width();
    } catch (const Error&) {
      failed[rep] = 1;
      out.covered[rep] = 0;
    }
  });
  std::size_t hits = 0, inside = 0;
  double wsum = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    hits += out.covered[r];
    inside += out.hull_interior[r];
    out.failures += failed[r];
    wsum += width[r];
  }
  const double dr = static_cast<double>(replications);
  out.coverage = hits / dr;
  out.standard_error = std::sqrt(out.coverage * (1.0 - out.coverage) / dr);
  out.hull_rate = inside / dr;
  if (widths) out.mean_width = wsum / dr;
  return out;
}

/// Non-overlapping block bootstrap with explicit block draws: output row
/// (j - 1) b_n + i is input row M_j b_n + i.
inline Matrix block_bootstrap(const Matrix& data, std::size_t block,
                              const std::vector<std::size_t>& starts) {
  const auto n = static_cast<std::size_t>(data.rows());
  detail::require(block >= 1 && n % block == 0, "block length must divide the sample size");
  const std::size_t blocks = n / block;
  detail::require(starts.size() == blocks, "need one draw per block");
  Matrix out(data.rows(), data.cols());
  for (std::size_t j = 0; j < blocks; ++j) {
    detail::require(starts[j] < blocks, "block draw out of range");
    out.middleRows(static_cast<Eigen::Index>(j * block), static_cast<Eigen::Index>(block)) =
        data.middleRows(static_cast<Eigen::Index>(starts[j] * block), static_cast<Eigen::Index>(block));
  }
  return out;
}

inline Matrix block_bootstrap(const Matrix& data, std::size_t block, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.rows());
  detail::require(block >= 1 && n % block == 0, "block length must divide the sample size");
  rng::Stream stream(seed);
  std::vector<std::size_t> starts(n / block);
  for (auto& s : starts) s = stream.index(n / block);
  return block_bootstrap(data, block, starts);
}

struct BootstrapResult {
  double coverage = 0.0;
  double standard_error = 0.0;
  double hull_violation_rate = 0.0;  // resamples whose hull misses the origin at theta_hat
  std::size_t resamples = 0;
  std::size_t failures = 0;
  bool degenerate = false;
};

/// Coverage of the full-sample estimate by regions built on B block-bootstrap
/// resamples. Resample r uses substream(seed, r), so every method sees the
/// same resamples under one seed.
inline BootstrapResult bootstrap_coverage(const Matrix& data, const MomentModel& model,
                                          const MethodSpec& method, std::size_t block,
                                          std::size_t resamples, std::uint64_t seed,
                                          const CriticalLevel& level, unsigned threads = 0) {
  method.validate();
  detail::require(resamples >= 1, "need at least one bootstrap resample");
  const Vector theta_hat = preliminary_estimate(model, data);
  std::vector<char> covered(resamples, 0), violated(resamples, 0), failed(resamples, 0);
  parallel_for(resamples, threads, [&](std::size_t r) {
    const Matrix star = block_bootstrap(data, block, rng::substream(seed, r));
    try {
      const StatisticEvaluator eval(star, model, method);
      violated[r] = !eval.hull(theta_hat).interior();
      covered[r] = accepts(method, level.degenerate() ? 0.0 : eval(theta_hat), level);
    } catch (const Error&) {
      failed[r] = 1;
    }
  });
  BootstrapResult out;
  out.resamples = resamples;
  out.degenerate = level.degenerate();
  std::size_t hits = 0, bad = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    hits += covered[r];
    bad += violated[r];
    out.failures += failed[r];
  }
  const double dr = static_cast<double>(resamples);
  out.coverage = hits / dr;
  out.standard_error = std::sqrt(out.coverage * (1.0 - out.coverage) / dr);
  out.hull_violation_rate = bad / dr;
  return out;
}

struct TuneRow {
  double cstar = 0.0;
  double coverage = 0.0;
  bool degenerate = false;
};

struct TuneResult {
  double chosen = 0.0;
  std::vector<TuneRow> table;
};

/// Picks the c* whose bootstrap coverage of theta_hat is closest to 1 - alpha;
/// ties go to the smaller c*. All candidates share the same resamples.
inline TuneResult tune_cstar(const Matrix& data, const MomentModel& model, const MethodSpec& family,
                             std::size_t block, const std::vector<double>& grid,
                             std::size_t resamples, std::uint64_t seed,
                             const std::function<CriticalLevel(const MethodSpec&)>& level_for,
                             unsigned threads = 0) {
  detail::require(family.penalized(), "c* tuning needs a penalized method");
  detail::require(!grid.empty(), "c* grid must be nonempty");
  detail::require(resamples >= 1, "need at least one bootstrap resample");
  detail::require(static_cast<std::size_t>(data.rows()) % block == 0,
                  "block length must divide the sample size");
  std::vector<MethodSpec> methods;
  std::vector<CriticalLevel> levels;
  for (double c : grid) {
    MethodSpec m = family;
    m.cstar = c;
    m.validate();
    levels.push_back(level_for(m));
    methods.push_back(std::move(m));
  }
  const Vector theta_hat = preliminary_estimate(model, data);
  const std::size_t g = grid.size();
  std::vector<char> covered(resamples * g, 0);
  parallel_for(resamples, threads, [&](std::size_t r) {
    const Matrix star = block_bootstrap(data, block, rng::substream(seed, r));
    for (std::size_t i = 0; i < g; ++i) {
      if (levels[i].degenerate()) {
        covered[r * g + i] = 1;
        continue;
      }
      try {
        const StatisticEvaluator eval(star, model, methods[i]);
        covered[r * g + i] = accepts(methods[i], eval(theta_hat), levels[i]);
      } catch (const Error&) {
        covered[r * g + i] = 0;
      }
    }
  });
  TuneResult out;
  const double target = 1.0 - family.alpha;
  double best = kInfinity;
  for (std::size_t i = 0; i < g; ++i) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < resamples; ++r) hits += covered[r * g + i];
    TuneRow row{grid[i], static_cast<double>(hits) / static_cast<double>(resamples),
                levels[i].degenerate()};
    out.table.push_back(row);
    const double gap = std::abs(row.coverage - target);
    if (gap < best - 1e-12 || (std::abs(gap - best) <= 1e-12 && row.cstar < out.chosen)) {
      best = gap;
      out.chosen = row.cstar;
    }
  }
  return out;
}

}  // namespace tsel
