#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tsel/blocks.hpp"
#include "tsel/dgp.hpp"
#include "tsel/elcore.hpp"
#include "tsel/estimate.hpp"
#include "tsel/parallel.hpp"
#include "tsel/pivotal.hpp"
#include "tsel/rng.hpp"

namespace tsel {

/// phi_beta(u) = phi(u / sqrt(beta)) / sqrt(beta).
inline double gaussian_kernel(double beta, double u) {
  return std::exp(-0.5 * u * u / beta) / std::sqrt(2.0 * std::numbers::pi * beta);
}

/// det[ phi_beta(x_i - y_j) ]_{i,j=1..L}.
inline double q_det(double beta, const Vector& x, const Vector& y) {
  detail::require(beta > 0.0, "kernel variance must be positive");
  detail::require(x.size() == y.size() && x.size() >= 1, "q_det needs equal nonempty vectors");
  detail::require(x.size() <= 12, "q_det is limited to L <= 12");
  const Eigen::Index l = x.size();
  Matrix q(l, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j) q(i, j) = gaussian_kernel(beta, x(i) - y(j));
  return q.partialPivLu().determinant();
}

namespace detail {

// q_det(beta, x, y) / prod_i phi_beta(x_i - y_i), computed with each row
// divided by its diagonal entry so nothing underflows.
inline double q_ratio(double beta, const Vector& x, const Vector& y) {
  const Eigen::Index l = x.size();
  Matrix q(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const double di = (x(i) - y(i)) * (x(i) - y(i));
    for (Eigen::Index j = 0; j < l; ++j) {
      const double dj = (x(i) - y(j)) * (x(i) - y(j));
      q(i, j) = std::exp(-0.5 * (dj - di) / beta);
    }
  }
  return q.partialPivLu().determinant();
}

inline constexpr int kMaxAnalyticOrder = 12;

}  // namespace detail

/// p = P(D_1(r; b) >= 0 for all r in (0, 1 - b]) by importance sampling of
/// the ordered-region determinant integral.
///
/// Integer L = 1/b: points x_{i+1} = x_i + |Z_i| (half-normal proposal); the
/// weight is q_{1,L}(x_{1:L}, x_{2:L+1}) / (2^L prod phi(x_{i+1} - x_i)).
/// Otherwise L = floor(1/b), xi = (1 - bL)/b: the alternating Gaussian path
/// 0 -> y_1 -> x_2 -> y_2 -> ... -> y_{L+1} with variances xi, 1 - xi, ...
/// is the proposal and the weight is the product of the two normalized
/// determinants on the ordered set S. Beyond L = 12 the routine falls back to
/// path simulation and says so in `method`.
inline BoundEstimate theorem1_probability(double b, std::size_t samples, std::uint64_t seed,
                                          unsigned threads = 0) {
  detail::require(b > 0.0 && b < 1.0, "block fraction must lie in (0, 1)");
  detail::require(samples >= 2, "need at least two samples");
  const double inv = 1.0 / b;
  const long rounded = std::lround(inv);
  const bool integer = std::abs(inv - static_cast<double>(rounded)) < 1e-9;
  const int order = integer ? static_cast<int>(rounded) : static_cast<int>(std::floor(inv));
  std::ostringstream ctx;
  ctx << "k=1 b=" << b << " L=" << order;

  if (order > detail::kMaxAnalyticOrder) {
    BoundEstimate beta = beta_estimate(1, b, 2000, samples, seed, threads);
    BoundEstimate out;
    out.probability = beta.probability / 2.0;
    out.standard_error = beta.standard_error / 2.0;
    out.replications = samples;
    out.context = ctx.str();
    out.method = "path-simulation (L > 12)";
    return out;
  }

  std::vector<double> values(samples, 0.0);
  const double xi = integer ? 0.0 : (1.0 - b * order) / b;
  parallel_for(samples, threads, [&](std::size_t s) {
    rng::Stream stream(rng::substream(seed, s));
    if (integer) {
      const int l = order;
      Vector x(l + 1);
      x(0) = 0.0;
      for (int i = 0; i < l; ++i) x(i + 1) = x(i) + std::abs(stream.normal());
      values[s] = detail::q_ratio(1.0, x.head(l), x.tail(l)) / std::ldexp(1.0, l);
      return;
    }
    const int l = order;
    Vector x(l + 1), y(l + 1);
    x(0) = 0.0;
    const double sx = std::sqrt(xi), sy = std::sqrt(1.0 - xi);
    for (int i = 0; i <= l; ++i) {
      y(i) = x(i) + sx * stream.normal();
      if (i < l) x(i + 1) = y(i) + sy * stream.normal();
    }
    for (int i = 1; i <= l; ++i)
      if (!(x(i) > x(i - 1)) || !(y(i) > y(i - 1))) return;  // outside S
    values[s] = detail::q_ratio(xi, x, y) * detail::q_ratio(1.0 - xi, x.tail(l), y.head(l));
  });

  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(samples);
  BoundEstimate out;
  out.probability = sum / n;
  out.standard_error = std::sqrt(std::max(0.0, sq / n - out.probability * out.probability) / (n - 1.0));
  out.replications = samples;
  out.context = ctx.str();
  out.method = integer ? "importance-sampling (integer L)" : "importance-sampling (fractional L)";
  return out;
}

/// (1 - 2p)^k: upper bound on P(U_el,k(b) < inf), with equality at k = 1.
inline double proposition1_bound(double b, int k, double p) {
  detail::require(b > 0.0 && b < 1.0, "block fraction must lie in (0, 1)");
  detail::require(k >= 1, "dimension must be positive");
  detail::require(p >= 0.0 && p <= 0.5, "p must lie in [0, 1/2]");
  return std::pow(1.0 - 2.0 * p, k);
}

/// Fraction of replications in which the origin is interior to the hull of
/// the smoothed moments at the true parameter.
inline BoundEstimate finite_sample_bound(const ProcessSpec& spec, std::size_t n,
                                         const Scheme& scheme, const MomentModel& model,
                                         const Vector& theta0, std::size_t replications,
                                         std::uint64_t seed, unsigned threads = 0) {
  spec.validate();
  model.validate();
  detail::require(replications >= 1, "need at least one replication");
  std::vector<char> inside(replications, 0);
  parallel_for(replications, threads, [&](std::size_t rep) {
    const Matrix data = generate(spec, n, rng::substream(seed, rep));
    const SmoothedMoments s = smooth(evaluate(model, data, theta0), scheme);
    inside[rep] = hull_contains_origin(s.values).interior();
  });
  const auto hits = static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
  std::ostringstream ctx;
  ctx << "process=" << to_string(spec.kind) << " rho=" << spec.coefficient << " n=" << n
      << " k=" << model.k << " scheme=";
  if (const auto* o = std::get_if<Overlapping>(&scheme)) ctx << "b=" << o->b;
  else ctx << "expansive";
  return BoundEstimate::from_count(hits, replications, ctx.str(), "finite-sample simulation");
}

/// One row of a bound grid (finite n, or n = inf for limit rows).
struct BoundRow {
  std::size_t n = 0;  // 0 encodes the n = infinity limit
  double rho = 0.0;  // NaN for limit rows
  int k = 1;
  std::string scheme;  // "L=2", "expansive", ...
  BoundEstimate estimate;
};

inline void write_bound_rows(std::ostream& os, const std::vector<BoundRow>& rows) {
  os << "n,rho,k,L-or-scheme,bound,se\n";
  for (const auto& r : rows) {
    if (r.n == 0) os << "inf";
    else os << r.n;
    os << ',';
    if (std::isnan(r.rho)) os << "NA";
    else os << r.rho;
    os << ',' << r.k << ',' << r.scheme << ',' << r.estimate.probability << ','
       << r.estimate.standard_error << '\n';
  }
}

}  // namespace tsel
