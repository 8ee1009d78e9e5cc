#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tsel/detail/hull_lp.hpp"
#include "tsel/types.hpp"

namespace tsel {

enum class HullTag { Interior, Violated };

/// Why a hull check failed. Separated: a direction u with u'f_t >= 0 for all
/// rows, strict for one. RankDeficient: rows lie in a proper subspace and u is
/// a normal to it. Degenerate: every row is zero.
enum class ViolationKind { None, Separated, RankDeficient, Degenerate };

inline std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::None: return "none";
    case ViolationKind::Separated: return "separated";
    case ViolationKind::RankDeficient: return "rank-deficient";
    case ViolationKind::Degenerate: return "degenerate";
  }
  return "?";
}

struct HullStatus {
  HullTag tag = HullTag::Violated;
  ViolationKind reason = ViolationKind::Degenerate;
  Vector certificate;  // Violated: separating direction (zero only if Degenerate)
  Vector weights;      // Interior: alpha_t > 0, sum 1, sum alpha_t f_t = 0
  double margin = 0.0; // optimal delta of the program on unit-normalized rows

  bool interior() const { return tag == HullTag::Interior; }
};

namespace detail {

inline constexpr double kHullThreshold = 1e-10;
inline constexpr double kRankTolerance = 1e-12;

inline HullStatus violated(ViolationKind reason, Vector certificate) {
  HullStatus s;
  s.tag = HullTag::Violated;
  s.reason = reason;
  s.certificate = std::move(certificate);
  return s;
}

inline HullStatus hull_one_dimensional(const Matrix& rows) {
  const double lo = rows.col(0).minCoeff();
  const double hi = rows.col(0).maxCoeff();
  if (lo == 0.0 && hi == 0.0) return violated(ViolationKind::Degenerate, Vector::Zero(1));
  if (!(lo < 0.0 && hi > 0.0)) {
    Vector u(1);
    u(0) = lo >= 0.0 ? 1.0 : -1.0;
    return violated(ViolationKind::Separated, u);
  }
  // Weight 1/pos on every positive row and 1/neg on every negative row gives
  // sum alpha_t x_t = 1 - 1 = 0; zero rows take the smaller weight.
  const Eigen::Index n = rows.rows();
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double x = rows(t, 0);
    if (x > 0) pos += x;
    if (x < 0) neg -= x;
  }
  Vector alpha(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double x = rows(t, 0);
    alpha(t) = x > 0 ? 1.0 / pos : (x < 0 ? 1.0 / neg : std::min(1.0 / pos, 1.0 / neg));
  }
  HullStatus s;
  s.tag = HullTag::Interior;
  s.reason = ViolationKind::None;
  s.weights = alpha / alpha.sum();
  s.margin = s.weights.minCoeff();
  return s;
}

}  // namespace detail

/// Whether the origin lies in the interior of the convex hull of the rows of
/// an N x k matrix.
inline HullStatus hull_contains_origin(const Matrix& rows) {
  detail::require(rows.rows() >= 1 && rows.cols() >= 1, "hull check needs a nonempty matrix");
  detail::require(rows.allFinite(), "hull check needs finite rows");
  const Eigen::Index k = rows.cols();
  if (k == 1) return detail::hull_one_dimensional(rows);

  // Unit-normalize and drop zero rows.
  std::vector<Eigen::Index> keep;
  Vector norms = rows.rowwise().norm();
  for (Eigen::Index t = 0; t < rows.rows(); ++t)
    if (norms(t) > 0.0) keep.push_back(t);
  if (keep.empty()) return detail::violated(ViolationKind::Degenerate, Vector::Zero(k));
  Matrix unit(static_cast<Eigen::Index>(keep.size()), k);
  for (std::size_t i = 0; i < keep.size(); ++i)
    unit.row(static_cast<Eigen::Index>(i)) = rows.row(keep[i]) / norms(keep[i]);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(unit.transpose() * unit);
  const double top = eig.eigenvalues().maxCoeff();
  if (eig.eigenvalues()(0) <= detail::kRankTolerance * top)
    return detail::violated(ViolationKind::RankDeficient, eig.eigenvectors().col(0));

  const auto result = detail::HullSimplex(unit).solve();
  if (!result.affine_feasible) {
    // Phase-I dual: y'A <= 0 on every structural column, so -u separates.
    return detail::violated(ViolationKind::Separated, (-result.dual_u).normalized());
  }
  if (result.delta <= detail::kHullThreshold) {
    // Phase-II dual y = (u, v): u'g_t + v <= 0 for all t with v = -delta, so -u
    // is a weak separator of the unit rows.
    return detail::violated(ViolationKind::Separated, (-result.dual_u).normalized());
  }

  // Map weights back to the original rows: alpha_t g_t = (alpha_t / |f_t|) f_t.
  Vector weights = Vector::Zero(rows.rows());
  for (std::size_t i = 0; i < keep.size(); ++i)
    weights(keep[i]) = result.alpha(static_cast<Eigen::Index>(i)) / norms(keep[i]);
  double smallest = kInfinity;
  for (auto t : keep) smallest = std::min(smallest, weights(t));
  for (Eigen::Index t = 0; t < rows.rows(); ++t)
    if (norms(t) == 0.0) weights(t) = smallest;
  HullStatus s;
  s.tag = HullTag::Interior;
  s.reason = ViolationKind::None;
  s.weights = weights / weights.sum();
  s.margin = result.delta;
  return s;
}

struct DualOptions {
  double tolerance = 1e-9;        // on the gradient norm of the scaled problem
  int max_iterations = 100;
  double backtrack = 0.5;
  double feasibility_margin = 1.0 - 1e-10;
  bool record_trace = false;
  bool check_hull = true;
};

struct ELSolution {
  Vector lambda;
  double value = kInfinity;
  std::optional<Vector> weights;  // implied probabilities, absent when Violated
  HullStatus status;
  int iterations = 0;
  std::vector<double> trace;  // objective along accepted iterates, if requested

  bool finite() const { return status.interior(); }
};

namespace detail {

inline double dual_objective(const Vector& w, const Vector& d) {
  return (w.array() * d.array().log()).sum();
}

}  // namespace detail

/// Maximizes sum_t w_t log(1 + lambda' f_t) over lambda.
///
/// `warm` is an optional starting multiplier for the original (unscaled)
/// rows; it is ignored when infeasible or worse than lambda = 0.
inline ELSolution solve_dual(const Matrix& rows, const Vector& w, const DualOptions& options = {},
                             const Vector* warm = nullptr) {
  detail::require(rows.rows() >= 1 && rows.cols() >= 1, "dual needs a nonempty matrix");
  detail::require(w.size() == rows.rows(), "row weights have the wrong length");
  detail::require((w.array() >= 0.0).all(), "row weights must be nonnegative");
  detail::require(rows.allFinite(), "rows must be finite");
  const Eigen::Index k = rows.cols();

  ELSolution sol;
  if (options.check_hull) {
    sol.status = hull_contains_origin(rows);
    if (!sol.status.interior()) {
      sol.lambda = Vector::Zero(k);
      sol.value = kInfinity;
      return sol;
    }
  } else {
    sol.status.tag = HullTag::Interior;
    sol.status.reason = ViolationKind::None;
  }

  // The objective is invariant under f -> f / s with lambda -> s lambda.
  const double scale = rows.rowwise().norm().maxCoeff();
  const Matrix g = rows / scale;

  Vector lambda = Vector::Zero(k);
  Vector d = Vector::Ones(rows.rows());
  double value = 0.0;
  if (warm != nullptr && warm->size() == k) {
    const Vector start = *warm * scale;
    const Vector ds = Vector::Ones(rows.rows()) + g * start;
    if ((ds.array() > 0.0).all()) {
      const double v = detail::dual_objective(w, ds);
      if (std::isfinite(v) && v > 0.0) {
        lambda = start;
        d = ds;
        value = v;
      }
    }
  }
  if (options.record_trace) sol.trace.push_back(value);

  double w_min = kInfinity;
  for (Eigen::Index r = 0; r < w.size(); ++r)
    if (w(r) > 0.0) w_min = std::min(w_min, w(r));

  int it = 0;
  for (;; ++it) {
    const Vector q = w.array() / d.array();
    const Vector grad = g.transpose() * q;
    if (grad.norm() <= options.tolerance) break;
    if (it >= options.max_iterations) {
      throw NonConverged("empirical likelihood dual did not converge", lambda / scale, it);
    }

    const Vector h = (w.array() / d.array().square()).matrix();
    const Matrix hess = g.transpose() * h.asDiagonal() * g;
    Vector step;
    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(grad);
    if (step.size() != k || !step.allFinite() || step.dot(grad) <= 0.0) step = grad;

    const Vector slope = g * step;
    double t_hi = 1.0;
    for (Eigen::Index r = 0; r < slope.size(); ++r)
      if (slope(r) < 0.0) t_hi = std::min(t_hi, options.feasibility_margin * d(r) / -slope(r));
    const double directional = grad.dot(step);

    // Along the ray the objective phi(t) is concave, so phi'(t) >= 0 certifies
    // phi(t) >= phi(0) without comparing values that may agree to machine
    // precision.
    auto slope_at = [&](double t) {
      return (w.array() * slope.array() / (d.array() + t * slope.array())).sum();
    };
    double t = t_hi;
    bool accepted = false;
    Vector dn;
    double vn = value;
    if (t_hi == 1.0 && directional <= 0.0625 * w_min) {
      // Newton decrement of the w_min-scaled self-concordant objective is at
      // most 1/4: the full step is feasible and in the quadratic region.
      dn = d + slope;
      if ((dn.array() > 0.0).all()) {
        vn = detail::dual_objective(w, dn);
        accepted = std::isfinite(vn);
      }
    }
    for (int halving = 0; !accepted && halving < 80; ++halving) {
      if (halving > 0) t *= options.backtrack;
      dn = d + t * slope;
      if (!(dn.array() > 0.0).all()) continue;
      vn = detail::dual_objective(w, dn);
      if (!std::isfinite(vn)) continue;
      const bool before_peak = slope_at(t) >= 0.0;
      if (t < 1.0 && t == t_hi && !before_peak) continue;  // capped step overshot the ray maximum
      accepted = before_peak || vn >= value + 1e-4 * t * directional;
    }
    if (accepted) {
      lambda += t * step;
      d = dn;
      value = vn;
    }
    if (options.record_trace) sol.trace.push_back(value);
    if (!accepted) {
      throw NonConverged("empirical likelihood line search stalled", lambda / scale, it);
    }
  }

  sol.lambda = lambda / scale;
  sol.value = std::max(value, 0.0);
  sol.iterations = it;
  Vector pi = w.array() / d.array();
  sol.weights = pi / pi.sum();
  return sol;
}

/// Uniform row weights 1/N.
inline Vector uniform_weights(Eigen::Index n) {
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace tsel
