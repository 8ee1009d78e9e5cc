#pragma once

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "tsel/blocks.hpp"
#include "tsel/elcore.hpp"
#include "tsel/selfnorm.hpp"
#include "tsel/types.hpp"

namespace tsel {

/// Penalty tuning: tau = cstar * n and normalizer psi.
struct PenaltySpec {
  double cstar = 0.1;
  Matrix psi;

  void validate(Eigen::Index k) const {
    detail::require(std::isfinite(cstar) && cstar > 0.0,
                    "cstar must be positive; use score_statistic for the cstar -> 0 limit");
    detail::require(psi.rows() == k && psi.cols() == k, "normalizer dimension mismatch");
  }
};

struct OuterOptions {
  double tolerance = 1e-10;  // on successive objective change
  int max_iterations = 200;
  DualOptions inner;
};

/// Result of min_mu [ a V(mu) + c mu' P mu ], V(mu) = max_lambda sum_t w_t log(1 + lambda'(f_t - mu)).
struct SaddleSolution {
  double value = 0.0;
  Vector mu;
  Vector lambda;
  double inner = 0.0;  // V(mu*)
  int iterations = 0;
};

namespace detail {

inline bool spans_full_space(const Matrix& rows) {
  const Vector norms = rows.rowwise().norm();
  Matrix gram = Matrix::Zero(rows.cols(), rows.cols());
  bool any = false;
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    if (norms(t) == 0.0) continue;
    const Vector u = rows.row(t).transpose() / norms(t);
    gram += u * u.transpose();
    any = true;
  }
  if (!any) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0) > kRankTolerance * eig.eigenvalues().maxCoeff();
}

struct InnerEval {
  double value = kInfinity;
  Vector lambda;
  Matrix hessian_v;  // H^{-1} + lambda lambda', Hessian of V in mu
};

inline InnerEval inner_at(const Matrix& rows, const Vector& w, const Vector& mu,
                          const DualOptions& options, const Vector* warm, bool want_hessian) {
  InnerEval e;
  const Matrix shifted = rows.rowwise() - mu.transpose();
  const ELSolution s = solve_dual(shifted, w, options, warm);
  if (!s.finite()) return e;
  e.value = s.value;
  e.lambda = s.lambda;
  if (want_hessian) {
    const Vector d = Vector::Ones(rows.rows()) + shifted * s.lambda;
    const Vector h = w.array() / d.array().square();
    const Matrix hess = shifted.transpose() * h.asDiagonal() * shifted;
    Eigen::LDLT<Matrix> ldlt(hess);
    Matrix hinv = ldlt.solve(Matrix::Identity(rows.cols(), rows.cols()));
    if (!hinv.allFinite()) hinv = hess.completeOrthogonalDecomposition().pseudoInverse();
    e.hessian_v = hinv + s.lambda * s.lambda.transpose();
  }
  return e;
}

}  // namespace detail

/// Generic penalized saddle point. The outer problem is convex in mu; it is
/// solved by Newton's method on the envelope (gradient of V is -lambda*(mu),
/// Hessian H^{-1} + lambda lambda') with backtracking that treats an
/// infeasible inner problem as +inf. Starts from the weighted row mean, where
/// V = 0.
inline SaddleSolution penalized_saddle(const Matrix& rows, const Vector& w, double a, double c,
                                       const Matrix& penalty, const OuterOptions& options = {}) {
  const Eigen::Index k = rows.cols();
  detail::require(rows.rows() >= 1 && k >= 1, "saddle needs a nonempty matrix");
  detail::require(w.size() == rows.rows(), "row weights have the wrong length");
  detail::require(a > 0.0 && c > 0.0, "saddle coefficients must be positive");
  detail::require(penalty.rows() == k && penalty.cols() == k, "penalty matrix has the wrong shape");
  if (!detail::spans_full_space(rows))
    throw SpanDeficient("smoothed moments do not span the moment space");

  const Vector wn = w / w.sum();
  Vector mu = rows.transpose() * wn;
  auto objective = [&](const detail::InnerEval& e, const Vector& m) {
    return a * e.value + c * m.dot(penalty * m);
  };

  detail::InnerEval cur = detail::inner_at(rows, wn, mu, options.inner, nullptr, true);
  if (!std::isfinite(cur.value)) {
    // The row mean is interior whenever the rows span; guard against
    // numerically flat hulls anyway.
    throw SpanDeficient("row mean is not interior to the hull of the rows");
  }
  double f = objective(cur, mu);

  int it = 0;
  bool done = false;
  for (; !done && it < options.max_iterations; ++it) {
    const Vector grad = -a * cur.lambda + 2.0 * c * penalty * mu;
    const Matrix hess = a * cur.hessian_v + 2.0 * c * penalty;
    Vector step = -hess.ldlt().solve(grad);
    if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;
    const double decrement = -grad.dot(step);
    if (decrement <= 1e-14 * std::max(1.0, std::abs(f))) break;

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Vector trial = mu + t * step;
      detail::InnerEval e = detail::inner_at(rows, wn, trial, options.inner, &cur.lambda, true);
      if (!std::isfinite(e.value)) continue;
      const double ft = objective(e, trial);
      if (ft <= f - 1e-4 * t * decrement) {
        const double change = f - ft;
        mu = trial;
        cur = std::move(e);
        f = ft;
        accepted = true;
        done = change < options.tolerance * std::max(1.0, std::abs(f));
        break;
      }
    }
    if (!accepted) break;  // no further decrease representable
  }
  if (!done && it >= options.max_iterations)
    throw NonConverged("penalized outer minimization did not converge", mu, it);
  SaddleSolution out;
  out.value = f;
  out.mu = mu;
  out.lambda = cur.lambda;
  out.inner = cur.value;
  out.iterations = it;
  return out;
}

/// Objective of the generic saddle at a fixed mu (inner maximized); +inf
/// outside the hull. Exposed for convexity checks.
inline double saddle_objective(const Matrix& rows, const Vector& w, double a, double c,
                               const Matrix& penalty, const Vector& mu,
                               const DualOptions& inner = {}) {
  const Vector wn = w / w.sum();
  const auto e = detail::inner_at(rows, wn, mu, inner, nullptr, false);
  if (!std::isfinite(e.value)) return kInfinity;
  return a * e.value + c * mu.dot(penalty * mu);
}

namespace detail {

inline void require_overlapping(const SmoothedMoments& s) {
  require(s.overlapping(), "statistic needs overlapping blocks");
}

inline void require_expansive(const SmoothedMoments& s) {
  require(!s.overlapping(), "statistic needs expansive blocks");
}

// (a, c) of the generic saddle for each statistic.
inline std::pair<double, double> pbel_coefficients(const SmoothedMoments& s, double cstar) {
  const double n = static_cast<double>(s.n), b = s.b();
  return {2.0 * static_cast<double>(s.rows()) / (n * b), cstar * n / b};
}

inline std::pair<double, double> pebel_coefficients(const SmoothedMoments& s, double cstar) {
  return {1.0, cstar * static_cast<double>(s.n)};
}

}  // namespace detail

/// Plain BEL ratio (2/(nb)) max sum log(1 + lambda' f_tn), or the EBEL ratio
/// (1/n) max sum log(1 + lambda' f~_tn); +inf on hull violation.
inline double el_ratio(const SmoothedMoments& s, const DualOptions& options = {}) {
  const ELSolution sol = solve_dual(s.values, uniform_weights(s.rows()), options);
  if (!sol.finite()) return kInfinity;
  if (s.overlapping()) {
    const double n = static_cast<double>(s.n);
    return 2.0 * static_cast<double>(s.rows()) / (n * s.b()) * sol.value;
  }
  return sol.value;
}

inline SaddleSolution pbel_solve(const SmoothedMoments& s, const PenaltySpec& penalty,
                                 const OuterOptions& options = {}) {
  detail::require_overlapping(s);
  penalty.validate(s.dimension());
  const Normalizer psi(penalty.psi);
  const auto [a, c] = detail::pbel_coefficients(s, penalty.cstar);
  return penalized_saddle(s.values, uniform_weights(s.rows()), a, c, psi.inverse(), options);
}

inline SaddleSolution pebel_solve(const SmoothedMoments& s, const PenaltySpec& penalty,
                                  const OuterOptions& options = {}) {
  detail::require_expansive(s);
  penalty.validate(s.dimension());
  const Normalizer psi(penalty.psi);
  const auto [a, c] = detail::pebel_coefficients(s, penalty.cstar);
  return penalized_saddle(s.values, uniform_weights(s.rows()), a, c, psi.inverse(), options);
}

/// min_mu [ (2/(nb)) max_lambda sum_t log(1 + lambda'(f_tn - mu)) + (tau/b) mu' psi^{-1} mu ].
inline double pbel_ratio(const SmoothedMoments& s, const PenaltySpec& penalty,
                         const OuterOptions& options = {}) {
  return pbel_solve(s, penalty, options).value;
}

/// min_mu [ (1/n) max_lambda sum_t log(1 + lambda'(f~_tn - mu)) + tau mu' psi^{-1} mu ].
inline double pebel_ratio(const SmoothedMoments& s, const PenaltySpec& penalty,
                          const OuterOptions& options = {}) {
  return pebel_solve(s, penalty, options).value;
}

}  // namespace tsel
