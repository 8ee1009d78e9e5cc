#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "tsel/rng.hpp"
#include "tsel/types.hpp"

namespace tsel {

enum class ProcessKind { AR1, MA1, VAR1, Regression };

inline std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::AR1: return "ar1";
    case ProcessKind::MA1: return "ma1";
    case ProcessKind::VAR1: return "var1";
    case ProcessKind::Regression: return "regression";
  }
  return "?";
}

inline ProcessKind parse_process_kind(const std::string& name) {
  if (name == "ar1") return ProcessKind::AR1;
  if (name == "ma1") return ProcessKind::MA1;
  if (name == "var1") return ProcessKind::VAR1;
  if (name == "regression") return ProcessKind::Regression;
  throw InvalidArgument("unknown process kind '" + name + "'");
}

/// Synthetic data-generating process with standard normal innovations.
///
/// AR1/MA1/VAR1 produce `dimension` independent components sharing one
/// coefficient (the VAR coefficient matrix is coefficient * I). Regression
/// produces `covariates` VAR(1) regressors followed by a response equal to an
/// AR(1) error with the same coefficient (all true slopes are zero).
struct ProcessSpec {
  ProcessKind kind = ProcessKind::AR1;
  double coefficient = 0.0;
  int dimension = 1;
  int covariates = 0;

  void validate() const {
    detail::require(std::isfinite(coefficient), "process coefficient must be finite");
    if (kind != ProcessKind::MA1) {
      detail::require(std::abs(coefficient) < 1.0,
                      "autoregressive coefficient must satisfy |rho| < 1");
    }
    if (kind == ProcessKind::Regression) {
      detail::require(covariates >= 0, "covariate count must be nonnegative");
    } else {
      detail::require(dimension >= 1, "process dimension must be positive");
    }
  }

  /// Columns of the generated data matrix.
  int columns() const { return kind == ProcessKind::Regression ? covariates + 1 : dimension; }

  /// Dimension of the moment conditions of the matching built-in model.
  int moment_dimension() const { return kind == ProcessKind::Regression ? covariates + 1 : dimension; }
};

namespace detail {

// Fills an n x k block with stationary AR(1) paths, innovations drawn row by
// row; the first row is drawn from the stationary law N(0, 1/(1 - rho^2)).
inline void fill_ar1(Eigen::Ref<Matrix> out, double rho, rng::Stream& stream) {
  const double scale = 1.0 / std::sqrt(1.0 - rho * rho);
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double e = stream.normal();
      out(t, j) = t == 0 ? scale * e : rho * out(t - 1, j) + e;
    }
  }
}

}  // namespace detail

/// Draws n observations. Returns an n x spec.columns() matrix; for Regression
/// the columns are (x_1, ..., x_m0, y).
inline Matrix generate(const ProcessSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  detail::require(n >= 1, "sample size must be positive");
  rng::Stream stream(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix out(rows, spec.columns());

  switch (spec.kind) {
    case ProcessKind::AR1:
    case ProcessKind::VAR1:
      detail::fill_ar1(out, spec.coefficient, stream);
      break;
    case ProcessKind::MA1: {
      // e_1..e_n first, then e_0, so theta = 0 reproduces the AR(1), rho = 0 draw.
      Matrix e(rows, spec.dimension);
      for (Eigen::Index t = 0; t < rows; ++t)
        for (Eigen::Index j = 0; j < e.cols(); ++j) e(t, j) = stream.normal();
      Eigen::RowVectorXd previous(spec.dimension);
      for (Eigen::Index j = 0; j < e.cols(); ++j) previous(j) = stream.normal();
      for (Eigen::Index t = 0; t < rows; ++t) {
        out.row(t) = spec.coefficient * previous + e.row(t);
        previous = e.row(t);
      }
      break;
    }
    case ProcessKind::Regression:
      if (spec.covariates > 0)
        detail::fill_ar1(out.leftCols(spec.covariates), spec.coefficient, stream);
      detail::fill_ar1(out.rightCols(1), spec.coefficient, stream);
      break;
  }
  return out;
}

/// Standard Brownian motion on [0, 1] sampled at j/M, j = 0..M, as the
/// normalized partial sum of M standard normal vectors.
struct BrownianPath {
  Matrix values;  // (M + 1) x k, row 0 is the origin
  Matrix increments;  // M x k standard normal innovations

  int grid() const { return static_cast<int>(increments.rows()); }
  int dimension() const { return static_cast<int>(values.cols()); }
};

inline BrownianPath brownian_from_increments(Matrix increments) {
  detail::require(increments.rows() >= 1 && increments.cols() >= 1,
                  "a Brownian path needs at least one increment");
  const double scale = 1.0 / std::sqrt(static_cast<double>(increments.rows()));
  BrownianPath path;
  path.values.setZero(increments.rows() + 1, increments.cols());
  for (Eigen::Index t = 0; t < increments.rows(); ++t)
    path.values.row(t + 1) = path.values.row(t) + scale * increments.row(t);
  path.increments = std::move(increments);
  return path;
}

inline BrownianPath brownian(int k, int grid, std::uint64_t seed) {
  detail::require(k >= 1, "Brownian dimension must be positive");
  detail::require(grid >= 100, "Brownian grid size must be at least 100");
  rng::Stream stream(seed);
  Matrix eps(grid, k);
  for (int t = 0; t < grid; ++t)
    for (int j = 0; j < k; ++j) eps(t, j) = stream.normal();
  return brownian_from_increments(std::move(eps));
}

}  // namespace tsel
