#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "tsel/types.hpp"

namespace tsel {

/// Moment function f(z, theta) with E f(z_t, theta_0) = 0.
///
/// `eval` maps one observation (a row of the data matrix, as a column vector)
/// and a parameter to a k-vector. `jacobian` returns the k x p derivative in
/// theta; `estimator` solves sum_t f(z_t, theta) = 0 in closed form when that
/// is available.
struct MomentModel {
  using Eval = std::function<Vector(const Vector& z, const Vector& theta)>;
  using Jacobian = std::function<Matrix(const Vector& z, const Vector& theta)>;
  using Estimator = std::function<Vector(const Matrix& data)>;

  std::string name;
  int k = 1;
  int p = 1;
  Eval eval;
  Jacobian jacobian;
  Estimator estimator;

  void validate() const {
    detail::require(k >= 1 && p >= 1 && k >= p, "moment model needs k >= p >= 1");
    detail::require(static_cast<bool>(eval), "moment model has no evaluation callback");
  }
};

/// n x k matrix of f(z_t, theta).
inline Matrix evaluate(const MomentModel& model, const Matrix& data, const Vector& theta) {
  model.validate();
  detail::require(theta.size() == model.p, "parameter has the wrong dimension");
  Matrix raw(data.rows(), model.k);
  Vector z(data.cols());
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    z = data.row(t).transpose();
    Vector f = model.eval(z, theta);
    detail::require(f.size() == model.k, "moment callback returned the wrong dimension");
    raw.row(t) = f.transpose();
  }
  return raw;
}

/// Mean model f(z, theta) = z - theta with k = p.
inline MomentModel mean_model(int k) {
  detail::require(k >= 1, "mean model dimension must be positive");
  MomentModel m;
  m.name = "mean";
  m.k = k;
  m.p = k;
  m.eval = [](const Vector& z, const Vector& theta) -> Vector { return z - theta; };
  m.jacobian = [k](const Vector&, const Vector&) -> Matrix {
    return -Matrix::Identity(k, k);
  };
  m.estimator = [](const Matrix& data) -> Vector {
    return data.colwise().mean().transpose();
  };
  return m;
}

/// Linear regression with intercept: observation z = (x_1..x_m0, y),
/// f(z, beta) = xt (y - xt' beta) with xt = (1, x')'.
inline MomentModel regression_model(int covariates) {
  detail::require(covariates >= 0, "covariate count must be nonnegative");
  const int k = covariates + 1;
  auto design = [covariates](const Vector& z) {
    Vector xt(covariates + 1);
    xt(0) = 1.0;
    xt.tail(covariates) = z.head(covariates);
    return xt;
  };
  MomentModel m;
  m.name = "regression";
  m.k = k;
  m.p = k;
  m.eval = [design, covariates](const Vector& z, const Vector& beta) -> Vector {
    const Vector xt = design(z);
    return xt * (z(covariates) - xt.dot(beta));
  };
  m.jacobian = [design](const Vector& z, const Vector&) -> Matrix {
    const Vector xt = design(z);
    return -xt * xt.transpose();
  };
  m.estimator = [covariates](const Matrix& data) -> Vector {
    Matrix x(data.rows(), covariates + 1);
    x.col(0).setOnes();
    x.rightCols(covariates) = data.leftCols(covariates);
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < x.cols()) throw RankDeficient("regression design is rank deficient");
    return qr.solve(data.col(covariates));
  };
  return m;
}

/// Scalar regression through the origin: z = (x, y), f(z, theta) = x (y - x theta).
inline MomentModel origin_regression_model() {
  MomentModel m;
  m.name = "origin-regression";
  m.k = 1;
  m.p = 1;
  m.eval = [](const Vector& z, const Vector& theta) -> Vector {
    return Vector::Constant(1, z(0) * (z(1) - z(0) * theta(0)));
  };
  m.jacobian = [](const Vector& z, const Vector&) -> Matrix {
    return Matrix::Constant(1, 1, -z(0) * z(0));
  };
  m.estimator = [](const Matrix& data) -> Vector {
    const double sxx = data.col(0).squaredNorm();
    if (!(sxx > 0.0)) throw RankDeficient("regressor is identically zero");
    return Vector::Constant(1, data.col(0).dot(data.col(1)) / sxx);
  };
  return m;
}

/// Nonnegative weight function on [0, 1] for expansive blocks.
using WeightFunction = std::function<double(double)>;

inline WeightFunction unit_weight() {
  return [](double) { return 1.0; };
}

struct Overlapping {
  double b = 0.1;
};

struct Expansive {
  WeightFunction omega = unit_weight();
};

using Scheme = std::variant<Overlapping, Expansive>;

/// Block-smoothed moment rows.
struct SmoothedMoments {
  Scheme scheme;
  Matrix values;        // N x k
  std::size_t n = 0;    // original sample size
  std::size_t block = 0;  // m = floor(n b) for overlapping, 0 for expansive

  bool overlapping() const { return std::holds_alternative<Overlapping>(scheme); }
  double b() const { return overlapping() ? std::get<Overlapping>(scheme).b : 0.0; }
  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index dimension() const { return values.cols(); }
};

/// Fully overlapping block means: row t is the mean of raw rows t..t+m-1 with
/// m = floor(n b), N = n - m + 1 rows.
inline SmoothedMoments smooth_overlapping(const Matrix& raw, double b) {
  detail::require(b > 0.0 && b < 1.0, "block fraction must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(raw.rows());
  detail::require(n >= 1, "no observations to smooth");
  const std::size_t m = detail::floor_count(static_cast<double>(n) * b);
  detail::require(m >= 1, "block fraction gives a block of size zero");
  const std::size_t rows = n - m + 1;

  SmoothedMoments out;
  out.scheme = Overlapping{b};
  out.n = n;
  out.block = m;
  out.values.resize(static_cast<Eigen::Index>(rows), raw.cols());
  Eigen::RowVectorXd window = raw.topRows(static_cast<Eigen::Index>(m)).colwise().sum();
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t t = 0; t < rows; ++t) {
    if (t > 0) {
      window += raw.row(static_cast<Eigen::Index>(t + m - 1)) - raw.row(static_cast<Eigen::Index>(t - 1));
    }
    out.values.row(static_cast<Eigen::Index>(t)) = inv * window;
  }
  return out;
}

/// Expansive blocks: row t = omega(t/n) (1/n) sum_{j<=t} raw_j, t = 1..n.
inline SmoothedMoments smooth_expansive(const Matrix& raw, WeightFunction omega = unit_weight()) {
  detail::require(static_cast<bool>(omega), "weight function is empty");
  const auto n = static_cast<std::size_t>(raw.rows());
  detail::require(n >= 1, "no observations to smooth");
  SmoothedMoments out;
  out.n = n;
  out.values.resize(raw.rows(), raw.cols());
  Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(raw.cols());
  const double dn = static_cast<double>(n);
  for (std::size_t t = 1; t <= n; ++t) {
    running += raw.row(static_cast<Eigen::Index>(t - 1));
    const double w = omega(static_cast<double>(t) / dn);
    detail::require(w >= 0.0 && std::isfinite(w), "weight function must be nonnegative");
    out.values.row(static_cast<Eigen::Index>(t - 1)) = (w / dn) * running;
  }
  out.scheme = Expansive{std::move(omega)};
  return out;
}

inline SmoothedMoments smooth(const Matrix& raw, const Scheme& scheme) {
  if (const auto* o = std::get_if<Overlapping>(&scheme)) return smooth_overlapping(raw, o->b);
  return smooth_expansive(raw, std::get<Expansive>(scheme).omega);
}

}  // namespace tsel
