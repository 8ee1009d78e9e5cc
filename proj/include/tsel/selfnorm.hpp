#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "tsel/blocks.hpp"
#include "tsel/types.hpp"

namespace tsel {

/// Kernel Q(r, s) on [0, 1]^2 used to build the normalizer.
struct KernelSpec {
  std::string name;
  std::function<double(double, double)> q;
  bool bartlett = false;  // enables the O(n) path
};

inline KernelSpec bartlett_kernel() {
  KernelSpec k;
  k.name = "bartlett";
  k.q = [](double r, double s) {
    const double d = std::abs(r - s);
    return d <= 1.0 ? 1.0 - d : 0.0;
  };
  k.bartlett = true;
  return k;
}

/// (1/n) sum_t sum_j Q(t/n, j/n) f_t f_j', by direct double summation.
inline Matrix psi_matrix_direct(const Matrix& raw, const KernelSpec& kernel) {
  const Eigen::Index n = raw.rows();
  detail::require(n >= 2, "the normalizer needs at least two observations");
  detail::require(static_cast<bool>(kernel.q), "kernel has no evaluation callback");
  const double dn = static_cast<double>(n);
  Matrix psi = Matrix::Zero(raw.cols(), raw.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(raw.cols());
    for (Eigen::Index j = 0; j < n; ++j)
      acc += kernel.q(static_cast<double>(t + 1) / dn, static_cast<double>(j + 1) / dn) * raw.row(j);
    psi += raw.row(t).transpose() * acc;
  }
  psi /= dn;
  return 0.5 * (psi + psi.transpose());
}

namespace detail {

// Bartlett: 1 - |t - j|/n for all pairs, and
// sum_{t,j} |t - j| f_t f_j' = sum_{s=1}^{n-1} [S_s (T - S_s)' + (T - S_s) S_s'].
inline Matrix psi_bartlett(const Matrix& raw) {
  const Eigen::Index n = raw.rows();
  const double dn = static_cast<double>(n);
  const Vector total = raw.colwise().sum().transpose();
  Matrix cross = Matrix::Zero(raw.cols(), raw.cols());
  Vector partial = Vector::Zero(raw.cols());
  for (Eigen::Index s = 0; s + 1 < n; ++s) {
    partial += raw.row(s).transpose();
    cross += partial * (total - partial).transpose();
  }
  Matrix psi = (total * total.transpose() - (cross + cross.transpose()) / dn) / dn;
  return 0.5 * (psi + psi.transpose());
}

}  // namespace detail

/// Normalization matrix of the raw moments evaluated at a preliminary estimate.
inline Matrix psi_matrix(const Matrix& raw, const KernelSpec& kernel = bartlett_kernel()) {
  detail::require(raw.rows() >= 2, "the normalizer needs at least two observations");
  if (kernel.bartlett) return detail::psi_bartlett(raw);
  return psi_matrix_direct(raw, kernel);
}

/// A symmetric positive definite normalizer with a cached inverse.
class Normalizer {
 public:
  static constexpr double kMaxCondition = 1e12;

  explicit Normalizer(const Matrix& psi) : psi_(0.5 * (psi + psi.transpose())) {
    detail::require(psi.rows() == psi.cols() && psi.rows() >= 1, "normalizer must be square");
    detail::require(psi.allFinite(), "normalizer must be finite");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(psi_);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    condition_ = (lo > 0.0) ? hi / lo : kInfinity;
    if (!(hi > 0.0) || !(condition_ <= kMaxCondition)) {
      throw SingularNormalizer("normalization matrix is numerically singular", condition_);
    }
    inverse_ = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
               eig.eigenvectors().transpose();
    inverse_ = 0.5 * (inverse_ + inverse_.transpose());
  }

  const Matrix& matrix() const { return psi_; }
  const Matrix& inverse() const { return inverse_; }
  double condition() const { return condition_; }
  Eigen::Index dimension() const { return psi_.rows(); }

  /// v' psi^{-1} v
  double quadratic(const Vector& v) const { return v.dot(inverse_ * v); }

 private:
  Matrix psi_;
  Matrix inverse_;
  double condition_ = 0.0;
};

/// n (mean of smoothed rows)' psi^{-1} (mean of smoothed rows).
inline double score_statistic(const SmoothedMoments& smoothed, const Normalizer& psi) {
  detail::require(smoothed.dimension() == psi.dimension(), "normalizer dimension mismatch");
  const Vector mean = smoothed.values.colwise().mean().transpose();
  return static_cast<double>(smoothed.n) * psi.quadratic(mean);
}

inline double score_statistic(const SmoothedMoments& smoothed, const Matrix& psi) {
  return score_statistic(smoothed, Normalizer(psi));
}

/// Average Jacobian (1/n) sum_j df(z_j, theta)/dtheta'.
inline Matrix jacobian_mean(const MomentModel& model, const Matrix& data, const Vector& theta) {
  detail::require(static_cast<bool>(model.jacobian), "moment model has no Jacobian");
  Matrix g = Matrix::Zero(model.k, model.p);
  Vector z(data.cols());
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    z = data.row(t).transpose();
    g += model.jacobian(z, theta);
  }
  return g / static_cast<double>(data.rows());
}

struct GmmTransform {
  Matrix projection;         // A = (G'WG)^{-1} G'W, p x k
  SmoothedMoments smoothed;  // rows A f_tn
  Matrix residuals;          // rows u_j = A f(z_j, theta_hat)
};

/// Projects k-dimensional moments onto p dimensions for over-identified
/// models.
inline GmmTransform gmm_transform(const Matrix& raw, const Matrix& jacobian, const Matrix& weight,
                                  const SmoothedMoments& smoothed) {
  const Eigen::Index k = jacobian.rows(), p = jacobian.cols();
  detail::require(k >= p && p >= 1, "GMM transform needs k >= p >= 1");
  detail::require(weight.rows() == k && weight.cols() == k, "weight matrix has the wrong shape");
  detail::require(raw.cols() == k && smoothed.dimension() == k, "moment dimension mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(jacobian);
  if (qr.rank() < p) throw RankDeficient("Jacobian lacks full column rank");
  Eigen::LLT<Matrix> wl(0.5 * (weight + weight.transpose()));
  detail::require(wl.info() == Eigen::Success, "weight matrix must be positive definite");

  const Matrix gw = jacobian.transpose() * weight;
  const Matrix gwg = gw * jacobian;
  Eigen::FullPivLU<Matrix> lu(gwg);
  if (!lu.isInvertible()) throw RankDeficient("G'WG is singular");

  GmmTransform out;
  out.projection = lu.solve(gw);
  out.smoothed = smoothed;
  out.smoothed.values = smoothed.values * out.projection.transpose();
  out.residuals = raw * out.projection.transpose();
  return out;
}

/// Solves sum_j f(z_j, theta) = 0 (least squares when k > p). Uses the model's
/// closed-form estimator when it has one, else Gauss-Newton from `start`.
inline Vector preliminary_estimate(const MomentModel& model, const Matrix& data,
                                   const std::optional<Vector>& start = std::nullopt,
                                   int max_iterations = 100, double tolerance = 1e-10) {
  model.validate();
  if (model.estimator) return model.estimator(data);
  detail::require(start.has_value(), "a starting value is needed without a closed-form estimator");
  detail::require(start->size() == model.p, "starting value has the wrong dimension");
  Vector theta = *start;
  for (int it = 0; it < max_iterations; ++it) {
    const Vector gbar = evaluate(model, data, theta).colwise().mean().transpose();
    const Matrix jac = jacobian_mean(model, data, theta);
    Eigen::ColPivHouseholderQR<Matrix> qr(jac);
    if (qr.rank() < model.p) throw RankDeficient("Jacobian lacks full column rank");
    const Vector step = qr.solve(gbar);
    theta -= step;
    if (step.norm() <= tolerance * (1.0 + theta.norm())) return theta;
  }
  throw NonConverged("preliminary estimator did not converge", theta, max_iterations);
}

}  // namespace tsel
