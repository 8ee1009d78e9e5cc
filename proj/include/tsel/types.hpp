#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace tsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Value of an empirical log-likelihood ratio; +inf encodes a violated
/// convex hull constraint.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_infinite(double v) { return std::isinf(v) && v > 0; }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected by a precondition check.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap.
class NonConverged : public Error {
 public:
  NonConverged(std::string what, Vector last_iterate, int iterations)
      : Error(std::move(what)),
        last_iterate_(std::move(last_iterate)),
        iterations_(iterations) {}

  const Vector& last_iterate() const { return last_iterate_; }
  int iterations() const { return iterations_; }

 private:
  Vector last_iterate_;
  int iterations_;
};

/// A normalization matrix is numerically singular.
class SingularNormalizer : public Error {
 public:
  SingularNormalizer(std::string what, double condition)
      : Error(std::move(what)), condition_(condition) {}

  double condition() const { return condition_; }

 private:
  double condition_;
};

/// The smoothed moments do not span the full moment space.
class SpanDeficient : public Error {
 public:
  using Error::Error;
};

/// A Jacobian or design matrix lacks full column rank.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

// floor(x) that tolerates representation error in products such as 300 * (1/3).
inline std::size_t floor_count(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

}  // namespace detail
}  // namespace tsel
