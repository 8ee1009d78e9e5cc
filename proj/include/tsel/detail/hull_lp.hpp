#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "tsel/types.hpp"

namespace tsel::detail {

// Dense two-phase revised simplex for the interiority program
//
//   maximize delta  s.t.  sum_t alpha_t g_t = 0,  sum_t alpha_t = 1,  alpha_t >= delta,
//
// written in standard form with alpha_t = beta_t + delta, beta >= 0 and
// delta = dplus - dminus. There are only k + 1 equality rows, so the basis is
// tiny and each pivot costs O(N k) for pricing.
struct HullProgramResult {
  bool affine_feasible = false;  // 0 lies in the affine hull of the rows
  double delta = 0.0;            // optimal min_t alpha_t (valid if feasible)
  Vector alpha;                  // optimal weights (valid if feasible)
  Vector dual_u;                 // k-part of the final dual vector
  double dual_v = 0.0;           // last component of the final dual vector
};

class HullSimplex {
 public:
  // rows: N x k, expected to be scaled to unit norm by the caller.
  explicit HullSimplex(const Matrix& rows) : k_(rows.cols()), n_(rows.rows()) {
    m_ = k_ + 1;
    // Columns: beta_0..beta_{N-1}, dplus, dminus, artificial_0..artificial_{m-1}.
    cols_ = n_ + 2 + m_;
    a_.setZero(m_, cols_);
    a_.topLeftCorner(k_, n_) = rows.transpose();
    a_.block(k_, 0, 1, n_).setOnes();
    const Vector total = rows.colwise().sum().transpose();
    a_.col(n_).head(k_) = total;
    a_(k_, n_) = static_cast<double>(n_);
    a_.col(n_ + 1) = -a_.col(n_);
    a_.rightCols(m_).setIdentity();
    rhs_.setZero(m_);
    rhs_(k_) = 1.0;
  }

  HullProgramResult solve() {
    HullProgramResult result;
    basis_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) basis_[i] = n_ + 2 + i;

    // Phase I: minimize the sum of artificials.
    Vector cost = Vector::Zero(cols_);
    cost.tail(m_).setOnes();
    run(cost, /*allow_artificial=*/true);
    const double infeasibility = cost_of_basis(cost);
    if (infeasibility > kFeasibilityTol) {
      result.affine_feasible = false;
      const Vector y = duals(cost);
      result.dual_u = y.head(k_);
      result.dual_v = y(k_);
      return result;
    }
    drive_out_artificials();

    // Phase II: minimize dminus - dplus.
    cost.setZero();
    cost(n_) = -1.0;
    cost(n_ + 1) = 1.0;
    run(cost, /*allow_artificial=*/false);

    const Vector x = primal();
    const double delta = x(n_) - x(n_ + 1);
    result.affine_feasible = true;
    result.delta = delta;
    result.alpha = (x.head(n_).array() + delta).matrix();
    const Vector y = duals(cost);
    result.dual_u = y.head(k_);
    result.dual_v = y(k_);
    return result;
  }

 private:
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kReducedCostTol = 1e-12;
  static constexpr double kFeasibilityTol = 1e-10;

  Matrix basis_matrix() const {
    Matrix b(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) b.col(i) = a_.col(basis_[i]);
    return b;
  }

  Vector primal() const {
    Vector x = Vector::Zero(cols_);
    const Vector xb = basis_matrix().partialPivLu().solve(rhs_);
    for (Eigen::Index i = 0; i < m_; ++i) x(basis_[i]) = xb(i);
    return x;
  }

  Vector duals(const Vector& cost) const {
    Vector cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
    return basis_matrix().transpose().partialPivLu().solve(cb);
  }

  double cost_of_basis(const Vector& cost) const {
    const Vector xb = basis_matrix().partialPivLu().solve(rhs_);
    double total = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) total += cost(basis_[i]) * xb(i);
    return total;
  }

  bool is_artificial(Eigen::Index j) const { return j >= n_ + 2; }

  void run(const Vector& cost, bool allow_artificial) {
    const Eigen::Index limit = 50 * (cols_ + m_) + 1000;
    int degenerate_streak = 0;
    std::vector<char> in_basis(static_cast<std::size_t>(cols_), 0);
    for (Eigen::Index it = 0; it < limit; ++it) {
      std::fill(in_basis.begin(), in_basis.end(), 0);
      for (auto j : basis_) in_basis[static_cast<std::size_t>(j)] = 1;

      const Matrix b = basis_matrix();
      Eigen::PartialPivLU<Matrix> lu(b);
      const Vector xb = lu.solve(rhs_);
      Vector cb(m_);
      for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
      const Vector y = b.transpose().partialPivLu().solve(cb);
      const Vector reduced = cost - a_.transpose() * y;

      // Dantzig pricing; Bland's rule after a run of degenerate pivots.
      const bool bland = degenerate_streak > 20;
      Eigen::Index entering = -1;
      double best = -kReducedCostTol;
      for (Eigen::Index j = 0; j < cols_; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (!allow_artificial && is_artificial(j)) continue;
        if (reduced(j) < best) {
          entering = j;
          if (bland) break;
          best = reduced(j);
        }
      }
      if (entering < 0) return;

      const Vector d = lu.solve(a_.col(entering));
      Eigen::Index leaving = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (d(i) <= kPivotTol) continue;
        const double r = std::max(xb(i), 0.0) / d(i);
        if (r < ratio - 1e-14 ||
            (std::abs(r - ratio) <= 1e-14 && leaving >= 0 && basis_[i] < basis_[leaving])) {
          ratio = r;
          leaving = i;
        }
      }
      if (leaving < 0) throw Error("hull program is unbounded; rows are not finite");
      degenerate_streak = ratio <= 1e-14 ? degenerate_streak + 1 : 0;
      basis_[leaving] = entering;
    }
    throw Error("hull program exceeded its pivot limit");
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      const Matrix b = basis_matrix();
      Eigen::PartialPivLU<Matrix> lu(b);
      Eigen::Index best = -1;
      double best_abs = 1e-9;
      for (Eigen::Index j = 0; j < n_ + 2; ++j) {
        if (std::find(basis_.begin(), basis_.end(), j) != basis_.end()) continue;
        const double entry = std::abs(lu.solve(a_.col(j))(i));
        if (entry > best_abs) {
          best_abs = entry;
          best = j;
        }
      }
      if (best < 0) throw Error("hull program has a redundant constraint row");
      basis_[i] = best;
    }
  }

  Eigen::Index k_, n_, m_, cols_;
  Matrix a_;
  Vector rhs_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace tsel::detail
