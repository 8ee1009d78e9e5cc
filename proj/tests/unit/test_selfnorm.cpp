#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "tsel/dgp.hpp"
#include "tsel/selfnorm.hpp"

using namespace tsel;

namespace {
Matrix noise(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  return generate({ProcessKind::VAR1, 0.4, static_cast<int>(k)}, static_cast<std::size_t>(n), seed);
}
}  // namespace

TEST(Psi, TwoPointHandValue) {
  Matrix raw(2, 1);
  raw << 1, -1;
  EXPECT_NEAR(psi_matrix(raw)(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(psi_matrix_direct(raw, bartlett_kernel())(0, 0), 0.5, 1e-15);
}

TEST(Psi, ConstantRowsMatchKernelDoubleSum) {
  const int n = 9;
  const double c = 1.7;
  double s = 0;
  for (int t = 1; t <= n; ++t)
    for (int j = 1; j <= n; ++j) s += 1.0 - std::abs(t - j) / double(n);
  const Matrix psi = psi_matrix(Matrix::Constant(n, 1, c));
  EXPECT_NEAR(psi(0, 0), c * c * s / n, 1e-12);
}

TEST(Psi, LinearPathEqualsDirectSum) {
  for (std::uint64_t r = 0; r < 10; ++r) {
    const Matrix raw = noise(50 + r * 7, 1 + r % 4, r);
    const Matrix fast = psi_matrix(raw);
    const Matrix slow = psi_matrix_direct(raw, bartlett_kernel());
    EXPECT_LT((fast - slow).norm(), 1e-11 * (1.0 + slow.norm()));
  }
}

TEST(Psi, SymmetricAndPositiveSemidefinite) {
  for (std::uint64_t r = 0; r < 20; ++r) {
    const Matrix raw = noise(40, 3, 100 + r);
    const Matrix psi = psi_matrix(raw);
    EXPECT_LT((psi - psi.transpose()).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(psi);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * psi.trace());
  }
}

TEST(Psi, ZeroRowsAreSingular) {
  const Matrix psi = psi_matrix(Matrix::Zero(5, 2));
  EXPECT_TRUE(psi.isZero());
  EXPECT_THROW(Normalizer{psi}, SingularNormalizer);
  Matrix nearly = Matrix::Identity(2, 2);
  nearly(1, 1) = 1e-13;
  EXPECT_THROW(Normalizer{nearly}, SingularNormalizer);
}

TEST(Score, HandValues) {
  SmoothedMoments s;
  s.scheme = Overlapping{0.5};
  s.n = 4;
  s.values = Matrix::Ones(3, 1);
  EXPECT_DOUBLE_EQ(score_statistic(s, Matrix::Identity(1, 1)), 4.0);
  s.values << 1, 0, -1;
  EXPECT_DOUBLE_EQ(score_statistic(s, Matrix::Identity(1, 1)), 0.0);
}

TEST(Score, MatchesIndependentQuadraticForm) {
  const Matrix raw = noise(60, 3, 5);
  const SmoothedMoments s = smooth_overlapping(raw, 0.2);
  const Matrix psi = psi_matrix(raw.rowwise() - raw.colwise().mean());
  const Vector m = s.values.colwise().mean().transpose();
  const double oracle = 60.0 * m.dot(psi.fullPivLu().solve(m));
  EXPECT_NEAR(score_statistic(s, psi), oracle, 1e-12 * oracle);
}

TEST(Score, InvariantToJointScaling) {
  const Matrix raw = noise(60, 2, 6);
  SmoothedMoments s = smooth_expansive(raw);
  const Matrix psi = psi_matrix(raw);
  const double base = score_statistic(s, psi);
  SmoothedMoments scaled = s;
  scaled.values *= 37.0;
  EXPECT_NEAR(score_statistic(scaled, psi * 37.0 * 37.0), base, 1e-10 * base);
}

TEST(Gmm, SquareCaseIsInverseJacobian) {
  const Matrix raw = noise(30, 2, 7);
  const SmoothedMoments s = smooth_overlapping(raw, 0.2);
  Matrix g(2, 2);
  g << 2, 1, 0.5, 3;
  const auto t = gmm_transform(raw, g, Matrix::Identity(2, 2), s);
  EXPECT_LT((t.smoothed.values - s.values * g.inverse().transpose()).norm(), 1e-12);
  const auto id = gmm_transform(raw, Matrix::Identity(2, 2), Matrix::Identity(2, 2), s);
  EXPECT_LT((id.smoothed.values - s.values).norm(), 1e-15);
  EXPECT_LT((id.residuals - raw).norm(), 1e-15);
}

TEST(Gmm, OveridentifiedMatchesDirectFormula) {
  const Matrix raw = noise(30, 2, 8);
  const SmoothedMoments s = smooth_overlapping(raw, 0.2);
  Matrix g(2, 1);
  g << 1.5, -0.5;
  Matrix w(2, 2);
  w << 2, 0.3, 0.3, 1;
  const auto t = gmm_transform(raw, g, w, s);
  // (g'Wg)^{-1} g'W computed as scalars.
  const double gwg = (g.transpose() * w * g)(0, 0);
  const Eigen::RowVectorXd a = (g.transpose() * w) / gwg;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    EXPECT_NEAR(t.smoothed.values(i, 0), a.dot(s.values.row(i)), 1e-12);
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    EXPECT_NEAR(t.residuals(i, 0), a.dot(raw.row(i)), 1e-12);
}

TEST(Gmm, RankDeficientJacobianIsRejected) {
  const Matrix raw = noise(30, 2, 9);
  const SmoothedMoments s = smooth_overlapping(raw, 0.2);
  Matrix g(2, 2);
  g << 1, 2, 2, 4;
  EXPECT_THROW(gmm_transform(raw, g, Matrix::Identity(2, 2), s), RankDeficient);
}

TEST(Preliminary, NewtonSolvesGeneralModel) {
  // Model without a closed form: f(z, theta) = z^2 - theta^2 with theta > 0.
  MomentModel m;
  m.name = "second-moment";
  m.k = 1;
  m.p = 1;
  m.eval = [](const Vector& z, const Vector& th) -> Vector { return Vector::Constant(1, z(0) * z(0) - th(0) * th(0)); };
  m.jacobian = [](const Vector&, const Vector& th) -> Matrix { return Matrix::Constant(1, 1, -2 * th(0)); };
  const Matrix data = noise(200, 1, 10);
  const Vector th = preliminary_estimate(m, data, Vector::Constant(1, 1.0));
  EXPECT_NEAR(th(0) * th(0), data.col(0).squaredNorm() / 200.0, 1e-10);
  EXPECT_THROW(preliminary_estimate(m, data), InvalidArgument);
}
