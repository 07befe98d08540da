#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "mibci/csp.hpp"

using namespace mibci;

TEST(RegularizedCovariance, SingleTrialNoShrinkage) {
  Matrix c(2, 2);
  c << 4, 1, 1, 2;
  const std::vector<Matrix> one{c};
  EXPECT_LT((regularized_covariance(std::span<const Matrix>(one), 0.0) - c / 6.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RegularizedCovariance, FullShrinkageIsScaledIdentity) {
  Rng rng(1);
  std::vector<Matrix> covs;
  for (int i = 0; i < 5; ++i) covs.push_back(testutil::random_spd(rng, 4));
  const Matrix r = regularized_covariance(std::span<const Matrix>(covs), 1.0);
  EXPECT_LT((r - Matrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RegularizedCovariance, TwoTrialsByHand) {
  Matrix a(2, 2), b(2, 2);
  a << 3, 1, 1, 1;  // trace 4
  b << 1, 0, 0, 1;  // trace 2
  // mean of normalized: [[0.375+0.25, 0.125], [0.125, 0.125+0.25]] = [[0.625,0.125],[0.125,0.375]]
  // target = 1/2; shrink 0.1
  Matrix want(2, 2);
  want << 0.9 * 0.625 + 0.05, 0.9 * 0.125, 0.9 * 0.125, 0.9 * 0.375 + 0.05;
  const std::vector<Matrix> covs{a, b};
  EXPECT_LT((regularized_covariance(std::span<const Matrix>(covs), 0.1) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RegularizedCovariance, Errors) {
  std::vector<Matrix> covs{Matrix::Zero(2, 2)};
  EXPECT_THROW(regularized_covariance(std::span<const Matrix>(covs), 0.1), NumericalError);
  covs[0] = Matrix::Identity(2, 2);
  covs[0](0, 1) = std::nan("");
  EXPECT_THROW(regularized_covariance(std::span<const Matrix>(covs), 0.1), NumericalError);
  EXPECT_THROW(regularized_covariance(std::span<const Matrix>(covs), 1.5), InvalidArgument);
}

TEST(Csp, EqualClassesGiveOneHalf) {
  Rng rng(2);
  const Matrix c = testutil::random_spd(rng, 6);
  const auto m = csp_fit(c, c, 6);
  for (double l : m.eigenvalues) EXPECT_NEAR(l, 0.5, 1e-10);
}

TEST(Csp, DiagonalTwoByTwo) {
  Matrix a(2, 2), b(2, 2);
  a << 4, 0, 0, 1;
  b << 1, 0, 0, 4;
  const auto m = csp_fit(a, b, 2);
  ASSERT_EQ(m.components(), 2);
  EXPECT_NEAR(m.eigenvalues[0], 0.8, 1e-12);
  EXPECT_NEAR(m.eigenvalues[1], 0.2, 1e-12);
  const double s = 1.0 / std::sqrt(5.0);
  EXPECT_NEAR(m.filters(0, 0), s, 1e-12);
  EXPECT_NEAR(m.filters(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(m.filters(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(m.filters(1, 1), s, 1e-12);
}

TEST(Csp, RandomPairsAgainstJacobiOracle) {
  Rng rng(3);
  for (int rep = 0; rep < 60; ++rep) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(11));
    const Matrix a = testutil::random_spd(rng, n), b = testutil::random_spd(rng, n);
    const auto model = csp_fit(a, b, static_cast<int>(n % 2 == 0 ? n : n - 1));
    const Matrix& w = model.filters;
    const auto k = w.rows();
    const Matrix white = w * (a + b) * w.transpose();
    const Matrix diag_a = w * a * w.transpose();
    const Matrix diag_b = w * b * w.transpose();
    EXPECT_LT((white - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
    Vector lam(k);
    for (Eigen::Index j = 0; j < k; ++j) lam(j) = model.eigenvalues[static_cast<std::size_t>(j)];
    EXPECT_LT((diag_a - Matrix(lam.asDiagonal())).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((diag_b - Matrix((Vector::Ones(k) - lam).asDiagonal())).cwiseAbs().maxCoeff(), 1e-8);

    // independent route: Cholesky + Jacobi on plain vectors
    const auto [vals, vecs] = oracle::generalized_eigen(testutil::to_mat(a), testutil::to_mat(a + b));
    const auto nn = static_cast<std::size_t>(n);
    std::vector<std::size_t> pick;
    for (Eigen::Index j = 0; j < k / 2; ++j) pick.push_back(nn - 1 - static_cast<std::size_t>(j));
    for (Eigen::Index j = k / 2 - 1; j >= 0; --j) pick.push_back(static_cast<std::size_t>(j));
    for (Eigen::Index j = 0; j < k; ++j) {
      const std::size_t col = pick[static_cast<std::size_t>(j)];
      EXPECT_NEAR(lam(j), vals[col], 1e-9);
      // compare up to sign, then check the sign rule directly
      double dot = 0.0;
      for (std::size_t i = 0; i < nn; ++i) dot += w(j, static_cast<Eigen::Index>(i)) * vecs[i][col];
      const double sgn = dot < 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < nn; ++i) EXPECT_NEAR(w(j, static_cast<Eigen::Index>(i)), sgn * vecs[i][col], 1e-7);
      Eigen::Index arg;
      w.row(j).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(w(j, arg), 0.0);
    }
  }
}

TEST(Csp, EigenvaluesDescendWithinEachEnd) {
  Rng rng(4);
  const Matrix a = testutil::random_spd(rng, 8), b = testutil::random_spd(rng, 8);
  const auto m = csp_fit(a, b, 6);
  for (std::size_t j = 1; j < m.eigenvalues.size(); ++j) EXPECT_GE(m.eigenvalues[j - 1], m.eigenvalues[j]);
}

TEST(Csp, Errors) {
  Rng rng(5);
  const Matrix a = testutil::random_spd(rng, 4), b = testutil::random_spd(rng, 4);
  EXPECT_THROW(csp_fit(a, b, 3), InvalidArgument);
  EXPECT_THROW(csp_fit(a, b, 0), InvalidArgument);
  EXPECT_THROW(csp_fit(a, b, 6), InvalidArgument);
  Matrix bad = a;
  bad(0, 0) = -5.0;
  EXPECT_THROW(csp_fit(bad, b, 2), InvalidArgument);
  EXPECT_THROW(csp_fit(a, testutil::random_spd(rng, 3), 2), InvalidArgument);
}

TEST(CspFeatures, FormulaCases) {
  CspModel m;
  m.filters = Matrix::Identity(4, 4);
  EXPECT_EQ(m.components(), 4);
  for (double f : csp_features_from_covariance(m, Matrix::Identity(4, 4) * 3.0)) EXPECT_NEAR(f, std::log(0.25), 1e-15);
  m.filters = Matrix::Identity(2, 2);
  Matrix c(2, 2);
  c << 3, 0.4, 0.4, 1;
  const auto f = csp_features_from_covariance(m, c);
  EXPECT_NEAR(f[0], std::log(0.75), 1e-15);
  EXPECT_NEAR(f[1], std::log(0.25), 1e-15);
  EXPECT_THROW(csp_features_from_covariance(m, Matrix::Zero(2, 2)), NumericalError);
  EXPECT_THROW(csp_features_from_covariance(m, Matrix::Identity(3, 3)), InvalidArgument);
}

TEST(CspFeatures, ScaleInvariantAndMatchesSignalVariance) {
  Rng rng(6);
  const Matrix a = testutil::random_spd(rng, 5), b = testutil::random_spd(rng, 5);
  const auto m = csp_fit(a, b, 4);
  const Signal x = testutil::random_signal(rng, 5, 300);
  const auto f1 = csp_features(m, x);
  const auto f10 = csp_features(m, 10.0 * x);
  ASSERT_EQ(f1.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(f1[j], f10[j], 1e-10);
  // direct route: project, take variances
  const Signal z = m.filters * x;
  std::vector<double> var;
  double total = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto r = z.row(j).array();
    var.push_back((r - r.mean()).square().mean());
    total += var.back();
  }
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(f1[j], std::log(var[j] / total), 1e-10);
}
