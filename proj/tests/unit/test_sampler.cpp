#include <gtest/gtest.h>

#include <set>

#include "oja/sampler.hpp"
#include "oja/subspace.hpp"

using namespace oja;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix empirical_cov(const Matrix& rows) { return rows.transpose() * rows / static_cast<double>(rows.rows()); }

}  // namespace

TEST(MakeSpec, DerivedQuantities) {
  const CovSpec s = make_spec(vec({2, 1}), 1);
  EXPECT_DOUBLE_EQ(s.gap(), 1.0);
  EXPECT_DOUBLE_EQ(s.nu(), 0.5);
  EXPECT_DOUBLE_EQ(s.nu1(), 1.0);
  EXPECT_DOUBLE_EQ(s.lambda_sum(1, 2), 3.0);
  EXPECT_DOUBLE_EQ(make_spec(vec({4, 3, 1, 1}), 2).gap(), 2.0);
}

TEST(MakeSpec, ZeroGapRejectedUnlessGapFree) {
  try {
    make_spec(vec({1, 1}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GapViolation);
  }
  EXPECT_NO_THROW(make_spec(vec({2, 2, 1}), 1, std::nullopt, Family::Gaussian, 2));
}

TEST(MakeSpec, RejectsBadSpectra) {
  EXPECT_THROW(make_spec(vec({1, 2}), 1), Error);   // increasing
  EXPECT_THROW(make_spec(vec({2, 0}), 1), Error);   // non-positive
  EXPECT_THROW(make_spec(vec({2, 1}), 2), Error);   // p >= d
}

TEST(MakeSpec, RotationIsOrthogonal) {
  const CovSpec s = make_spec(vec({3, 2, 1, 0.5}), 2, 17);
  EXPECT_TRUE(s.rotated);
  EXPECT_LE(orthonormality_residual(s.rotation), 1e-10);
  EXPECT_TRUE(make_spec(vec({3, 2, 1, 0.5}), 2, 17).rotation == s.rotation);
}

TEST(Haar, FirstMomentIsIsotropic) {
  // The first column of a Haar matrix is uniform on the sphere: E[u u^T] = I/d.
  Matrix acc = Matrix::Zero(3, 3);
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const Matrix q = haar_orthogonal(3, s);
    acc += q.col(0) * q.col(0).transpose();
  }
  acc /= 2000.0;
  EXPECT_LE((acc - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Sample, RademacherMagnitudes) {
  const CovSpec s = make_spec(vec({2, 1}), 1, std::nullopt, Family::Rademacher);
  const Matrix x = draw_samples(s, 3, 1000);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    EXPECT_DOUBLE_EQ(std::abs(x(i, 0)), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(std::abs(x(i, 1)), 1.0);
  }
}

TEST(Sample, RademacherRotatedBoundedness) {
  const CovSpec s = make_spec(vec({4, 2, 1}), 1, 5, Family::Rademacher);
  const Matrix x = draw_samples(s, 1, 500);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector w = s.sqrt_lambdas.cwiseInverse().asDiagonal() * (s.rotation.transpose() * x.row(i).transpose());
    EXPECT_NEAR(w.cwiseAbs().maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(w.cwiseAbs().minCoeff(), 1.0, 1e-12);
  }
}

TEST(Sample, GaussianMomentsWithinThreeStandardErrors) {
  const CovSpec s = make_spec(vec({2, 1}), 1);
  const std::size_t n = 100000;
  const Matrix c = empirical_cov(draw_samples(s, 8, n));
  const Matrix sigma = s.covariance();
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      // Var(x_i x_j) = sigma_ii sigma_jj + sigma_ij^2 for Gaussians.
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / static_cast<double>(n));
      EXPECT_LE(std::abs(c(i, j) - sigma(i, j)), 3 * se);
      EXPECT_LE(std::abs(c(i, j) - sigma(i, j)), 0.05);
    }
}

TEST(Sample, UniformBallAndRotatedMoments) {
  for (Family f : {Family::UniformBall, Family::Rademacher}) {
    const CovSpec s = make_spec(vec({3, 2, 1}), 1, 9, f);
    const Matrix x = draw_samples(s, 2, 100000);
    EXPECT_LE((empirical_cov(x) - s.covariance()).cwiseAbs().maxCoeff(), 0.06);
    // In rotated coordinates the covariance is diagonal.
    const Matrix y = x * s.rotation;
    const Matrix cy = empirical_cov(y);
    EXPECT_LE((cy - Matrix(cy.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.06);
  }
}

TEST(Stream, DeterministicAndSeedSensitive) {
  const CovSpec s = make_spec(vec({2, 1, 0.5}), 1);
  EXPECT_TRUE(draw_samples(s, 4, 50) == draw_samples(s, 4, 50));
  std::set<double> firsts;
  for (std::uint64_t seed = 0; seed < 100; ++seed) firsts.insert(draw_samples(s, seed, 1)(0, 0));
  EXPECT_EQ(firsts.size(), 100u);
}

TEST(Stream, EmptyAndExhaustion) {
  const CovSpec s = make_spec(vec({2, 1}), 1);
  SyntheticStream empty(s, 0, 0);
  Vector x(2);
  EXPECT_FALSE(empty.next(x));
  SyntheticStream three(s, 0, 3);
  int count = 0;
  while (three.next(x)) ++count;
  EXPECT_EQ(count, 3);
}

TEST(Stream, SkipMatchesReplay) {
  const CovSpec s = make_spec(vec({2, 1, 0.5}), 1, 3);
  const Matrix all = draw_samples(s, 6, 20);
  SyntheticStream st(s, 6, 20);
  st.skip(13);
  Vector x(3);
  ASSERT_TRUE(st.next(x));
  EXPECT_TRUE(x == all.row(13).transpose());
}

TEST(Family, NamesRoundTrip) {
  for (Family f : {Family::Gaussian, Family::Rademacher, Family::UniformBall}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW(family_from_string("cauchy"), Error);
}
