#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oja/random.hpp"
#include "oja/subspace.hpp"

using namespace oja;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed, 43);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Matrix orthonormal(Eigen::Index r, Eigen::Index c, std::uint64_t seed) { return qr_orthonormalize(gaussian(r, c, seed)); }

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

const double kRt2 = std::sqrt(2.0);

}  // namespace

TEST(Angles, IdenticalSubspaces) {
  const AngleSet a = principal_angles(leading_basis(5, 2), leading_basis(5, 2));
  for (double t : a.angles) EXPECT_EQ(t, 0.0);
}

TEST(Angles, FortyFiveDegrees) {
  const AngleSet a = principal_angles(col({1, 0}), col({1 / kRt2, 1 / kRt2}));
  EXPECT_NEAR(a.angles[0], std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(sin_theta_norm(a, NormKind::Spectral), 1 / kRt2, 1e-15);
  EXPECT_NEAR(sin_theta_norm(a, NormKind::Frobenius), 1 / kRt2, 1e-15);
  EXPECT_NEAR(tan_theta_norm(a, NormKind::Spectral), 1.0, 1e-15);
}

TEST(Angles, Orthogonal) {
  const AngleSet a = principal_angles(col({1, 0}), col({0, 1}));
  EXPECT_DOUBLE_EQ(a.angles[0], std::numbers::pi / 2);
  EXPECT_TRUE(std::isinf(tan_theta_norm(a, NormKind::Spectral)));
  EXPECT_TRUE(std::isinf(tan_theta_norm(a, NormKind::Frobenius)));
}

TEST(Angles, TwoRightAnglesInR4) {
  Matrix x = Matrix::Zero(4, 2), y = Matrix::Zero(4, 2);
  x(0, 0) = x(1, 1) = 1;
  y(2, 0) = y(3, 1) = 1;
  EXPECT_NEAR(sin_theta_norm(x, y, NormKind::Frobenius), kRt2, 1e-15);
}

TEST(Angles, SortedAndInRange) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const AngleSet a = principal_angles(orthonormal(8, 3, s), orthonormal(8, 4, s + 1000));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_GE(a.angles[i], 0.0);
      EXPECT_LE(a.angles[i], std::numbers::pi / 2);
      if (i) EXPECT_LE(a.angles[i - 1], a.angles[i]);
    }
  }
}

TEST(Angles, TinyAnglesResolved) {
  // A rotation by 1e-10 must not collapse to zero.
  const double t = 1e-10;
  const AngleSet a = principal_angles(col({1, 0}), col({std::cos(t), std::sin(t)}));
  EXPECT_NEAR(a.angles[0], t, 1e-20);
}

TEST(Angles, RejectsNonOrthonormal) {
  try {
    principal_angles(col({2, 0}), col({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOrthonormal);
  }
}

TEST(ScrT, TargetSubspaceIsZero) { EXPECT_EQ(scrT(leading_basis(5, 2)).norm(), 0.0); }

TEST(ScrT, DiagonalVector) {
  const Matrix v = col({1 / kRt2, 1 / kRt2});
  EXPECT_NEAR(scrT(v)(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(tan_theta_norm(v, leading_basis(2, 1), NormKind::Spectral), 1.0, 1e-15);
}

TEST(ScrT, GapFreeSliceAndBound) {
  const double r3 = 1 / std::sqrt(3.0);
  const Matrix v = col({r3, r3, r3});
  const Matrix t = scrT(v, 2);
  ASSERT_EQ(t.rows(), 1);
  EXPECT_NEAR(t(0, 0), 1.0, 1e-15);
  EXPECT_LE(tan_theta_norm(v, leading_basis(3, 2), NormKind::Spectral), 1.0 + 1e-15);
}

TEST(ScrT, SingularHeadThrows) {
  try {
    scrT(col({0, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HeadSingular);
  }
}

TEST(ScrT, DependsOnlyOnSpan) {
  const Matrix v = orthonormal(7, 3, 4);
  const Matrix r = gaussian(3, 3, 5);
  EXPECT_LE((scrT(v * r) - scrT(v)).norm(), 1e-10 * scrT(v).norm());
}

TEST(Sphere, Examples) {
  EXPECT_TRUE(sphere_membership(leading_basis(4, 2), 0.0));
  const Matrix v = col({1 / kRt2, 1 / kRt2});
  EXPECT_TRUE(sphere_membership(v, 1.0));
  EXPECT_TRUE(sphere_membership_via_chart(v, 1.0));
  EXPECT_FALSE(sphere_membership(v, 0.5));
  EXPECT_FALSE(sphere_membership_via_chart(v, 0.5));
}

TEST(Sphere, BothCharacterisationsAgree) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const Matrix v = orthonormal(6, 2, s);
    for (double kappa : {0.3, 1.0, 3.0}) EXPECT_EQ(sphere_membership(v, kappa), sphere_membership_via_chart(v, kappa));
  }
}

// Properties ----------------------------------------------------------------

TEST(SubspaceProperty, BasisInvariance) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix x = orthonormal(9, 3, s), y = orthonormal(9, 3, s + 500);
    const Matrix r = orthonormal(3, 3, s + 900);
    const AngleSet a = principal_angles(x, y), b = principal_angles(x * r, y);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.angles[i], b.angles[i], 1e-10);
  }
}

TEST(SubspaceProperty, ChartEqualsTangentWhenPEqualsQ) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t d = 2 + s % 19;
    const std::size_t p = 1 + s % std::min<std::size_t>(5, d - 1);
    const Matrix v = orthonormal(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p), s);
    for (NormKind k : {NormKind::Spectral, NormKind::Frobenius}) {
      const double t = matrix_norm(scrT(v), k);
      EXPECT_NEAR(tan_theta_norm(v, leading_basis(d, p), k), t, 1e-9 * t);
    }
  }
}

TEST(SubspaceProperty, ChartBoundsTangentWhenPBelowQ) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    const std::size_t d = 4 + s % 10;
    const std::size_t p = 1 + s % 2;
    const std::size_t q = p + 1 + s % (d - p - 1);
    const Matrix v = orthonormal(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p), s);
    for (NormKind k : {NormKind::Spectral, NormKind::Frobenius}) {
      EXPECT_LE(tan_theta_norm(v, leading_basis(d, q), k), matrix_norm(scrT(v, q), k) + 1e-9);
    }
  }
}

TEST(SubspaceProperty, SineMetricSymmetric) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix x = orthonormal(8, 3, s), y = orthonormal(8, 3, s + 77);
    for (NormKind k : {NormKind::Spectral, NormKind::Frobenius}) {
      EXPECT_NEAR(sin_theta_norm(x, y, k), sin_theta_norm(y, x, k), 1e-12);
    }
  }
}

TEST(SubspaceProperty, SineTriangleInequality) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Matrix x = orthonormal(6, 2, s), y = orthonormal(6, 2, s + 1000), z = orthonormal(6, 2, s + 2000);
    for (NormKind k : {NormKind::Spectral, NormKind::Frobenius}) {
      EXPECT_LE(sin_theta_norm(x, z, k), sin_theta_norm(x, y, k) + sin_theta_norm(y, z, k) + 1e-9);
    }
  }
}
