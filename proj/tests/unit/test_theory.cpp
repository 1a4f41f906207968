#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oja/random.hpp"
#include "oja/sampler.hpp"
#include "oja/subspace.hpp"
#include "oja/theory.hpp"

using namespace oja;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Random descending spectrum with lambda_p > lambda_{p+1}.
Vector random_spectrum(std::uint64_t seed, std::size_t* p_out) {
  Rng rng(seed, 17);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  const std::size_t d = 2 + rng() % 11;
  const std::size_t p = 1 + rng() % (d - 1);
  std::vector<double> l(d);
  for (auto& v : l) v = u(rng);
  std::sort(l.begin(), l.end(), std::greater<>());
  for (std::size_t i = 0; i < p; ++i) l[i] += 0.05;
  *p_out = p;
  return Eigen::Map<Vector>(l.data(), static_cast<Eigen::Index>(d));
}

// Direct evaluations, independent of the library's loops.
double direct_F_star(const Schedule& s, double g, std::size_t a, std::size_t b) {
  double prod = 1.0;
  for (std::size_t r = a; r <= b; ++r) prod *= 1.0 - s.rate(r) * g;
  return prod;
}

double direct_F_D(const Schedule& s, double g, int i, int j, std::size_t a, std::size_t b) {
  double sum = 0.0;
  for (std::size_t k = a; k <= b; ++k) sum += std::pow(s.rate(k), i) * std::pow(direct_F_star(s, g, k + 1, b), j);
  return sum;
}

}  // namespace

TEST(OfflinePca, AllSamplesAlongE1) {
  Matrix x = Matrix::Zero(10, 3);
  x.col(0).setOnes();
  const OfflinePca r = offline_pca(x, 1);
  EXPECT_LE((r.basis - leading_basis(3, 1)).norm(), 1e-12);  // sign fixed positive
  EXPECT_FALSE(r.degenerate);
  EXPECT_TRUE(offline_pca(x, 2).degenerate);  // lambda_2 = lambda_3 = 0
}

TEST(OfflinePca, NoiselessInSpan) {
  const CovSpec spec = make_spec(vec({3, 2, 1, 1}), 2);
  Matrix x = draw_samples(spec, 2, 50);
  x.rightCols(2).setZero();
  const OfflinePca r = offline_pca(x, 2);
  EXPECT_LE(sin_theta_norm(r.basis, leading_basis(4, 2), NormKind::Frobenius), 1e-10);
}

TEST(OfflinePca, MomentFormMatches) {
  const CovSpec spec = make_spec(vec({3, 2, 1}), 1, 4);
  const Matrix x = draw_samples(spec, 2, 500);
  const OfflinePca a = offline_pca(x, 1);
  const OfflinePca b = offline_pca_from_moment(x.transpose() * x, 500, 1);
  EXPECT_LE((a.basis - b.basis).norm(), 1e-10);
}

TEST(OfflinePca, ErrorNearPhiOverN) {
  const Vector lam = vec({4, 3, 1, 1});
  const CovSpec spec = make_spec(lam, 2);
  const std::size_t n = 10000;
  double acc = 0.0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const OfflinePca est = offline_pca(draw_samples(spec, r, n), 2);
    const double s = sin_theta_norm(est.basis, leading_basis(4, 2), NormKind::Frobenius);
    acc += s * s;
  }
  const double mean = acc / 100.0, target = phi(lam, 2).phi / static_cast<double>(n);
  EXPECT_LE(mean, 10 * target);
  EXPECT_GE(mean, target / 10);
}

TEST(Phi, Examples) {
  const PhiValue a = phi(vec({2, 1}), 1);
  EXPECT_DOUBLE_EQ(a.phi, 2.0);
  EXPECT_DOUBLE_EQ(a.bound, 2.0);
  EXPECT_NEAR(phi(vec({4, 3, 1, 1}), 2).phi, 2.0 * (4.0 / 3.0 + 1.5) / 2.0, 1e-14);
  EXPECT_THROW(phi(vec({1, 1}), 1), Error);
}

TEST(Phi, GapFreeExamples) {
  EXPECT_DOUBLE_EQ(phi_gap_free(vec({2, 2, 1}), 1, 2, 1.0).phi, 2.0);
  try {
    phi_gap_free(vec({3, 2, 2, 1, 1, 1}), 1, 3, 1.0);  // interval is (1, 2]
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ThresholdOutOfRange);
  }
  EXPECT_TRUE(gamma_tilde_admissible(vec({3, 2, 2, 1, 1, 1}), 1, 3, 2.0));
  EXPECT_FALSE(gamma_tilde_admissible(vec({3, 2, 2, 1, 1, 1}), 1, 3, 2.0001));
}

TEST(Minimax, Examples) {
  const MinimaxBound m = minimax_lower_bound(vec({2, 1}), 1, 1, 100, 1.0);
  EXPECT_DOUBLE_EQ(m.value, 0.02);
  EXPECT_DOUBLE_EQ(m.sigma_star_sq, 2.0);
  EXPECT_DOUBLE_EQ(minimax_lower_bound(vec({2, 1}), 1, 1, 200, 1.0).value, 0.01);
  EXPECT_THROW(minimax_lower_bound(vec({2, 2}), 1, 1, 10, 1.0), Error);
}

TEST(LOperator, Examples) {
  const Vector lam = vec({2, 1});
  Matrix t(1, 1);
  t << 3.0;
  EXPECT_DOUBLE_EQ(L_apply(t, 0.0, lam, 1)(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(L_norm(0.0, lam, 1), 1.0);
  EXPECT_NEAR(L_apply(t, 0.1, lam, 1)(0, 0), 2.7, 1e-15);
  EXPECT_NEAR(L_norm(0.1, lam, 1), 0.9, 1e-15);
  EXPECT_THROW(L_norm(1.0, lam, 1), Error);
}

TEST(LOperator, MatchesExplicitLoop) {
  const Vector lam = vec({5, 4, 2, 1, 0.5});
  const std::size_t p = 2;
  Rng rng(1);
  std::normal_distribution<double> n;
  Matrix t(3, 2);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  const Matrix got = L_apply(t, 0.05, lam, p);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      EXPECT_NEAR(got(i, j), (1 + 0.05 * (lam(static_cast<Eigen::Index>(p) + i) - lam(j))) * t(i, j), 1e-14);
}

TEST(FProducts, Examples) {
  const Schedule h = Schedule::harmonic(1.0, 1.0);
  EXPECT_EQ(F_star(h, 1.0, 6, 5), 1.0);
  EXPECT_NEAR(F_star(h, 1.0, 2, 5), 0.2, 1e-15);
  const Schedule h2 = Schedule::harmonic(2.0, 1.0);
  for (std::size_t n_o : {10u, 100u})
    for (std::size_t m : {10u, 100u}) {
      const std::size_t n = n_o * m;
      EXPECT_LE(F_star(h2, 1.0, n_o + 1, n), std::pow(static_cast<double>(n_o) / static_cast<double>(n), 2.0));
    }
}

TEST(FProducts, AgreeWithDirectEvaluation) {
  const Schedule tp = Schedule::two_phase(20, 1.0, 2.0, 1.5, 6, 0.1);
  for (std::size_t n = 1; n <= 80; n += 7)
    for (int i : {1, 2})
      for (int j : {1, 2}) {
        EXPECT_NEAR(F_D(tp, 1.5, i, j, 1, n), direct_F_D(tp, 1.5, i, j, 1, n), 1e-13);
        EXPECT_NEAR(F_star(tp, 1.5, 3, n), direct_F_star(tp, 1.5, 3, n), 1e-15);
      }
}

TEST(Envelope, TrivialCases) {
  const Vector lam = vec({3, 2, 1});
  Matrix t0(2, 1);
  t0 << 0.5, -2.0;
  const Schedule h = Schedule::harmonic(2.0, 1.0);
  EXPECT_TRUE(hadamard_bound_trajectory(lam, 1, h, 16.0, 0, t0) == t0.cwiseProduct(t0));
  // Vanishing rate and no noise: the moment never moves.
  const Schedule tiny = Schedule::constant(1e-300);
  EXPECT_LE((hadamard_bound_trajectory(lam, 1, tiny, 0.0, 50, t0) - t0.cwiseProduct(t0)).norm(), 1e-250);
}

TEST(Envelope, ScalarCaseMatchesFD) {
  // d=2, p=1, gamma=1: the noise part is 2 h sum eta_s^2 prod (1-eta_r)^2 = 2 F_D(2,2).
  const Vector lam = vec({2, 1});
  const Schedule h = Schedule::harmonic(2.0, 1.0);
  const Matrix zero = Matrix::Zero(1, 1);
  const double env = hadamard_bound_trajectory(lam, 1, h, 1.0, 1000, zero)(0, 0);
  const double oracle = 2.0 * direct_F_D(h, 1.0, 2, 2, 1, 1000) * 2.0;  // H = lambda_2 lambda_1 = 2
  EXPECT_LE(env, 2 * oracle);
  EXPECT_GE(env, oracle / 2);
}

TEST(NoFormula, Examples) {
  const double exact = std::ceil(400.0 * std::pow(std::log(200.0), 4));
  EXPECT_EQ(N_o_formula(1, 1.0, 0.1, 0.5, 10, 1.0), static_cast<std::size_t>(exact));
  EXPECT_NEAR(static_cast<double>(N_o_formula(1, 1.0, 0.1, 0.5, 10, 1.0)), 315251.0, 2000.0);
  EXPECT_GT(N_o_formula(1, 2.0, 0.1, 0.5, 10, 1.0), 4 * N_o_formula(1, 1.0, 0.1, 0.5, 10, 1.0));
  EXPECT_GT(N_o_formula(1, 1.0, 0.05, 0.5, 10, 1.0), N_o_formula(1, 1.0, 0.1, 0.5, 10, 1.0));
}

TEST(RateConstants, GapAndGapFree) {
  const RateConstants a = rate_constants(vec({4, 3, 1, 1}), 2, std::nullopt, std::nullopt, 100);
  EXPECT_DOUBLE_EQ(a.gamma, 2.0);
  EXPECT_LE(a.phi, a.phi_upper);
  const RateConstants b = rate_constants(vec({2, 2, 1}), 1, 2, 1.0, 100);
  EXPECT_DOUBLE_EQ(b.gamma, 0.0);
  EXPECT_DOUBLE_EQ(b.phi, 2.0);
  EXPECT_DOUBLE_EQ(*b.gamma_tilde, 1.0);
}

// Properties ----------------------------------------------------------------

TEST(TheoryProperty, PhiBoundAndReduction) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    std::size_t p = 0;
    const Vector lam = random_spectrum(s, &p);
    const PhiValue v = phi(lam, p);
    EXPECT_LE(v.phi, v.bound * (1 + 1e-12));
    EXPECT_EQ(phi_gap_free(lam, p, p, lam(static_cast<Eigen::Index>(p) - 1) - lam(static_cast<Eigen::Index>(p))).phi,
              v.phi);
  }
}

TEST(TheoryProperty, GapFreePhiBound) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    std::size_t p = 0;
    const Vector lam = random_spectrum(s, &p);
    const auto d = static_cast<std::size_t>(lam.size());
    if (p + 1 >= d) continue;
    const std::size_t q = p + 1;
    const double lo = lam(static_cast<Eigen::Index>(p - 1)) - lam(static_cast<Eigen::Index>(q - 1));
    const double hi = lam(static_cast<Eigen::Index>(p - 1)) - lam(static_cast<Eigen::Index>(q));
    if (!(hi > lo)) continue;
    const PhiValue v = phi_gap_free(lam, p, q, hi);
    EXPECT_LE(v.phi, v.bound * (1 + 1e-12));
  }
}

TEST(TheoryProperty, FRecursions) {
  const Schedule h = Schedule::harmonic(2.0, 0.5);
  const double g = 0.4;
  for (std::size_t n = 2; n <= 300; ++n) {
    const double eta = h.rate(n);
    EXPECT_NEAR(F_star(h, g, 1, n), F_star(h, g, 1, n - 1) * (1 - eta * g), 1e-15);
    EXPECT_NEAR(F_D(h, g, 2, 2, 1, n), F_D(h, g, 2, 2, 1, n - 1) * std::pow(1 - eta * g, 2) + eta * eta, 1e-15);
  }
}

TEST(TheoryProperty, HarmonicFDClosedForm) {
  const double c_eta = 2.0, gamma = 1.0;
  const Schedule h = Schedule::harmonic(c_eta, gamma);
  for (std::size_t n_o : {10u, 50u})
    for (std::size_t m : {10u, 100u})
      for (double ratio : {0.5, 1.0, 2.0}) {
        const double n = static_cast<double>(n_o * m), no = static_cast<double>(n_o), lambda = ratio * gamma;
        const double lhs = F_D(h, lambda, 2, 2, n_o + 1, n_o * m);
        EXPECT_LE(lhs, 2 * c_eta * (n - no) / (gamma * n * n * lambda) * (1 + 5 * no / n));
      }
}

TEST(TheoryProperty, LContractsFrobenius) {
  const Vector lam = vec({6, 5, 3, 2, 1});
  Rng rng(5);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 1000; ++k) {
    Matrix t(3, 2);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = nd(rng);
    const double eta = 0.001 * (k % 200);
    EXPECT_LE(L_apply(t, eta, lam, 2).norm(), L_norm(eta, lam, 2) * t.norm() * (1 + 1e-14));
    EXPECT_NEAR(L_norm(eta, lam, 2), 1 - eta * 2.0, 1e-14);
  }
}
