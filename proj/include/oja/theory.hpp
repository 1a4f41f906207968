#pragma once

// Offline PCA baseline and closed-form rate quantities: phi(Lambda), the
// gap-free phi, minimax lower bounds, the entrywise contraction operator L,
// the F products, the Hadamard second-moment envelope and the cold-start
// sample budget N_o.

#include <cstddef>
#include <optional>

#include "oja/engine.hpp"
#include "oja/linalg.hpp"

namespace oja {

struct OfflinePca {
  Matrix basis;        // d x p, each column's largest-magnitude entry positive
  Vector eigenvalues;  // all d empirical eigenvalues, descending
  bool degenerate = false;  // lambda_hat_p - lambda_hat_{p+1} < 1e-12
};

/// Top-p eigenvectors of (1/n) sum x x^T over the rows of `samples` (n x d).
OfflinePca offline_pca(const Eigen::Ref<const Matrix>& samples, std::size_t p);

/// Same, from an accumulated second-moment matrix sum x x^T and count n.
OfflinePca offline_pca_from_moment(const Eigen::Ref<const Matrix>& moment, std::size_t n, std::size_t p);

struct PhiValue {
  double phi = 0.0;
  double bound = 0.0;  // closed-form upper bound on phi
};

/// phi = (1/gamma) sum_{i<=d-p} sum_{j<=p} lambda_{p+i} lambda_j / (lambda_j - lambda_{p+i});
/// bound = p (d-p) lambda_p lambda_{p+1} / gamma^2.
PhiValue phi(const Vector& lambdas, std::size_t p);

/// lambda_p - lambda_q < gamma_tilde <= lambda_p - lambda_{q+1}
bool gamma_tilde_admissible(const Vector& lambdas, std::size_t p, std::size_t q, double gamma_tilde);

/// Gap-free variant with rows q+1..d and prefactor 1/gamma_tilde;
/// bound = p (d-q) lambda_p (lambda_p - gamma_tilde) / gamma_tilde^2.
PhiValue phi_gap_free(const Vector& lambdas, std::size_t p, std::size_t q, double gamma_tilde);

struct MinimaxBound {
  double value = 0.0;
  double sigma_star_sq = 0.0;  // lambda_p lambda_{q+1} / (lambda_p - lambda_{q+1})^2
};

/// c sigma*^2 p (d-q) / n.
MinimaxBound minimax_lower_bound(const Vector& lambdas, std::size_t p, std::size_t q, std::size_t n,
                                 double c = 1.0);

/// Entrywise (1 + eta (lambda_{p+i} - lambda_j)) T_ij for a (d-p) x p matrix T.
Matrix L_apply(const Eigen::Ref<const Matrix>& t, double eta, const Vector& lambdas, std::size_t p);

/// Operator norm of L induced by the Frobenius (or spectral) norm, which for
/// an entrywise multiplier is max |L_ij|; equals 1 - eta*gamma whenever
/// eta (lambda_1 - lambda_d) <= 2 - eta*gamma.
double L_norm(double eta, const Vector& lambdas, std::size_t p);

/// prod_{r=n'}^{n} (1 - eta_r gamma); 1 when n' > n.
double F_star(const Schedule& schedule, double gamma, std::size_t n_prime, std::size_t n);

/// sum_{s=n'}^{n} eta_s^i prod_{r=s+1}^{n} (1 - eta_r gamma)^j.
double F_D(const Schedule& schedule, double gamma, int i, int j, std::size_t n_prime, std::size_t n);

/// Deterministic envelope for E[T o T] after steps n_start+1..n_end:
///   prod L_r^2 o M0 + 2 sum_s eta_s^2 prod_{r>s} L_r^2 o (h_scale H),
/// H_ij = lambda_{r0+i} lambda_j with r0 = q (defaults to p). `second_moment0`
/// is the (d-r0) x p starting value of E[T o T].
Matrix hadamard_bound_from(const Vector& lambdas, std::size_t p, const Schedule& schedule,
                           double h_scale, std::size_t n_start, std::size_t n_end,
                           const Eigen::Ref<const Matrix>& second_moment0,
                           std::optional<std::size_t> q = std::nullopt);

/// Envelope from step 0 with T0 o T0 as starting moment.
Matrix hadamard_bound_trajectory(const Vector& lambdas, std::size_t p, const Schedule& schedule,
                                 double h_scale, std::size_t n, const Eigen::Ref<const Matrix>& t0);

/// Remainder term C_R eps^2 / ln(n d / delta1), reported next to the envelope.
double remainder_term(double c_r, double epsilon, std::size_t n, std::size_t d, double delta1);

/// ceil(C_o p B^2 / (delta^2 gamma^2) * ln(d B / (delta gamma))^4)
std::size_t N_o_formula(std::size_t p, double B, double delta, double gamma, std::size_t d, double c_o = 1.0);

struct RateConstants {
  double gamma = 0.0;
  std::optional<double> gamma_tilde;
  double phi = 0.0;
  double phi_upper = 0.0;
  double minimax = 0.0;
  double sigma_star_sq = 0.0;
};

/// Everything above for one spectrum; gap-free quantities when q is given.
RateConstants rate_constants(const Vector& lambdas, std::size_t p, std::optional<std::size_t> q,
                             std::optional<double> gamma_tilde, std::size_t n, double c = 1.0);

}  // namespace oja
