#include "oja/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oja {

namespace {

double lam(const Vector& lambdas, std::size_t i) { return lambdas(static_cast<Eigen::Index>(i - 1)); }

void check_spectrum(const Vector& lambdas, std::size_t p, const char* op) {
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (p < 1 || p >= d) fail(ErrorCode::BadDims, std::string(op) + ": need 1 <= p < d");
  for (std::size_t i = 1; i <= d; ++i) {
    if (!(lam(lambdas, i) > 0.0)) fail(ErrorCode::InvalidArgument, std::string(op) + ": eigenvalues must be positive");
    if (i > 1 && lam(lambdas, i) > lam(lambdas, i - 1)) {
      fail(ErrorCode::InvalidArgument, std::string(op) + ": eigenvalues must be nonincreasing");
    }
  }
}

void fix_signs(Matrix& basis) {
  for (Eigen::Index k = 0; k < basis.cols(); ++k) {
    Eigen::Index arg = 0;
    basis.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, k) < 0.0) basis.col(k) *= -1.0;
  }
}

}  // namespace

OfflinePca offline_pca_from_moment(const Eigen::Ref<const Matrix>& moment, std::size_t n, std::size_t p) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "offline_pca: need at least one sample");
  const auto d = static_cast<std::size_t>(moment.rows());
  if (p < 1 || p > d) fail(ErrorCode::BadDims, "offline_pca: need 1 <= p <= d");
  Matrix cov = moment / static_cast<double>(n);
  cov = 0.5 * (cov + cov.transpose());
  const SymEig eig = sym_eig(cov);
  OfflinePca out;
  out.basis = eig.vectors.leftCols(static_cast<Eigen::Index>(p));
  out.eigenvalues = eig.values;
  if (p < d) out.degenerate = eig.values(static_cast<Eigen::Index>(p - 1)) - eig.values(static_cast<Eigen::Index>(p)) < 1e-12;
  fix_signs(out.basis);
  return out;
}

OfflinePca offline_pca(const Eigen::Ref<const Matrix>& samples, std::size_t p) {
  if (samples.rows() < 1) fail(ErrorCode::InvalidArgument, "offline_pca: need at least one sample");
  require_finite(samples, "offline_pca samples");
  Matrix moment = Matrix::Zero(samples.cols(), samples.cols());
  moment.selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose());
  moment = moment.selfadjointView<Eigen::Lower>();
  return offline_pca_from_moment(moment, static_cast<std::size_t>(samples.rows()), p);
}

PhiValue phi(const Vector& lambdas, std::size_t p) {
  check_spectrum(lambdas, p, "phi");
  const auto d = static_cast<std::size_t>(lambdas.size());
  const double gamma = lam(lambdas, p) - lam(lambdas, p + 1);
  if (!(gamma > 0.0)) fail(ErrorCode::GapViolation, "phi: lambda_p must exceed lambda_{p+1}");
  double acc = 0.0;
  for (std::size_t i = 1; i <= d - p; ++i) {
    for (std::size_t j = 1; j <= p; ++j) {
      const double lo = lam(lambdas, p + i);
      const double hi = lam(lambdas, j);
      acc += lo * hi / (hi - lo);
    }
  }
  PhiValue out;
  out.phi = acc / gamma;
  out.bound = static_cast<double>(p * (d - p)) * lam(lambdas, p) * lam(lambdas, p + 1) / (gamma * gamma);
  return out;
}

bool gamma_tilde_admissible(const Vector& lambdas, std::size_t p, std::size_t q, double gamma_tilde) {
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (q < p || q >= d) return false;
  return lam(lambdas, p) - lam(lambdas, q) < gamma_tilde && gamma_tilde <= lam(lambdas, p) - lam(lambdas, q + 1);
}

PhiValue phi_gap_free(const Vector& lambdas, std::size_t p, std::size_t q, double gamma_tilde) {
  check_spectrum(lambdas, p, "phi_gap_free");
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (q < p || q >= d) fail(ErrorCode::BadDims, "phi_gap_free: need p <= q < d");
  if (!gamma_tilde_admissible(lambdas, p, q, gamma_tilde)) {
    fail(ErrorCode::ThresholdOutOfRange,
         "phi_gap_free: gamma_tilde must satisfy lambda_p - lambda_q < gamma_tilde <= lambda_p - lambda_{q+1}");
  }
  double acc = 0.0;
  for (std::size_t i = 1; i <= d - q; ++i) {
    for (std::size_t j = 1; j <= p; ++j) {
      const double lo = lam(lambdas, q + i);
      const double hi = lam(lambdas, j);
      acc += lo * hi / (hi - lo);
    }
  }
  PhiValue out;
  out.phi = acc / gamma_tilde;
  out.bound = static_cast<double>(p * (d - q)) * lam(lambdas, p) * (lam(lambdas, p) - gamma_tilde) /
              (gamma_tilde * gamma_tilde);
  return out;
}

MinimaxBound minimax_lower_bound(const Vector& lambdas, std::size_t p, std::size_t q, std::size_t n, double c) {
  check_spectrum(lambdas, p, "minimax_lower_bound");
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (q < p || q >= d) fail(ErrorCode::BadDims, "minimax_lower_bound: need p <= q < d");
  if (n < 1) fail(ErrorCode::InvalidArgument, "minimax_lower_bound: need n >= 1");
  const double lp = lam(lambdas, p);
  const double lq1 = lam(lambdas, q + 1);
  if (!(lp > lq1)) fail(ErrorCode::GapViolation, "minimax_lower_bound: lambda_p must exceed lambda_{q+1}");
  MinimaxBound out;
  out.sigma_star_sq = lp * lq1 / ((lp - lq1) * (lp - lq1));
  out.value = c * out.sigma_star_sq * static_cast<double>(p * (d - q)) / static_cast<double>(n);
  return out;
}

Matrix L_apply(const Eigen::Ref<const Matrix>& t, double eta, const Vector& lambdas, std::size_t p) {
  check_spectrum(lambdas, p, "L_apply");
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (static_cast<std::size_t>(t.rows()) != d - p || static_cast<std::size_t>(t.cols()) != p) {
    fail(ErrorCode::BadDims, "L_apply: T must be (d-p) x p");
  }
  const double gamma = lam(lambdas, p) - lam(lambdas, p + 1);
  if (eta * gamma >= 1.0) fail(ErrorCode::StepTooLarge, "L_apply: eta * gamma >= 1");
  const Vector lower = lambdas.tail(static_cast<Eigen::Index>(d - p));
  const Vector upper = lambdas.head(static_cast<Eigen::Index>(p));
  const Matrix l = (Matrix::Ones(t.rows(), t.cols()).array() +
                    eta * (lower.replicate(1, t.cols()) - upper.transpose().replicate(t.rows(), 1)).array())
                       .matrix();
  return l.cwiseProduct(t);
}

double L_norm(double eta, const Vector& lambdas, std::size_t p) {
  check_spectrum(lambdas, p, "L_norm");
  const auto d = static_cast<std::size_t>(lambdas.size());
  const double gamma = lam(lambdas, p) - lam(lambdas, p + 1);
  if (eta * gamma >= 1.0) fail(ErrorCode::StepTooLarge, "L_norm: eta * gamma >= 1");
  double worst = 0.0;
  for (std::size_t i = 1; i <= d - p; ++i)
    for (std::size_t j = 1; j <= p; ++j)
      worst = std::max(worst, std::abs(1.0 + eta * (lam(lambdas, p + i) - lam(lambdas, j))));
  return worst;
}

double F_star(const Schedule& schedule, double gamma, std::size_t n_prime, std::size_t n) {
  if (n_prime < 1) fail(ErrorCode::InvalidArgument, "F_star: products start at r = 1");
  double prod = 1.0;
  for (std::size_t r = n_prime; r <= n; ++r) prod *= 1.0 - schedule.rate(r) * gamma;
  return prod;
}

double F_D(const Schedule& schedule, double gamma, int i, int j, std::size_t n_prime, std::size_t n) {
  if (n_prime < 1) fail(ErrorCode::InvalidArgument, "F_D: sums start at s = 1");
  // Walk s downward so prod_{r=s+1}^{n} is carried along.
  double sum = 0.0;
  double tail = 1.0;
  for (std::size_t s = n; s >= n_prime && s >= 1; --s) {
    const double eta = schedule.rate(s);
    sum += std::pow(eta, i) * tail;
    tail *= std::pow(1.0 - eta * gamma, j);
    if (s == n_prime) break;
  }
  return sum;
}

Matrix hadamard_bound_from(const Vector& lambdas, std::size_t p, const Schedule& schedule, double h_scale,
                           std::size_t n_start, std::size_t n_end, const Eigen::Ref<const Matrix>& second_moment0,
                           std::optional<std::size_t> q) {
  check_spectrum(lambdas, p, "hadamard_bound");
  const auto d = static_cast<std::size_t>(lambdas.size());
  const std::size_t r0 = q.value_or(p);
  if (r0 < p || r0 >= d) fail(ErrorCode::BadDims, "hadamard_bound: need p <= q < d");
  const auto rows = static_cast<Eigen::Index>(d - r0);
  const auto cols = static_cast<Eigen::Index>(p);
  if (second_moment0.rows() != rows || second_moment0.cols() != cols) {
    fail(ErrorCode::BadDims, "hadamard_bound: starting moment must be (d-q) x p");
  }
  const Vector lower = lambdas.tail(rows);
  const Vector upper = lambdas.head(cols);
  const Matrix h = h_scale * (lower * upper.transpose());
  const Matrix diff = lower.replicate(1, cols) - upper.transpose().replicate(rows, 1);

  Matrix m = second_moment0;
  for (std::size_t r = n_start + 1; r <= n_end; ++r) {
    const double eta = schedule.rate(r);
    const Matrix l = (Matrix::Ones(rows, cols) + eta * diff);
    m = l.cwiseProduct(l).cwiseProduct(m) + 2.0 * eta * eta * h;
  }
  return m;
}

Matrix hadamard_bound_trajectory(const Vector& lambdas, std::size_t p, const Schedule& schedule, double h_scale,
                                 std::size_t n, const Eigen::Ref<const Matrix>& t0) {
  return hadamard_bound_from(lambdas, p, schedule, h_scale, 0, n, t0.cwiseProduct(t0));
}

double remainder_term(double c_r, double epsilon, std::size_t n, std::size_t d, double delta1) {
  const double denom = std::log(static_cast<double>(n) * static_cast<double>(d) / delta1);
  if (!(denom > 0.0)) fail(ErrorCode::InvalidArgument, "remainder_term: need n d / delta1 > 1");
  return c_r * epsilon * epsilon / denom;
}

std::size_t N_o_formula(std::size_t p, double B, double delta, double gamma, std::size_t d, double c_o) {
  if (p < 1 || d < 1 || !(B > 0.0) || !(gamma > 0.0) || !(c_o > 0.0)) {
    fail(ErrorCode::InvalidArgument, "N_o_formula: inputs must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "N_o_formula: delta must lie in (0, 1)");
  const double lead = c_o * static_cast<double>(p) * B * B / (delta * delta * gamma * gamma);
  const double lg = std::log(static_cast<double>(d) * B / (delta * gamma));
  return static_cast<std::size_t>(std::ceil(lead * std::pow(lg, 4)));
}

RateConstants rate_constants(const Vector& lambdas, std::size_t p, std::optional<std::size_t> q,
                             std::optional<double> gamma_tilde, std::size_t n, double c) {
  RateConstants out;
  check_spectrum(lambdas, p, "rate_constants");
  out.gamma = lam(lambdas, p) - lam(lambdas, p + 1);
  const std::size_t target = q.value_or(p);
  if (q && *q > p) {
    if (!gamma_tilde) fail(ErrorCode::ThresholdOutOfRange, "rate_constants: gap-free mode needs gamma_tilde");
    const PhiValue v = phi_gap_free(lambdas, p, *q, *gamma_tilde);
    out.gamma_tilde = gamma_tilde;
    out.phi = v.phi;
    out.phi_upper = v.bound;
  } else {
    const PhiValue v = phi(lambdas, p);
    out.phi = v.phi;
    out.phi_upper = v.bound;
    if (gamma_tilde) out.gamma_tilde = gamma_tilde;
  }
  const MinimaxBound mb = minimax_lower_bound(lambdas, p, target, n, c);
  out.minimax = mb.value;
  out.sigma_star_sq = mb.sigma_star_sq;
  return out;
}

}  // namespace oja
