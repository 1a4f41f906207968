#include "oja/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace oja {

void require_orthonormal(const Eigen::Ref<const Matrix>& q, const char* what, double tol) {
  const double res = orthonormality_residual(q);
  if (!(res <= tol)) {
    fail(ErrorCode::NotOrthonormal,
         std::string(what) + ": ||Q^T Q - I||_F = " + std::to_string(res));
  }
}

AngleSet principal_angles(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  if (x.rows() != y.rows()) fail(ErrorCode::BadDims, "principal_angles: row counts differ");
  if (x.cols() > y.cols()) fail(ErrorCode::BadDims, "principal_angles: need dim X <= dim Y");
  require_orthonormal(x, "principal_angles X");
  require_orthonormal(y, "principal_angles Y");

  const auto p = static_cast<std::size_t>(x.cols());
  const Matrix cross = x.transpose() * y;
  const Vector cos_desc = singular_values(cross);
  // sin(theta_j) are the singular values of (I - Y Y^T) X; they resolve small
  // angles that arccos of a cosine near 1 cannot.
  const Matrix residual = x - y * cross.transpose();
  const Vector sin_desc = singular_values(residual);

  AngleSet out;
  out.angles.resize(p);
  out.cosines.resize(p);
  out.sines.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double c = std::clamp(cos_desc(static_cast<Eigen::Index>(j)), 0.0, 1.0);
    const double s = std::clamp(sin_desc(static_cast<Eigen::Index>(p - 1 - j)), 0.0, 1.0);
    out.cosines[j] = c;
    out.sines[j] = s;
    out.angles[j] = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
  }
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

double sin_theta_norm(const AngleSet& angles, NormKind kind) {
  if (angles.size() == 0) return 0.0;
  if (kind == NormKind::Spectral) {
    return *std::max_element(angles.sines.begin(), angles.sines.end());
  }
  double acc = 0.0;
  for (double s : angles.sines) acc += s * s;
  return std::sqrt(acc);
}

double tan_theta_norm(const AngleSet& angles, NormKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < angles.size(); ++j) {
    if (angles.cosines[j] == 0.0) return inf;
    const double t = angles.sines[j] / angles.cosines[j];
    worst = std::max(worst, t);
    acc += t * t;
  }
  return kind == NormKind::Spectral ? worst : std::sqrt(acc);
}

double sin_theta_norm(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, NormKind kind) {
  return sin_theta_norm(principal_angles(x, y), kind);
}

double tan_theta_norm(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, NormKind kind) {
  return tan_theta_norm(principal_angles(x, y), kind);
}

double matrix_norm(const Eigen::Ref<const Matrix>& a, NormKind kind) {
  if (a.size() == 0) return 0.0;
  if (kind == NormKind::Frobenius) return a.norm();
  return singular_values(a)(0);
}

Matrix scrT(const Eigen::Ref<const Matrix>& v, std::size_t q) {
  const auto d = static_cast<std::size_t>(v.rows());
  const auto p = static_cast<std::size_t>(v.cols());
  if (p == 0 || q < p || q >= d) {
    fail(ErrorCode::BadDims, "scrT: need 1 <= p <= q < d (p=" + std::to_string(p) +
                                 ", q=" + std::to_string(q) + ", d=" + std::to_string(d) + ")");
  }
  require_finite(v, "scrT input");
  const auto head = v.topRows(static_cast<Eigen::Index>(p));
  const double scale = singular_values(v)(0);
  const Vector head_sv = singular_values(head);
  if (!(head_sv(head_sv.size() - 1) > kRankTolerance * scale)) {
    fail(ErrorCode::HeadSingular, "scrT: leading block V(1:p,:) is numerically singular");
  }
  const auto lower = v.bottomRows(static_cast<Eigen::Index>(d - q));
  // T = lower * head^{-1}  <=>  head^T T^T = lower^T
  return head.transpose().partialPivLu().solve(lower.transpose()).transpose();
}

bool sphere_membership(const Eigen::Ref<const Matrix>& v, double kappa) {
  if (kappa < 0.0) fail(ErrorCode::InvalidArgument, "sphere_membership: kappa must be >= 0");
  require_orthonormal(v, "sphere_membership V");
  const Vector head_sv = singular_values(v.topRows(v.cols()));
  const double threshold = 1.0 / std::sqrt(1.0 + kappa * kappa);
  return head_sv(head_sv.size() - 1) >= threshold * (1.0 - 1e-12);
}

bool sphere_membership_via_chart(const Eigen::Ref<const Matrix>& v, double kappa) {
  if (kappa < 0.0) fail(ErrorCode::InvalidArgument, "sphere_membership: kappa must be >= 0");
  try {
    const Matrix t = scrT(v);
    return matrix_norm(t, NormKind::Spectral) <= kappa * (1.0 + 1e-12);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::HeadSingular) return false;
    throw;
  }
}

Matrix leading_basis(std::size_t d, std::size_t k) {
  return Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
}

}  // namespace oja
