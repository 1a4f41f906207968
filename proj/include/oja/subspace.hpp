#pragma once

// Distances between subspaces: canonical angles, sin/tan norms, and the
// chart coordinates T_q(V) = V(q+1:d, :) * V(1:p, :)^{-1}.

#include <cstddef>
#include <vector>

#include "oja/linalg.hpp"

namespace oja {

enum class NormKind { Spectral, Frobenius };

/// Canonical angles theta_1 <= ... <= theta_p between span(X) (p columns)
/// and span(Y) (q >= p columns). Cosines and sines are kept alongside so the
/// tangent can be formed as sin/cos without going through the angle.
struct AngleSet {
  std::vector<double> angles;
  std::vector<double> cosines;
  std::vector<double> sines;

  std::size_t size() const noexcept { return angles.size(); }
};

/// Default tolerance on ||X^T X - I||_F used by the orthonormality checks.
inline constexpr double kOrthonormalTolerance = 1e-8;

/// Throws NotOrthonormal when ||Q^T Q - I||_F exceeds the tolerance.
void require_orthonormal(const Eigen::Ref<const Matrix>& q, const char* what,
                         double tol = kOrthonormalTolerance);

AngleSet principal_angles(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y);

double sin_theta_norm(const AngleSet& angles, NormKind kind);
double tan_theta_norm(const AngleSet& angles, NormKind kind);  // +inf if any angle is pi/2

double sin_theta_norm(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, NormKind kind);
double tan_theta_norm(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, NormKind kind);

/// T_q(V) = V(q+1:d, :) V(1:p, :)^{-1}; q == p gives T(V). V need not be
/// orthonormal (the result only depends on span(V)). Throws HeadSingular when
/// the leading p x p block is numerically singular relative to ||V||_2.
Matrix scrT(const Eigen::Ref<const Matrix>& v, std::size_t q);
inline Matrix scrT(const Eigen::Ref<const Matrix>& v) { return scrT(v, static_cast<std::size_t>(v.cols())); }

/// Matrix norm helper matching NormKind.
double matrix_norm(const Eigen::Ref<const Matrix>& a, NormKind kind);

/// V in S(kappa), i.e. sigma_min(V(1:p, :)) >= 1/sqrt(1 + kappa^2). V must
/// be column orthonormal. The boundary is treated as inside up to a relative
/// slack of 1e-12.
bool sphere_membership(const Eigen::Ref<const Matrix>& v, double kappa);

/// Same predicate through the chart: ||T(V)||_2 <= kappa. Works for any
/// basis of the span; false when T is undefined.
bool sphere_membership_via_chart(const Eigen::Ref<const Matrix>& v, double kappa);

/// [I_k; 0] as a d x k matrix.
Matrix leading_basis(std::size_t d, std::size_t k);

}  // namespace oja
