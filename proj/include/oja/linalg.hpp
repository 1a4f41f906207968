#pragma once

// Dense linear algebra kernels used throughout the engine. Matrices are plain
// Eigen dense matrices; the functions here add the contracts the rest of the
// library relies on (sign conventions, rank checks, sorted spectra).

#include <Eigen/Dense>

#include "oja/error.hpp"

namespace oja {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative cutoff below which a pivot or singular value counts as zero.
inline constexpr double kRankTolerance = 1e-12;

/// Throws NonFinite if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& a, const char* what);

/// Thin Householder QR. Columns of the result span the same space as `a`;
/// the implied R factor has a strictly positive diagonal, which makes the
/// output unique.
Matrix qr_orthonormalize(const Eigen::Ref<const Matrix>& a);

/// In-place variant used on the hot path of the streaming update.
void qr_orthonormalize_inplace(Matrix& a);

/// Orthogonal polar factor A (A^T A)^{-1/2}, i.e. the column-orthonormal matrix
/// closest to `a` in Frobenius norm.
Matrix polar_orthonormalize(const Eigen::Ref<const Matrix>& a);

struct Svd {
  Matrix u;
  Vector s;  // descending, length min(m, n)
  Matrix v;
};

Svd svd(const Eigen::Ref<const Matrix>& a);

/// Singular values only, descending.
Vector singular_values(const Eigen::Ref<const Matrix>& a);

struct SymEig {
  Vector values;  // descending
  Matrix vectors;
};

SymEig sym_eig(const Eigen::Ref<const Matrix>& s);

/// ||Q^T Q - I||_F.
double orthonormality_residual(const Eigen::Ref<const Matrix>& q);

}  // namespace oja
