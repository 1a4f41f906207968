#include "oja/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oja {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::HeadSingular: return "HeadSingular";
    case ErrorCode::GapViolation: return "GapViolation";
    case ErrorCode::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::StreamExhausted: return "StreamExhausted";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonPositiveError: return "NonPositiveError";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::RowLengthMismatch: return "RowLengthMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

void require_finite(const Eigen::Ref<const Matrix>& a, const char* what) {
  if (!a.allFinite()) fail(ErrorCode::NonFinite, std::string(what) + " contains NaN or Inf");
}

namespace {

void require_tall(const Eigen::Ref<const Matrix>& a, const char* op) {
  if (a.cols() == 0 || a.rows() < a.cols()) {
    fail(ErrorCode::BadDims, std::string(op) + ": need rows >= cols >= 1, got " +
                                 std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void check_pivots(const Eigen::Ref<const Matrix>& r, const char* op) {
  const Eigen::Index p = r.cols();
  double largest = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) largest = std::max(largest, std::abs(r(j, j)));
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(std::abs(r(j, j)) > kRankTolerance * largest)) {
      fail(ErrorCode::RankDeficient,
           std::string(op) + ": pivot " + std::to_string(j) + " below rank tolerance");
    }
  }
}

}  // namespace

void qr_orthonormalize_inplace(Matrix& a) {
  require_tall(a, "qr_orthonormalize");
  require_finite(a, "qr_orthonormalize input");
  const Eigen::Index d = a.rows();
  const Eigen::Index p = a.cols();

  Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(a);  // factors in place
  const auto& packed = qr.matrixQR();
  check_pivots(packed.topRows(p), "qr_orthonormalize");

  Vector sign(p);
  for (Eigen::Index j = 0; j < p; ++j) sign(j) = packed(j, j) < 0.0 ? -1.0 : 1.0;

  Matrix q = Matrix::Identity(d, p);
  q.applyOnTheLeft(qr.householderQ());
  a = q * sign.asDiagonal();
}

Matrix qr_orthonormalize(const Eigen::Ref<const Matrix>& a) {
  Matrix out = a;
  qr_orthonormalize_inplace(out);
  return out;
}

Matrix polar_orthonormalize(const Eigen::Ref<const Matrix>& a) {
  require_tall(a, "polar_orthonormalize");
  require_finite(a, "polar_orthonormalize input");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.singularValues();
  if (!(s(s.size() - 1) > kRankTolerance * s(0))) {
    fail(ErrorCode::RankDeficient, "polar_orthonormalize: smallest singular value below rank tolerance");
  }
  return dec.matrixU() * dec.matrixV().transpose();
}

Svd svd(const Eigen::Ref<const Matrix>& a) {
  require_finite(a, "svd input");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "svd: Jacobi sweep did not converge");
  Svd out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  if (!out.u.allFinite() || !out.v.allFinite() || !out.s.allFinite()) {
    fail(ErrorCode::NoConvergence, "svd: non-finite factors");
  }
  return out;
}

Vector singular_values(const Eigen::Ref<const Matrix>& a) {
  require_finite(a, "singular_values input");
  Eigen::JacobiSVD<Matrix> dec(a);
  if (dec.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "svd: Jacobi sweep did not converge");
  return dec.singularValues();
}

SymEig sym_eig(const Eigen::Ref<const Matrix>& s) {
  if (s.rows() != s.cols() || s.rows() == 0) fail(ErrorCode::BadDims, "sym_eig: matrix must be square");
  require_finite(s, "sym_eig input");
  const double asym = (s - s.transpose()).norm();
  if (asym > 1e-12 * s.norm()) {
    fail(ErrorCode::NotSymmetric, "sym_eig: ||S - S^T||_F = " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "sym_eig: tridiagonal QL did not converge");

  // Eigen returns ascending order.
  const Eigen::Index n = s.rows();
  SymEig out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double orthonormality_residual(const Eigen::Ref<const Matrix>& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

}  // namespace oja
