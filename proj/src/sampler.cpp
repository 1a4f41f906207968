#include "oja/sampler.hpp"

#include <cmath>
#include <random>
#include <string>

#include "oja/subspace.hpp"

namespace oja {

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Rademacher: return "rademacher";
    case Family::UniformBall: return "uniform_ball";
  }
  return "gaussian";
}

Family family_from_string(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "rademacher") return Family::Rademacher;
  if (name == "uniform_ball") return Family::UniformBall;
  fail(ErrorCode::InvalidArgument, "unknown sample family '" + std::string(name) + "'");
}

double CovSpec::lambda_sum(std::size_t i1, std::size_t i2) const {
  double acc = 0.0;
  for (std::size_t i = i1; i <= i2; ++i) acc += lambda(i);
  return acc;
}

Matrix CovSpec::principal_basis(std::size_t k) const {
  return rotation.leftCols(static_cast<Eigen::Index>(k));
}

Matrix CovSpec::covariance() const {
  return rotation * lambdas.asDiagonal() * rotation.transpose();
}

Matrix haar_orthogonal(std::size_t d, std::uint64_t seed) {
  Rng rng(seed, rng_domain::kRotation);
  std::normal_distribution<double> normal;
  Matrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  return qr_orthonormalize(g);
}

CovSpec make_spec(const Vector& lambdas, std::size_t p, std::optional<std::uint64_t> rotation_seed,
                  Family family, std::optional<std::size_t> q) {
  const auto d = static_cast<std::size_t>(lambdas.size());
  if (d < 2) fail(ErrorCode::BadDims, "make_spec: need d >= 2");
  if (p < 1 || p >= d) fail(ErrorCode::BadDims, "make_spec: need 1 <= p < d");
  if (!lambdas.allFinite()) fail(ErrorCode::NonFinite, "make_spec: eigenvalues must be finite");
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas(i) > 0.0)) fail(ErrorCode::InvalidArgument, "make_spec: eigenvalues must be positive");
    if (i > 0 && lambdas(i) > lambdas(i - 1)) {
      fail(ErrorCode::InvalidArgument, "make_spec: eigenvalues must be nonincreasing");
    }
  }
  CovSpec spec;
  spec.lambdas = lambdas;
  spec.p = p;
  spec.family = family;
  spec.sqrt_lambdas = lambdas.cwiseSqrt();
  if (q) {
    if (*q < p || *q >= d) fail(ErrorCode::BadDims, "make_spec: need p <= q < d");
    spec.q = q;
    if (!(spec.lambda(p) > spec.lambda(*q + 1))) {
      fail(ErrorCode::GapViolation, "make_spec: lambda_p must exceed lambda_{q+1}");
    }
  } else if (!(spec.lambda(p) > spec.lambda(p + 1))) {
    fail(ErrorCode::GapViolation,
         "make_spec: lambda_p == lambda_{p+1}; supply a gap-free target q");
  }
  if (rotation_seed) {
    spec.rotation = haar_orthogonal(d, *rotation_seed);
    spec.rotated = true;
    spec.rotation_seed = rotation_seed;
  } else {
    spec.rotation = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  }
  return spec;
}

void sample_into(const CovSpec& spec, Rng& rng, Eigen::Ref<Vector> out) {
  const Eigen::Index d = spec.lambdas.size();
  // w has identity second moment in every family.
  Vector w(d);
  switch (spec.family) {
    case Family::Gaussian: {
      std::normal_distribution<double> normal;
      for (Eigen::Index i = 0; i < d; ++i) w(i) = normal(rng);
      break;
    }
    case Family::Rademacher:
      for (Eigen::Index i = 0; i < d; ++i) w(i) = (rng() >> 63) ? 1.0 : -1.0;
      break;
    case Family::UniformBall: {
      std::normal_distribution<double> normal;
      double norm = 0.0;
      do {
        for (Eigen::Index i = 0; i < d; ++i) w(i) = normal(rng);
        norm = w.norm();
      } while (norm == 0.0);
      w *= std::sqrt(static_cast<double>(d)) / norm;
      break;
    }
  }
  w.array() *= spec.sqrt_lambdas.array();
  if (spec.rotated) {
    out.noalias() = spec.rotation * w;
  } else {
    out = w;
  }
}

Vector sample(const CovSpec& spec, Rng& rng) {
  Vector out(spec.lambdas.size());
  sample_into(spec, rng, out);
  return out;
}

SyntheticStream::SyntheticStream(CovSpec spec, std::uint64_t seed, std::size_t length)
    : spec_(std::move(spec)), seed_(seed), length_(length) {}

bool SyntheticStream::next(Eigen::Ref<Vector> out) {
  if (position_ >= length_) return false;
  Rng rng(seed_, rng_domain::kSample, position_);
  sample_into(spec_, rng, out);
  ++position_;
  return true;
}

void SyntheticStream::skip(std::size_t count) {
  if (count > length_ - position_) fail(ErrorCode::StreamExhausted, "skip past end of stream");
  position_ += count;
}

bool MatrixSource::next(Eigen::Ref<Vector> out) {
  if (position_ >= rows_.rows()) return false;
  out = rows_.row(position_).transpose();
  ++position_;
  return true;
}

Matrix draw_samples(const CovSpec& spec, std::uint64_t seed, std::size_t n, std::uint64_t domain) {
  Matrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dim()));
  Vector x(static_cast<Eigen::Index>(spec.dim()));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, domain, i);
    sample_into(spec, rng, x);
    rows.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return rows;
}

}  // namespace oja
