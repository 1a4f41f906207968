#pragma once

// Synthetic sample streams with an exactly known covariance Q diag(lambda) Q^T.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "oja/linalg.hpp"
#include "oja/random.hpp"

namespace oja {

enum class Family { Gaussian, Rademacher, UniformBall };

std::string_view to_string(Family f) noexcept;
Family family_from_string(std::string_view name);

/// Ground-truth model. Eigenvalues are 1-based in the accessors below to
/// match the usual lambda_1 >= ... >= lambda_d indexing.
struct CovSpec {
  Vector lambdas;
  std::size_t p = 1;
  /// Gap-free target dimension (q >= p). When absent the model needs
  /// lambda_p > lambda_{p+1}.
  std::optional<std::size_t> q;
  Matrix rotation;  // d x d orthogonal; identity when not rotated
  bool rotated = false;
  std::optional<std::uint64_t> rotation_seed;
  Family family = Family::Gaussian;
  Vector sqrt_lambdas;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lambdas.size()); }
  double lambda(std::size_t i) const { return lambdas(static_cast<Eigen::Index>(i - 1)); }
  /// lambda_{i1} + ... + lambda_{i2}
  double lambda_sum(std::size_t i1, std::size_t i2) const;
  /// lambda_p - lambda_{p+1}
  double gap() const { return lambda(p) - lambda(p + 1); }
  /// lambda_{p+1~d} / lambda_{1~p}
  double nu() const { return lambda_sum(p + 1, dim()) / lambda_sum(1, p); }
  double nu1() const { return nu() > 1.0 ? nu() : 1.0; }
  /// Target dimension of the ground-truth subspace (q in gap-free mode).
  std::size_t target_dim() const noexcept { return q.value_or(p); }
  /// Orthonormal basis of the top-k eigenspace, Q(:, 1:k).
  Matrix principal_basis(std::size_t k) const;
  Matrix principal_basis() const { return principal_basis(target_dim()); }
  /// Q diag(lambda) Q^T
  Matrix covariance() const;
};

/// Builds and validates a spec. With a rotation seed a Haar orthogonal Q is
/// drawn (Gaussian matrix + sign-fixed QR); otherwise Q = I.
CovSpec make_spec(const Vector& lambdas, std::size_t p,
                  std::optional<std::uint64_t> rotation_seed = std::nullopt,
                  Family family = Family::Gaussian, std::optional<std::size_t> q = std::nullopt);

/// Haar-distributed d x d orthogonal matrix.
Matrix haar_orthogonal(std::size_t d, std::uint64_t seed);

/// One draw x = Q Lambda^{1/2} w with E[w w^T] = I.
void sample_into(const CovSpec& spec, Rng& rng, Eigen::Ref<Vector> out);
Vector sample(const CovSpec& spec, Rng& rng);

/// Pull-style sample source consumed by the engine.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t dim() const = 0;
  /// Writes the next sample; false when exhausted.
  virtual bool next(Eigen::Ref<Vector> out) = 0;
  /// Ground truth, if the source is synthetic.
  virtual const CovSpec* truth() const { return nullptr; }
};

/// Finite replayable synthetic stream: sample i is drawn from
/// Rng(seed, kSample, i), so skipping ahead costs nothing.
class SyntheticStream final : public SampleSource {
 public:
  SyntheticStream(CovSpec spec, std::uint64_t seed, std::size_t length);

  std::size_t dim() const override { return spec_.dim(); }
  bool next(Eigen::Ref<Vector> out) override;
  const CovSpec* truth() const override { return &spec_; }

  void skip(std::size_t count);
  std::size_t position() const noexcept { return position_; }
  std::size_t length() const noexcept { return length_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  CovSpec spec_;
  std::uint64_t seed_;
  std::size_t length_;
  std::size_t position_ = 0;
};

/// Rows of an in-memory n x d matrix, in order.
class MatrixSource final : public SampleSource {
 public:
  explicit MatrixSource(Matrix rows) : rows_(std::move(rows)) {}
  std::size_t dim() const override { return static_cast<std::size_t>(rows_.cols()); }
  bool next(Eigen::Ref<Vector> out) override;

 private:
  Matrix rows_;
  Eigen::Index position_ = 0;
};

/// Draws `n` samples of the stream (seed) into an n x d matrix.
Matrix draw_samples(const CovSpec& spec, std::uint64_t seed, std::size_t n,
                    std::uint64_t domain = rng_domain::kSample);

}  // namespace oja
