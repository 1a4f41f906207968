#pragma once

// Streaming subspace iteration U <- orth((I + eta_n x x^T) U).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oja/linalg.hpp"
#include "oja/sampler.hpp"

namespace oja {

// ---------------------------------------------------------------------------
// Learning-rate schedules

struct ConstantRate {
  double eta = 0.0;
};

/// eta_n = c_eta / (gamma_ref * n)
struct HarmonicRate {
  double c_eta = 2.0;
  double gamma_ref = 1.0;
};

/// Cold start at a constant rate c_o' ln(d/delta) / (gamma N_o) for
/// n <= N_o, then c_eta / (gamma n).
struct TwoPhaseRate {
  std::size_t n_o = 1;
  double c_o_prime = 1.0;
  double c_eta = 2.0;
  double gamma = 1.0;
  std::size_t d = 2;
  double delta = 0.1;
};

class Schedule {
 public:
  using Rule = std::variant<ConstantRate, HarmonicRate, TwoPhaseRate>;

  Schedule() = default;  // Harmonic(2, 1)

  static Schedule constant(double eta);
  static Schedule harmonic(double c_eta, double gamma_ref);
  static Schedule two_phase(std::size_t n_o, double c_o_prime, double c_eta, double gamma,
                            std::size_t d, double delta);

  const Rule& rule() const noexcept { return rule_; }
  std::string describe() const;

  /// Strictly positive for n >= 1.
  double rate(std::size_t n) const;

 private:
  explicit Schedule(Rule rule) : rule_(rule) {}
  Rule rule_ = HarmonicRate{};
};

inline double rate(const Schedule& schedule, std::size_t n) { return schedule.rate(n); }

// ---------------------------------------------------------------------------
// Normalization

struct Normalizer {
  enum class Kind { QR, Polar, Deferred };

  Kind kind = Kind::QR;
  std::size_t period = 10;     // Deferred only
  double guard = 0.1;          // Deferred: renormalize early when ||U^T U - I||_F exceeds this

  static Normalizer qr() { return {Kind::QR, 1, 0.0}; }
  static Normalizer polar() { return {Kind::Polar, 1, 0.0}; }
  static Normalizer deferred(std::size_t period = 10, double guard = 0.1);

  std::string describe() const;
};

// ---------------------------------------------------------------------------
// State

struct OjaState {
  Matrix u;               // d x p; column orthonormal whenever `normalized`
  std::size_t n = 0;      // samples consumed
  bool normalized = true;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(u.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(u.cols()); }
  /// Orthonormal basis of span(u) without touching the state.
  Matrix basis() const;
};

/// U0 = qr_orthonormalize(G) with G standard Gaussian drawn from Rng(seed, kInit).
OjaState init_state(std::size_t d, std::size_t p, std::uint64_t seed);

/// Scratch buffers for step_inplace so the hot loop does not allocate.
struct StepWorkspace {
  Vector z;
};

/// One update: z = U^T x, U += eta x z^T, then normalize per `normalizer`.
/// `state.n` is incremented first, so Deferred normalizes when the new count
/// is a multiple of its period.
void step_inplace(OjaState& state, const Eigen::Ref<const Vector>& x, double eta,
                  const Normalizer& normalizer, StepWorkspace& ws);

OjaState step(const OjaState& state, const Eigen::Ref<const Vector>& x, double eta,
              const Normalizer& normalizer);

/// Orthonormalizes a deferred state (QR); no-op if already normalized.
void finalize(OjaState& state);

// ---------------------------------------------------------------------------
// Diagnostics

/// Per-step flags in rotated coordinates Y = Q^T x, V = Q^T U. The sphere
/// tests use T_q(V) when the model has a gap-free target q.
struct DiagnosticRecord {
  bool in_sphere = false;  // V in S(kappa)
  bool in_target = false;  // V in S(epsilon)
  bool bounded = true;     // |Y_i| <= sqrt(lambda_i mu) for all i and ||z|| <= sqrt(lambda_{1~p} mu)
};

struct DiagnosticsConfig {
  double mu = 9.0;
  double kappa = 1.0;
  double epsilon = 0.1;
};

/// First-hitting indices. `n_out` is the first step at which the iterate
/// leaves S(kappa) after having been inside it (an escape). `n_qb` is the
/// first step whose sample breaks the truncation bound.
struct HittingTimes {
  std::optional<std::size_t> n_in_kappa;
  std::optional<std::size_t> n_out;
  std::optional<std::size_t> n_in;    // first entry into S(epsilon)
  std::optional<std::size_t> n_qb;
};

DiagnosticRecord diagnostics_update(const OjaState& state, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& z, const CovSpec& cov,
                                    const DiagnosticsConfig& cfg);

/// Folds one step's record into the hitting times.
void track(HittingTimes& times, std::size_t n, const DiagnosticRecord& rec);

// ---------------------------------------------------------------------------
// Runs

/// Errors measured at one checkpoint. Values are >= 0 or +inf.
struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double sin2F = 0.0;   // ||sin Theta(U, U*)||_F^2
  double tanF = 0.0;    // ||tan Theta(U, U*)||_F
  double tan2 = 0.0;    // ||tan Theta(U, U*)||_2
  std::optional<double> scrTqF;  // ||T_q(Q^T U)||_F, gap-free mode
  bool has_truth = false;
  std::optional<DiagnosticRecord> flags;
};

struct RunOptions {
  std::vector<std::size_t> checkpoints;  // ascending
  std::uint64_t seed = 0;                // echoed into records
  std::optional<DiagnosticsConfig> diagnostics;
  /// Called at every checkpoint with the (possibly unnormalized) state.
  std::function<void(const OjaState&)> on_checkpoint;
};

struct RunResult {
  OjaState state;
  std::vector<TrialRecord> records;
  HittingTimes hits;
};

/// Steps `n_steps` times with eta_n = schedule.rate(n). Ground-truth errors
/// are recorded when the source carries a CovSpec; otherwise records only
/// hold the step index. The final state is always normalized.
RunResult run(OjaState init, SampleSource& source, std::size_t n_steps, const Schedule& schedule,
              const Normalizer& normalizer, const RunOptions& options = {});

/// Errors of a basis against the truth of `cov` (target dimension q if set).
TrialRecord measure(const Eigen::Ref<const Matrix>& u, const CovSpec& cov, std::size_t n,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Checkpoint files

struct Checkpoint {
  OjaState state;
  Schedule schedule;
  Normalizer normalizer;
  std::uint64_t seed = 0;
  /// Synthetic model, when the run came from one; lets a resume regenerate
  /// the remaining samples.
  std::optional<CovSpec> cov;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace oja
