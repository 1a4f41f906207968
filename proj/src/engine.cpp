#include "oja/engine.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "oja/serialize.hpp"
#include "oja/subspace.hpp"

namespace oja {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " must be a positive finite number");
  }
}

}  // namespace

Schedule Schedule::constant(double eta) {
  require_positive(eta, "constant rate eta");
  return Schedule(ConstantRate{eta});
}

Schedule Schedule::harmonic(double c_eta, double gamma_ref) {
  require_positive(c_eta, "harmonic C_eta");
  require_positive(gamma_ref, "harmonic gamma_ref");
  return Schedule(HarmonicRate{c_eta, gamma_ref});
}

Schedule Schedule::two_phase(std::size_t n_o, double c_o_prime, double c_eta, double gamma,
                             std::size_t d, double delta) {
  if (n_o < 1) fail(ErrorCode::InvalidArgument, "two-phase N_o must be >= 1");
  require_positive(c_o_prime, "two-phase C_o'");
  if (!(c_eta >= 1.0)) fail(ErrorCode::InvalidArgument, "two-phase C_eta must be >= 1");
  require_positive(gamma, "two-phase gamma");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "two-phase delta must lie in (0, 1)");
  // ln(d/delta) > 0 since d >= 1 > delta.
  if (d < 1) fail(ErrorCode::InvalidArgument, "two-phase d must be >= 1");
  return Schedule(TwoPhaseRate{n_o, c_o_prime, c_eta, gamma, d, delta});
}

double Schedule::rate(std::size_t n) const {
  if (n < 1) fail(ErrorCode::InvalidArgument, "rate: step index starts at 1");
  const double nd = static_cast<double>(n);
  return std::visit(
      [nd, n](const auto& r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRate>) {
          return r.eta;
        } else if constexpr (std::is_same_v<R, HarmonicRate>) {
          return r.c_eta / (r.gamma_ref * nd);
        } else {
          if (n <= r.n_o) {
            return r.c_o_prime * std::log(static_cast<double>(r.d) / r.delta) /
                   (r.gamma * static_cast<double>(r.n_o));
          }
          return r.c_eta / (r.gamma * nd);
        }
      },
      rule_);
}

std::string Schedule::describe() const { return to_json(*this).dump(); }

Normalizer Normalizer::deferred(std::size_t period, double guard) {
  if (period < 1) fail(ErrorCode::InvalidArgument, "deferred period must be >= 1");
  if (!(guard > 0.0)) fail(ErrorCode::InvalidArgument, "deferred guard must be positive");
  return {Kind::Deferred, period, guard};
}

std::string Normalizer::describe() const { return to_json(*this).dump(); }

Matrix OjaState::basis() const {
  if (normalized) return u;
  return qr_orthonormalize(u);
}

OjaState init_state(std::size_t d, std::size_t p, std::uint64_t seed) {
  if (p < 1 || p >= d) {
    fail(ErrorCode::BadDims, "init_state: need 1 <= p < d (d=" + std::to_string(d) +
                                 ", p=" + std::to_string(p) + ")");
  }
  Rng rng(seed, rng_domain::kInit);
  std::normal_distribution<double> normal;
  Matrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  qr_orthonormalize_inplace(g);
  return OjaState{std::move(g), 0, true};
}

void step_inplace(OjaState& state, const Eigen::Ref<const Vector>& x, double eta,
                  const Normalizer& normalizer, StepWorkspace& ws) {
  if (x.size() != state.u.rows()) fail(ErrorCode::BadDims, "step: sample length differs from d");
  if (!x.allFinite()) fail(ErrorCode::NonFinite, "step: sample contains NaN or Inf");
  if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorCode::InvalidArgument, "step: eta must be >= 0");

  ws.z.noalias() = state.u.transpose() * x;
  state.u.noalias() += (eta * x) * ws.z.transpose();
  if (!state.u.allFinite()) fail(ErrorCode::NonFinite, "step: update overflowed");
  ++state.n;

  switch (normalizer.kind) {
    case Normalizer::Kind::QR:
      qr_orthonormalize_inplace(state.u);
      state.normalized = true;
      break;
    case Normalizer::Kind::Polar:
      state.u = polar_orthonormalize(state.u);
      state.normalized = true;
      break;
    case Normalizer::Kind::Deferred:
      if (state.n % normalizer.period == 0 || orthonormality_residual(state.u) > normalizer.guard) {
        qr_orthonormalize_inplace(state.u);
        state.normalized = true;
      } else {
        state.normalized = false;
      }
      break;
  }
}

OjaState step(const OjaState& state, const Eigen::Ref<const Vector>& x, double eta,
              const Normalizer& normalizer) {
  OjaState next = state;
  StepWorkspace ws;
  step_inplace(next, x, eta, normalizer, ws);
  return next;
}

void finalize(OjaState& state) {
  if (state.normalized) return;
  qr_orthonormalize_inplace(state.u);
  state.normalized = true;
}

DiagnosticRecord diagnostics_update(const OjaState& state, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& z, const CovSpec& cov,
                                    const DiagnosticsConfig& cfg) {
  DiagnosticRecord rec;
  const std::size_t p = state.rank();
  if (x.size() > 0) {
    const Vector y = cov.rotated ? Vector(cov.rotation.transpose() * x) : Vector(x);
    bool bounded = z.norm() <= std::sqrt(cov.lambda_sum(1, p) * cfg.mu);
    for (Eigen::Index i = 0; bounded && i < y.size(); ++i) {
      bounded = std::abs(y(i)) <= std::sqrt(cov.lambdas(i) * cfg.mu);
    }
    rec.bounded = bounded;
  }
  const Matrix v = cov.rotated ? Matrix(cov.rotation.transpose() * state.u) : state.u;
  double t_norm = std::numeric_limits<double>::infinity();
  try {
    t_norm = matrix_norm(scrT(v, cov.target_dim()), NormKind::Spectral);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HeadSingular) throw;
  }
  rec.in_sphere = t_norm <= cfg.kappa * (1.0 + 1e-12);
  rec.in_target = t_norm <= cfg.epsilon * (1.0 + 1e-12);
  return rec;
}

void track(HittingTimes& times, std::size_t n, const DiagnosticRecord& rec) {
  if (rec.in_sphere) {
    if (!times.n_in_kappa) times.n_in_kappa = n;
  } else if (times.n_in_kappa && !times.n_out) {
    times.n_out = n;
  }
  if (rec.in_target && !times.n_in) times.n_in = n;
  if (!rec.bounded && !times.n_qb) times.n_qb = n;
}

TrialRecord measure(const Eigen::Ref<const Matrix>& u, const CovSpec& cov, std::size_t n,
                    std::uint64_t seed) {
  TrialRecord rec;
  rec.seed = seed;
  rec.n = n;
  rec.has_truth = true;
  const AngleSet angles = principal_angles(u, cov.principal_basis());
  const double s = sin_theta_norm(angles, NormKind::Frobenius);
  rec.sin2F = s * s;
  rec.tanF = tan_theta_norm(angles, NormKind::Frobenius);
  rec.tan2 = tan_theta_norm(angles, NormKind::Spectral);
  if (cov.q) {
    const Matrix v = cov.rotated ? Matrix(cov.rotation.transpose() * u) : Matrix(u);
    try {
      rec.scrTqF = scrT(v, *cov.q).norm();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HeadSingular) throw;
      rec.scrTqF = std::numeric_limits<double>::infinity();
    }
  }
  return rec;
}

RunResult run(OjaState init, SampleSource& source, std::size_t n_steps, const Schedule& schedule,
              const Normalizer& normalizer, const RunOptions& options) {
  if (source.dim() != init.dim()) fail(ErrorCode::BadDims, "run: source dimension differs from state");
  for (std::size_t i = 1; i < options.checkpoints.size(); ++i) {
    if (options.checkpoints[i] <= options.checkpoints[i - 1]) {
      fail(ErrorCode::InvalidArgument, "run: checkpoints must be strictly ascending");
    }
  }

  RunResult out{std::move(init), {}, {}};
  OjaState& state = out.state;
  const CovSpec* truth = source.truth();
  const bool diagnose = options.diagnostics.has_value() && truth != nullptr;

  const std::size_t first = state.n;
  const std::size_t last = state.n + n_steps;
  auto next_ckpt = options.checkpoints.begin();
  while (next_ckpt != options.checkpoints.end() && *next_ckpt < first) ++next_ckpt;

  std::optional<DiagnosticRecord> last_diag;
  auto checkpoint = [&] {
    if (next_ckpt == options.checkpoints.end() || *next_ckpt != state.n) return;
    ++next_ckpt;
    TrialRecord rec;
    if (truth != nullptr) {
      rec = measure(state.basis(), *truth, state.n, options.seed);
    } else {
      rec.seed = options.seed;
      rec.n = state.n;
    }
    rec.flags = last_diag;
    out.records.push_back(rec);
    if (options.on_checkpoint) options.on_checkpoint(state);
  };

  const Eigen::Index d = static_cast<Eigen::Index>(state.dim());
  if (diagnose) {
    last_diag = diagnostics_update(state, Vector(), Vector(), *truth, *options.diagnostics);
    track(out.hits, state.n, *last_diag);
  }
  checkpoint();

  StepWorkspace ws;
  Vector x(d);
  while (state.n < last) {
    if (!source.next(x)) {
      fail(ErrorCode::StreamExhausted, "run: stream ended after " + std::to_string(state.n - first) +
                                           " of " + std::to_string(n_steps) + " samples");
    }
    step_inplace(state, x, schedule.rate(state.n + 1), normalizer, ws);
    if (diagnose) {
      last_diag = diagnostics_update(state, x, ws.z, *truth, *options.diagnostics);
      track(out.hits, state.n, *last_diag);
    }
    checkpoint();
  }
  finalize(state);
  return out;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "cannot open checkpoint file '" + path + "' for writing");
  os << to_json(ckpt).dump(2) << '\n';
  if (!os) fail(ErrorCode::Io, "failed writing checkpoint file '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open checkpoint file '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, "checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace oja
