#include "oja/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "oja/serialize.hpp"
#include "oja/subspace.hpp"

namespace oja {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::ValidationError, what); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(where + "." + key + " has the wrong type");
  }
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

std::uint64_t parse_env_u64(const char* name) {
  const char* raw = std::getenv(name);
  std::uint64_t v = 0;
  const std::string_view s(raw);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) invalid(std::string(name) + " must be a non-negative integer");
  return v;
}

Constants parse_constants(const json& j) {
  reject_unknown(j, {"C_eta", "C_o_prime", "C_o", "c", "C_R", "mu", "kappa", "delta", "epsilon", "psi4"}, "constants");
  Constants c;
  c.c_eta = field_or(j, "C_eta", c.c_eta, "constants");
  c.c_o_prime = field_or(j, "C_o_prime", c.c_o_prime, "constants");
  c.c_o = field_or(j, "C_o", c.c_o, "constants");
  c.c = field_or(j, "c", c.c, "constants");
  c.c_r = field_or(j, "C_R", c.c_r, "constants");
  c.mu = field_or(j, "mu", c.mu, "constants");
  c.kappa = field_or(j, "kappa", c.kappa, "constants");
  c.delta = field_or(j, "delta", c.delta, "constants");
  c.epsilon = field_or(j, "epsilon", c.epsilon, "constants");
  c.psi4 = field_or(j, "psi4", c.psi4, "constants");
  if (!(c.delta > 0.0 && c.delta < 1.0)) invalid("constants.delta must lie in (0, 1)");
  if (!(c.mu >= 1.0)) invalid("constants.mu must be >= 1");
  if (!(c.kappa >= 0.0) || !(c.epsilon >= 0.0)) invalid("constants.kappa and constants.epsilon must be >= 0");
  return c;
}

/// The gap the schedules are keyed on: gamma, or gamma_tilde in gap-free mode.
std::optional<double> reference_gap(const ExperimentConfig& cfg) {
  if (cfg.gamma_tilde) return cfg.gamma_tilde;
  if (cfg.spec) return cfg.spec->gap();
  return std::nullopt;
}

Schedule parse_schedule(const json& j, const ExperimentConfig& cfg) {
  reject_unknown(j, {"kind", "eta", "C_eta", "gamma_ref", "N_o", "C_o_prime", "gamma", "delta", "B"}, "schedule");
  const auto kind = field_or<std::string>(j, "kind", "harmonic", "schedule");
  const std::optional<double> gap = reference_gap(cfg);
  try {
    if (kind == "constant") {
      if (!j.contains("eta")) invalid("schedule.eta is required for a constant schedule");
      return Schedule::constant(field<double>(j, "eta", "schedule"));
    }
    if (kind == "harmonic") {
      const double c_eta = field_or(j, "C_eta", cfg.constants.c_eta, "schedule");
      if (!j.contains("gamma_ref") && !gap) invalid("schedule.gamma_ref is required without a spectrum");
      return Schedule::harmonic(c_eta, j.contains("gamma_ref") ? field<double>(j, "gamma_ref", "schedule") : *gap);
    }
    if (kind == "two_phase") {
      const double c_eta = field_or(j, "C_eta", cfg.constants.c_eta, "schedule");
      const double c_o_prime = field_or(j, "C_o_prime", cfg.constants.c_o_prime, "schedule");
      const double delta = field_or(j, "delta", cfg.constants.delta, "schedule");
      if (!j.contains("gamma") && !gap) invalid("schedule.gamma is required without a spectrum");
      const double gamma = j.contains("gamma") ? field<double>(j, "gamma", "schedule") : *gap;
      const std::size_t d = cfg.dim();
      std::size_t n_o = 0;
      if (j.contains("N_o")) {
        n_o = field<std::size_t>(j, "N_o", "schedule");
      } else {
        double b = 0.0;
        if (j.contains("B")) {
          b = field<double>(j, "B", "schedule");
        } else if (cfg.spec) {
          b = cfg.spec->lambda_sum(1, d) * cfg.constants.mu;
        } else {
          invalid("schedule.N_o or schedule.B is required without a spectrum");
        }
        n_o = N_o_formula(cfg.p, b, delta, gamma, d, cfg.constants.c_o);
      }
      return Schedule::two_phase(n_o, c_o_prime, c_eta, gamma, d, delta);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError) throw;
    invalid(std::string("schedule: ") + e.what());
  }
  invalid("unknown schedule.kind '" + kind + "'");
}

Normalizer parse_normalizer(const json& j) {
  reject_unknown(j, {"kind", "period", "guard"}, "normalizer");
  const auto kind = field_or<std::string>(j, "kind", "qr", "normalizer");
  try {
    if (kind == "qr") return Normalizer::qr();
    if (kind == "polar") return Normalizer::polar();
    if (kind == "deferred") {
      return Normalizer::deferred(field_or<std::size_t>(j, "period", 10, "normalizer"),
                                  field_or(j, "guard", 0.1, "normalizer"));
    }
  } catch (const Error& e) {
    invalid(std::string("normalizer: ") + e.what());
  }
  invalid("unknown normalizer.kind '" + kind + "'");
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json nullable(const std::optional<double>& v) { return v ? nullable(*v) : json(nullptr); }
json nullable(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (!std::isfinite(values[hi])) return values[hi];
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t schedule_burn_in(const Schedule& s) {
  if (const auto* tp = std::get_if<TwoPhaseRate>(&s.rule())) return tp->n_o;
  return 0;
}

/// Chart coordinates measured for the envelope overlay: T_q in gap-free
/// mode, T otherwise, in rotated coordinates. Empty when undefined.
std::optional<Matrix> chart_square(const OjaState& state, const CovSpec& spec) {
  const Matrix v = spec.rotated ? Matrix(spec.rotation.transpose() * state.u) : state.u;
  try {
    const Matrix t = scrT(v, spec.target_dim());
    return t.cwiseProduct(t);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HeadSingular) throw;
    return std::nullopt;
  }
}

}  // namespace

std::size_t ExperimentConfig::dim() const {
  if (spec) return spec->dim();
  if (data) return data->d;
  return 0;
}

std::vector<std::size_t> geometric_checkpoints(std::size_t n_steps) {
  if (n_steps == 0) return {0};
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n < n_steps; n *= 2) out.push_back(n);
  out.push_back(n_steps);
  return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C".
    fail(ErrorCode::ParseError, e.what());
  }
  reject_unknown(j,
                 {"lambdas", "family", "rotation_seed", "data", "p", "q", "gamma_tilde", "schedule", "normalizer",
                  "n_steps", "R", "base_seed", "checkpoints", "output", "constants", "threads", "diagnostics"},
                 "config");

  ExperimentConfig cfg;
  cfg.echo = j;
  if (j.contains("constants")) cfg.constants = parse_constants(j.at("constants"));

  if (!j.contains("p")) invalid("config.p is required");
  cfg.p = field<std::size_t>(j, "p", "config");
  if (cfg.p < 1) invalid("config.p must be >= 1");
  if (j.contains("q")) cfg.q = field<std::size_t>(j, "q", "config");
  if (j.contains("gamma_tilde")) cfg.gamma_tilde = field<double>(j, "gamma_tilde", "config");
  if (cfg.q && *cfg.q < cfg.p) invalid("gap-free mode requires q >= p");
  if (cfg.q && !cfg.gamma_tilde) invalid("gap-free mode requires gamma_tilde");

  const bool has_lambdas = j.contains("lambdas");
  const bool has_data = j.contains("data");
  if (has_lambdas == has_data) invalid("exactly one of 'lambdas' (synthetic) or 'data' (file) is required");

  if (has_lambdas) {
    const auto lambdas = field<std::vector<double>>(j, "lambdas", "config");
    const Vector lv = Eigen::Map<const Vector>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
    std::optional<std::uint64_t> rotation_seed;
    if (j.contains("rotation_seed")) rotation_seed = field<std::uint64_t>(j, "rotation_seed", "config");
    Family family = Family::Gaussian;
    try {
      if (j.contains("family")) family = family_from_string(field<std::string>(j, "family", "config"));
      cfg.spec = make_spec(lv, cfg.p, rotation_seed, family, cfg.q);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::GapViolation) {
        invalid("zero eigengap lambda_p == lambda_{p+1}: set a gap-free target q with gamma_tilde");
      }
      invalid(std::string("spectrum: ") + e.what());
    }
    if (cfg.q && !gamma_tilde_admissible(lv, cfg.p, *cfg.q, *cfg.gamma_tilde)) {
      invalid("gamma_tilde must satisfy lambda_p - lambda_q < gamma_tilde <= lambda_p - lambda_{q+1}");
    }
  } else {
    const json& dj = j.at("data");
    reject_unknown(dj, {"path", "d", "format"}, "data");
    DataFile df;
    df.path = field<std::string>(dj, "path", "data");
    df.d = field<std::size_t>(dj, "d", "data");
    try {
      df.format = stream_format_from_string(field_or<std::string>(dj, "format", "auto", "data"));
    } catch (const Error& e) {
      invalid(e.what());
    }
    if (df.d < 2 || cfg.p >= df.d) invalid("data.d must exceed p");
    if (cfg.q) invalid("gap-free mode needs a synthetic spectrum");
    cfg.data = df;
  }

  cfg.schedule = parse_schedule(j.value("schedule", json::object()), cfg);
  cfg.normalizer = parse_normalizer(j.value("normalizer", json::object()));

  if (!j.contains("n_steps")) invalid("config.n_steps is required");
  cfg.n_steps = field<std::size_t>(j, "n_steps", "config");
  cfg.repetitions = field_or<std::size_t>(j, "R", 1, "config");
  if (cfg.repetitions < 1) invalid("R must be >= 1");
  cfg.base_seed = field_or<std::uint64_t>(j, "base_seed", 0, "config");
  cfg.threads = field_or<std::size_t>(j, "threads", 0, "config");
  cfg.diagnostics = field_or(j, "diagnostics", false, "config");

  if (j.contains("checkpoints") && !(j.at("checkpoints").is_string() && j.at("checkpoints") == "geometric")) {
    cfg.checkpoints = field<std::vector<std::size_t>>(j, "checkpoints", "config");
    if (cfg.checkpoints.empty()) invalid("checkpoints must not be empty");
    for (std::size_t i = 1; i < cfg.checkpoints.size(); ++i) {
      if (cfg.checkpoints[i] <= cfg.checkpoints[i - 1]) invalid("checkpoints must be strictly ascending");
    }
    if (cfg.checkpoints.back() != cfg.n_steps) invalid("the last checkpoint must equal n_steps");
  } else {
    cfg.checkpoints = geometric_checkpoints(cfg.n_steps);
  }

  if (j.contains("output")) {
    const json& oj = j.at("output");
    reject_unknown(oj, {"csv", "json", "checkpoint"}, "output");
    cfg.output.csv = field_or<std::string>(oj, "csv", "", "output");
    cfg.output.json = field_or<std::string>(oj, "json", "", "output");
    cfg.output.checkpoint = field_or<std::string>(oj, "checkpoint", "", "output");
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  ExperimentConfig cfg = parse_config_text(buf.str());
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (std::getenv("OJA_SEED")) cfg.base_seed = parse_env_u64("OJA_SEED");
  if (std::getenv("OJA_THREADS")) cfg.threads = static_cast<std::size_t>(parse_env_u64("OJA_THREADS"));
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double primary_error(const TrialRecord& rec, bool gap_free) {
  if (gap_free) {
    const double t = rec.scrTqF.value_or(std::numeric_limits<double>::infinity());
    return t * t;
  }
  return rec.sin2F;
}

CheckpointStats aggregate(std::size_t n, const std::vector<TrialRecord>& at_n, bool gap_free) {
  CheckpointStats st;
  st.n = n;
  st.trials = at_n.size();
  if (at_n.empty()) return st;
  std::vector<double> primary;
  double sin_acc = 0.0, tanf_acc = 0.0, tan2_acc = 0.0, scrt_acc = 0.0;
  bool any_scrt = false;
  for (const auto& r : at_n) {
    primary.push_back(primary_error(r, gap_free));
    sin_acc += r.sin2F;
    tanf_acc += r.tanF;
    tan2_acc += r.tan2;
    if (r.scrTqF) {
      any_scrt = true;
      scrt_acc += *r.scrTqF * *r.scrTqF;
    }
  }
  const double count = static_cast<double>(at_n.size());
  double acc = 0.0;
  for (double v : primary) acc += v;
  st.mean = acc / count;
  st.q05 = quantile(primary, 0.05);
  st.q95 = quantile(primary, 0.95);
  st.mean_sin2F = sin_acc / count;
  st.mean_tanF = tanf_acc / count;
  st.mean_tan2 = tan2_acc / count;
  if (any_scrt) st.mean_scrTqF2 = scrt_acc / count;
  return st;
}

FitResult fit_rate(const std::vector<std::size_t>& ns, const std::vector<double>& errors, std::optional<double> phi) {
  if (ns.size() != errors.size()) fail(ErrorCode::InvalidArgument, "fit_rate: length mismatch");
  if (ns.size() < 3) fail(ErrorCode::TooFewPoints, "fit_rate: need at least 3 checkpoints");
  const auto m = static_cast<double>(ns.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) fail(ErrorCode::InvalidArgument, "fit_rate: checkpoints must be >= 1");
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
      fail(ErrorCode::NonPositiveError, "fit_rate: error at n=" + std::to_string(ns[i]) + " is not positive and finite");
    }
    xs.push_back(std::log(static_cast<double>(ns[i])));
    ys.push_back(std::log(errors[i]));
    sx += xs.back();
    sy += ys.back();
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::TooFewPoints, "fit_rate: checkpoints must not all coincide");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.used = ns;
  if (phi && *phi > 0.0) fit.empirical_constant = static_cast<double>(ns.back()) * errors.back() / *phi;
  return fit;
}

namespace {

struct TrialOutput {
  std::vector<TrialRecord> records;
  TrialSummary summary;
  std::vector<std::optional<Matrix>> squares;  // per checkpoint, synthetic mode
};

TrialOutput run_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::unique_ptr<SampleSource> source;
  if (cfg.spec) {
    source = std::make_unique<SyntheticStream>(*cfg.spec, seed, cfg.n_steps);
  } else {
    source = ingest_stream(cfg.data->path, cfg.data->d, cfg.data->format);
  }
  TrialOutput out;
  RunOptions opts;
  opts.checkpoints = cfg.checkpoints;
  opts.seed = seed;
  if (cfg.diagnostics) opts.diagnostics = DiagnosticsConfig{cfg.constants.mu, cfg.constants.kappa, cfg.constants.epsilon};
  if (cfg.spec) {
    opts.on_checkpoint = [&](const OjaState& s) { out.squares.push_back(chart_square(s, *cfg.spec)); };
  }
  RunResult rr = run(init_state(cfg.dim(), cfg.p, seed), *source, cfg.n_steps, cfg.schedule, cfg.normalizer, opts);
  out.records = std::move(rr.records);
  out.summary = TrialSummary{seed, rr.hits, std::move(rr.state)};
  return out;
}

void write_partial(const ExperimentConfig& cfg, const std::vector<std::optional<TrialOutput>>& done) {
  if (cfg.output.csv.empty()) return;
  std::vector<TrialRecord> records;
  for (const auto& t : done)
    if (t) records.insert(records.end(), t->records.begin(), t->records.end());
  std::ofstream os(cfg.output.csv);
  if (os) write_csv(os, records);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::size_t trials = cfg.repetitions;
  std::vector<std::optional<TrialOutput>> outputs(trials);
  try {
    parallel_for(trials, cfg.threads, [&](std::size_t i) { outputs[i] = run_trial(cfg, cfg.base_seed + i); });
  } catch (...) {
    write_partial(cfg, outputs);
    throw;
  }

  ExperimentResult res;
  const bool gap_free = cfg.gap_free();
  for (auto& t : outputs) {
    res.records.insert(res.records.end(), t->records.begin(), t->records.end());
    res.trials.push_back(std::move(t->summary));
  }

  // Per-checkpoint aggregation.
  const std::size_t n_ckpt = outputs.front()->records.size();
  for (std::size_t k = 0; k < n_ckpt; ++k) {
    std::vector<TrialRecord> at_n;
    for (const auto& t : outputs) at_n.push_back(t->records[k]);
    CheckpointStats st = aggregate(at_n.front().n, at_n, gap_free);
    if (cfg.diagnostics && cfg.spec) {
      double acc = 0.0;
      for (std::size_t i = 0; i < res.trials.size(); ++i) {
        const auto& hits = res.trials[i].hits;
        if (hits.n_out && *hits.n_out <= st.n) ++st.escaped;
        if (!hits.n_out) {
          acc += primary_error(at_n[i], gap_free);
          ++st.no_escape_trials;
        }
      }
      if (st.no_escape_trials > 0) st.mean_no_escape = acc / static_cast<double>(st.no_escape_trials);
    }
    res.stats.push_back(st);
  }

  if (!cfg.spec) return res;

  // Theory overlays.
  const CovSpec& spec = *cfg.spec;
  const Vector& lambdas = spec.lambdas;
  const std::size_t target = spec.target_dim();
  const std::optional<std::size_t> n_out_q = gap_free ? cfg.q : std::nullopt;
  res.constants = rate_constants(lambdas, cfg.p, n_out_q, cfg.gamma_tilde, std::max<std::size_t>(cfg.n_steps, 1),
                                 cfg.constants.c);
  const double phi_value = res.constants->phi;

  const std::size_t burn = schedule_burn_in(cfg.schedule);
  std::optional<std::size_t> start_k;
  for (std::size_t k = 0; k < n_ckpt; ++k) {
    if (res.stats[k].n >= burn) {
      start_k = k;
      break;
    }
  }
  std::optional<Matrix> moment;
  std::size_t moment_n = 0;
  if (start_k) {
    Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(spec.dim() - target), static_cast<Eigen::Index>(cfg.p));
    std::size_t used = 0;
    for (const auto& t : outputs) {
      const auto& sq = t->squares[*start_k];
      if (sq && sq->allFinite()) {
        acc += *sq;
        ++used;
      }
    }
    if (used > 0) {
      moment = acc / static_cast<double>(used);
      moment_n = res.stats[*start_k].n;
    }
  }

  const double h_scale = 16.0 * cfg.constants.psi4;
  for (std::size_t k = 0; k < n_ckpt; ++k) {
    TheoryOverlay ov;
    ov.n = res.stats[k].n;
    if (ov.n >= 1) {
      ov.phi_over_n = phi_value / static_cast<double>(ov.n);
      ov.minimax = minimax_lower_bound(lambdas, cfg.p, target, ov.n, cfg.constants.c).value;
    } else {
      ov.phi_over_n = std::numeric_limits<double>::infinity();
      ov.minimax = std::numeric_limits<double>::infinity();
    }
    if (moment && ov.n >= moment_n && ov.n >= 1) {
      *moment = hadamard_bound_from(lambdas, cfg.p, cfg.schedule, h_scale, moment_n, ov.n, *moment, n_out_q);
      moment_n = ov.n;
      const double eps = burn > 0 ? static_cast<double>(burn) / static_cast<double>(ov.n) : cfg.constants.epsilon;
      const double r = remainder_term(cfg.constants.c_r, eps, ov.n, spec.dim(), cfg.constants.delta);
      ov.envelope = moment->sum() + r * static_cast<double>(moment->size());
    }
    res.theory.push_back(ov);
  }

  // Rate fit past the burn-in.
  std::optional<std::size_t> n1;
  for (const auto& st : res.stats) {
    if (st.n >= 1 && st.mean < 0.5) {
      n1 = st.n;
      break;
    }
  }
  if (!n1) {
    res.fit_note = "mean error never dropped below 0.5; no fit";
    return res;
  }
  std::vector<std::size_t> ns;
  std::vector<double> errs;
  for (const auto& st : res.stats) {
    if (st.n >= 4 * *n1 && st.n > burn) {
      ns.push_back(st.n);
      errs.push_back(st.mean);
    }
  }
  try {
    res.fit = fit_rate(ns, errs, phi_value);
  } catch (const Error& e) {
    res.fit_note = e.what();
  }
  return res;
}

std::optional<double> online_offline_ratio(double online, double offline) {
  if (!(offline > 1e-300) || !std::isfinite(offline) || !std::isfinite(online)) return std::nullopt;
  return online / offline;
}

std::vector<CompareRow> compare_online_offline(const ExperimentConfig& cfg) {
  return compare_online_offline(cfg, run_experiment(cfg));
}

std::vector<CompareRow> compare_online_offline(const ExperimentConfig& cfg, const ExperimentResult& online) {
  if (!cfg.spec) fail(ErrorCode::ValidationError, "compare needs a synthetic spectrum");
  const CovSpec& spec = *cfg.spec;
  const bool gap_free = cfg.gap_free();
  std::vector<std::size_t> ns;
  for (const auto& st : online.stats)
    if (st.n >= 1) ns.push_back(st.n);

  // offline[i][k]: trial i, checkpoint k
  std::vector<std::vector<double>> offline(cfg.repetitions, std::vector<double>(ns.size()));
  parallel_for(cfg.repetitions, cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = cfg.base_seed + i;
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const std::size_t n = ns[k];
      const Matrix batch = draw_samples(spec, mix64(seed) ^ static_cast<std::uint64_t>(n), n, rng_domain::kOfflineBatch);
      const OfflinePca pca = offline_pca(batch, cfg.p);
      offline[i][k] = primary_error(measure(pca.basis, spec, n, seed), gap_free);
    }
  });

  std::vector<CompareRow> rows;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    CompareRow row;
    row.n = ns[k];
    for (const auto& st : online.stats)
      if (st.n == row.n) row.online = st.mean;
    double acc = 0.0;
    for (std::size_t i = 0; i < cfg.repetitions; ++i) acc += offline[i][k];
    row.offline = acc / static_cast<double>(cfg.repetitions);
    row.ratio = online_offline_ratio(row.online, row.offline);
    row.minimax = minimax_lower_bound(spec.lambdas, cfg.p, spec.target_dim(), row.n, cfg.constants.c).value;
    rows.push_back(row);
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << "trial_seed,n,sin2F,tanF,tan2,scrTqF,flags\r\n";
  for (const auto& r : records) {
    std::string flags;
    if (r.flags) {
      std::vector<std::string> tokens;
      if (r.flags->in_sphere) tokens.emplace_back("in_sphere");
      if (r.flags->in_target) tokens.emplace_back("in_target");
      if (!r.flags->bounded) tokens.emplace_back("qb");
      for (std::size_t i = 0; i < tokens.size(); ++i) flags += (i ? "|" : "") + tokens[i];
    }
    os << r.seed << ',' << r.n << ',';
    if (r.has_truth) {
      os << format_double(r.sin2F) << ',' << format_double(r.tanF) << ',' << format_double(r.tan2) << ',';
    } else {
      os << ",,,";
    }
    os << (r.scrTqF ? format_double(*r.scrTqF) : "") << ',' << csv_quote(flags) << "\r\n";
  }
}

json to_json(const RateConstants& rc) {
  return {{"gamma", rc.gamma},          {"gamma_tilde", nullable(rc.gamma_tilde)},
          {"phi", rc.phi},              {"phi_upper", rc.phi_upper},
          {"minimax", rc.minimax},      {"sigma_star_sq", rc.sigma_star_sq}};
}

json summary_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  json j;
  j["config"] = cfg.echo;
  j["resolved"] = {{"schedule", to_json(cfg.schedule)},
                   {"normalizer", to_json(cfg.normalizer)},
                   {"checkpoints", cfg.checkpoints},
                   {"base_seed", cfg.base_seed},
                   {"R", cfg.repetitions}};
  json stats = json::array();
  for (const auto& st : res.stats) {
    stats.push_back({{"n", st.n},
                     {"trials", st.trials},
                     {"mean", nullable(st.mean)},
                     {"q05", nullable(st.q05)},
                     {"q95", nullable(st.q95)},
                     {"mean_sin2F", nullable(st.mean_sin2F)},
                     {"mean_tanF", nullable(st.mean_tanF)},
                     {"mean_tan2", nullable(st.mean_tan2)},
                     {"mean_scrTqF2", nullable(st.mean_scrTqF2)},
                     {"escaped", st.escaped},
                     {"mean_no_escape", nullable(st.mean_no_escape)},
                     {"no_escape_trials", st.no_escape_trials}});
  }
  j["checkpoints"] = stats;
  json theory = json::array();
  for (const auto& ov : res.theory) {
    theory.push_back({{"n", ov.n},
                      {"phi_over_n", nullable(ov.phi_over_n)},
                      {"minimax", nullable(ov.minimax)},
                      {"envelope", nullable(ov.envelope)}});
  }
  j["theory"] = theory;
  j["rate_constants"] = res.constants ? to_json(*res.constants) : json(nullptr);
  if (res.fit) {
    j["fit"] = {{"slope", res.fit->slope},
                {"intercept", res.fit->intercept},
                {"r_squared", res.fit->r_squared},
                {"empirical_constant", nullable(res.fit->empirical_constant)},
                {"checkpoints", res.fit->used}};
  } else {
    j["fit"] = nullptr;
    j["fit_note"] = res.fit_note;
  }
  json trials = json::array();
  for (const auto& t : res.trials) {
    trials.push_back({{"seed", t.seed},
                      {"n_in_kappa", nullable(t.hits.n_in_kappa)},
                      {"n_out", nullable(t.hits.n_out)},
                      {"n_in", nullable(t.hits.n_in)},
                      {"n_qb", nullable(t.hits.n_qb)}});
  }
  j["trials"] = trials;
  return j;
}

json compare_json(const std::vector<CompareRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"n", r.n},
                   {"online", nullable(r.online)},
                   {"offline", nullable(r.offline)},
                   {"ratio", nullable(r.ratio)},
                   {"minimax", nullable(r.minimax)}});
  }
  return arr;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  if (!cfg.output.csv.empty()) {
    std::ofstream os(cfg.output.csv, std::ios::binary);
    if (!os) fail(ErrorCode::Io, "cannot write '" + cfg.output.csv + "'");
    write_csv(os, res.records);
  }
  if (!cfg.output.json.empty()) {
    std::ofstream os(cfg.output.json);
    if (!os) fail(ErrorCode::Io, "cannot write '" + cfg.output.json + "'");
    os << summary_json(cfg, res).dump(2) << '\n';
  }
  if (!cfg.output.checkpoint.empty() && !res.trials.empty()) {
    Checkpoint ckpt;
    ckpt.state = res.trials.front().final_state;
    ckpt.schedule = cfg.schedule;
    ckpt.normalizer = cfg.normalizer;
    ckpt.seed = res.trials.front().seed;
    ckpt.cov = cfg.spec;
    save_checkpoint(cfg.output.checkpoint, ckpt);
  }
}

std::vector<json> expand_grid(const json& base) {
  if (!base.contains("grid")) return {base};
  const json& grid = base.at("grid");
  if (!grid.is_object()) invalid("grid must be an object of dotted keys to value lists");
  std::vector<json> points{base};
  points.front().erase("grid");
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) invalid("grid." + key + " must be a non-empty list");
    std::vector<json> next;
    for (const auto& pt : points) {
      for (const auto& v : values) {
        json copy = pt;
        std::string path = "/";
        for (char ch : key) path += (ch == '.') ? '/' : ch;
        copy[json::json_pointer(path)] = v;
        next.push_back(std::move(copy));
      }
    }
    points = std::move(next);
  }
  return points;
}

}  // namespace oja
