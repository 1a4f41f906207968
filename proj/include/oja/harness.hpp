#pragma once

// Experiment runner: configuration, repeated seeded trials, aggregation,
// rate fitting, online-vs-offline comparison and CSV/JSON output.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oja/engine.hpp"
#include "oja/stream_io.hpp"
#include "oja/theory.hpp"

namespace oja {

/// Tunable constants; none of them is fixed by the underlying analysis.
struct Constants {
  double c_eta = 2.0;
  double c_o_prime = 1.0;
  double c_o = 1.0;
  double c = 1.0;      // minimax constant
  double c_r = 10.0;   // remainder constant of the envelope
  double mu = 9.0;     // truncation level
  double kappa = 1.0;
  double delta = 0.1;
  double epsilon = 0.1;
  double psi4 = 16.0;  // psi^4 proxy used for the envelope's H scale (16 psi^4)
};

struct DataFile {
  std::string path;
  std::size_t d = 0;
  StreamFormat format = StreamFormat::Auto;
};

struct OutputPaths {
  std::string csv;
  std::string json;
  std::string checkpoint;  // final iterate of the first trial
};

struct ExperimentConfig {
  std::optional<CovSpec> spec;  // synthetic mode
  std::optional<DataFile> data; // ingestion mode
  std::size_t p = 1;
  std::optional<std::size_t> q;
  std::optional<double> gamma_tilde;
  Schedule schedule;
  Normalizer normalizer;
  std::size_t n_steps = 0;
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 0;
  std::vector<std::size_t> checkpoints;
  OutputPaths output;
  Constants constants;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool diagnostics = false;
  nlohmann::json echo;      // the config as read, for the JSON summary

  bool gap_free() const noexcept { return q.has_value(); }
  std::size_t dim() const;
};

/// Parses JSON text. Unknown keys are rejected; defaults are filled in.
/// Throws ParseError (with line/column) or ValidationError.
ExperimentConfig parse_config_text(const std::string& text);

/// Reads a file, then applies OJA_SEED / OJA_THREADS environment overrides.
ExperimentConfig parse_config(const std::string& path);

/// OJA_SEED replaces base_seed, OJA_THREADS replaces threads.
void apply_env_overrides(ExperimentConfig& config);

/// Powers of two below n_steps plus n_steps itself ({0} when n_steps == 0).
std::vector<std::size_t> geometric_checkpoints(std::size_t n_steps);

struct CheckpointStats {
  std::size_t n = 0;
  std::size_t trials = 0;
  double mean = 0.0;  // mean primary error (sin2F, or scrTqF^2 in gap-free mode)
  double q05 = 0.0;
  double q95 = 0.0;
  double mean_sin2F = 0.0;
  double mean_tanF = 0.0;
  double mean_tan2 = 0.0;
  std::optional<double> mean_scrTqF2;
  std::size_t escaped = 0;  // trials whose iterate left S(kappa) by this step
  // Diagnostics only: mean primary error over the trials that never escape
  // S(kappa) during the whole run, and how many such trials there are.
  std::optional<double> mean_no_escape;
  std::size_t no_escape_trials = 0;
};

struct TheoryOverlay {
  std::size_t n = 0;
  double phi_over_n = 0.0;
  double minimax = 0.0;
  std::optional<double> envelope;  // Sum of the Hadamard envelope plus remainder
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> empirical_constant;  // n_last * err_last / phi
  std::vector<std::size_t> used;
};

struct TrialSummary {
  std::uint64_t seed = 0;
  HittingTimes hits;
  OjaState final_state;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;  // ordered by seed, then n
  std::vector<TrialSummary> trials;
  std::vector<CheckpointStats> stats;
  std::vector<TheoryOverlay> theory;
  std::optional<RateConstants> constants;
  std::optional<FitResult> fit;
  std::string fit_note;
};

/// Primary error of a record: ||sin Theta||_F^2, or ||T_q||_F^2 in gap-free mode.
double primary_error(const TrialRecord& rec, bool gap_free);

/// Runs every trial (seeds base_seed .. base_seed + R - 1) and aggregates.
/// Deterministic given the config, independent of the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Least squares on (ln n, ln err). Throws TooFewPoints (< 3 points) or
/// NonPositiveError.
FitResult fit_rate(const std::vector<std::size_t>& ns, const std::vector<double>& errors,
                   std::optional<double> phi = std::nullopt);

/// Aggregation rule shared by run_experiment and its oracle test.
CheckpointStats aggregate(std::size_t n, const std::vector<TrialRecord>& at_n, bool gap_free);

struct CompareRow {
  std::size_t n = 0;
  double online = 0.0;
  double offline = 0.0;
  std::optional<double> ratio;  // NA when both errors vanish
  double minimax = 0.0;
};

/// online/offline, or NA when the offline error is zero.
std::optional<double> online_offline_ratio(double online, double offline);

/// Per checkpoint: mean Oja error at step n vs. mean offline-PCA error on an
/// independent fresh batch of n samples per trial.
std::vector<CompareRow> compare_online_offline(const ExperimentConfig& config);
std::vector<CompareRow> compare_online_offline(const ExperimentConfig& config, const ExperimentResult& online);

// Output --------------------------------------------------------------------

void write_csv(std::ostream& os, const std::vector<TrialRecord>& records);
nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);
nlohmann::json compare_json(const std::vector<CompareRow>& rows);
nlohmann::json to_json(const RateConstants& rc);

/// Writes CSV / JSON / checkpoint files named in config.output.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

/// Expands a "grid" object of dotted keys to value lists into one config
/// per point of the Cartesian product.
std::vector<nlohmann::json> expand_grid(const nlohmann::json& base);

/// Runs `count` jobs over up to `threads` workers; jobs are indexed so the
/// caller can store results by index. The first failure (lowest index) is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

}  // namespace oja
