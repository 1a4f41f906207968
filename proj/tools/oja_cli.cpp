// oja: streaming PCA experiment runner.
//
//   oja run --config exp.json
//   oja sweep --config grid.json --out-dir results/
//   oja theory --lambdas 4,3,1,1,1 --p 2
//   oja compare --config exp.json
//   oja ingest-run --config real.json
//   oja export --lambdas 2,1 --p 1 --n 1000 --out samples.bin
//   oja resume --checkpoint state.json --steps 10000
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oja/harness.hpp"
#include "oja/serialize.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

bool is_config_error(oja::ErrorCode code) {
  using oja::ErrorCode;
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::GapViolation:
    case ErrorCode::ThresholdOutOfRange:
      return true;
    default:
      return false;
  }
}

oja::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const oja::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void print_summary(const oja::ExperimentResult& res, std::ostream& os) {
  os << "n,trials,mean,q05,q95,escaped,mean_no_escape\n";
  for (const auto& st : res.stats) {
    os << st.n << ',' << st.trials << ',' << st.mean << ',' << st.q05 << ',' << st.q95 << ',' << st.escaped << ',';
    if (st.mean_no_escape) os << *st.mean_no_escape;
    os << '\n';
  }
  if (res.fit) {
    os << "fit: slope=" << res.fit->slope << " r2=" << res.fit->r_squared;
    if (res.fit->empirical_constant) os << " n*err/phi=" << *res.fit->empirical_constant;
    os << '\n';
  } else if (!res.fit_note.empty()) {
    os << "fit: " << res.fit_note << '\n';
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) oja::fail(oja::ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& config_path, bool quiet) {
  const oja::ExperimentConfig cfg = oja::parse_config(config_path);
  const oja::ExperimentResult res = oja::run_experiment(cfg);
  oja::write_outputs(cfg, res);
  if (!quiet) print_summary(res, std::cout);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  json base;
  try {
    base = json::parse(read_file(config_path));
  } catch (const json::parse_error& e) {
    oja::fail(oja::ErrorCode::ParseError, e.what());
  }
  const std::vector<json> points = oja::expand_grid(base);
  // Validate every point before spending time on any of them.
  std::vector<oja::ExperimentConfig> configs;
  for (const auto& pt : points) {
    configs.push_back(oja::parse_config_text(pt.dump()));
    oja::apply_env_overrides(configs.back());
  }
  fs::create_directories(out_dir);
  json index = json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto& cfg = configs[i];
    const std::string stem = (fs::path(out_dir) / ("point_" + std::to_string(i))).string();
    cfg.output.csv = stem + ".csv";
    cfg.output.json = stem + ".json";
    cfg.output.checkpoint.clear();
    const oja::ExperimentResult res = oja::run_experiment(cfg);
    oja::write_outputs(cfg, res);
    index.push_back({{"point", i}, {"config", points[i]}, {"csv", cfg.output.csv}, {"json", cfg.output.json}});
    std::cout << "point " << i << " done (" << cfg.output.json << ")\n";
  }
  std::ofstream(fs::path(out_dir) / "index.json") << index.dump(2) << '\n';
  return 0;
}

int cmd_theory(const std::vector<double>& lambdas, std::size_t p, std::optional<std::size_t> q,
               std::optional<double> gamma_tilde, std::size_t n, double c) {
  if (q && !gamma_tilde) oja::fail(oja::ErrorCode::ValidationError, "--q needs --gamma-tilde");
  const oja::RateConstants rc = oja::rate_constants(to_vector(lambdas), p, q, gamma_tilde, n, c);
  json out = oja::to_json(rc);
  out["n"] = n;
  out["c"] = c;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_path) {
  const oja::ExperimentConfig cfg = oja::parse_config(config_path);
  const oja::ExperimentResult res = oja::run_experiment(cfg);
  oja::write_outputs(cfg, res);
  const json rows = oja::compare_json(oja::compare_online_offline(cfg, res));
  if (out_path.empty()) {
    std::cout << rows.dump(2) << '\n';
  } else {
    std::ofstream os(out_path);
    if (!os) oja::fail(oja::ErrorCode::Io, "cannot write '" + out_path + "'");
    os << rows.dump(2) << '\n';
  }
  return 0;
}

int cmd_ingest_run(const std::string& config_path) {
  const oja::ExperimentConfig cfg = oja::parse_config(config_path);
  if (!cfg.data) oja::fail(oja::ErrorCode::ValidationError, "ingest-run needs a 'data' section");
  const oja::ExperimentResult res = oja::run_experiment(cfg);
  oja::write_outputs(cfg, res);
  std::cout << "consumed " << res.trials.front().final_state.n << " samples of dimension " << cfg.data->d << '\n';
  return 0;
}

int cmd_export(const std::vector<double>& lambdas, std::size_t p, std::optional<std::uint64_t> rotation_seed,
               const std::string& family, std::uint64_t seed, std::size_t n, const std::string& out,
               const std::string& format) {
  const oja::CovSpec spec =
      oja::make_spec(to_vector(lambdas), p, rotation_seed, oja::family_from_string(family));
  oja::SyntheticStream stream(spec, seed, n);
  oja::StreamFormat fmt = oja::stream_format_from_string(format);
  if (fmt == oja::StreamFormat::Auto) fmt = oja::StreamFormat::Binary;
  const std::size_t rows = oja::export_stream(out, stream, fmt);
  std::cout << "wrote " << rows << " rows to " << out << '\n';
  return 0;
}

int cmd_resume(const std::string& path, std::size_t steps, const std::string& out) {
  oja::Checkpoint ckpt = oja::load_checkpoint(path);
  if (!ckpt.cov) oja::fail(oja::ErrorCode::ValidationError, "checkpoint has no synthetic model to resume from");
  const std::size_t done = ckpt.state.n;
  oja::SyntheticStream stream(*ckpt.cov, ckpt.seed, done + steps);
  stream.skip(done);
  oja::RunOptions opts;
  opts.seed = ckpt.seed;
  opts.checkpoints = {done + steps};
  oja::RunResult rr = oja::run(ckpt.state, stream, steps, ckpt.schedule, ckpt.normalizer, opts);
  const auto& rec = rr.records.back();
  std::cout << "n=" << rec.n << " sin2F=" << rec.sin2F << " tanF=" << rec.tanF << '\n';
  ckpt.state = rr.state;
  oja::save_checkpoint(out.empty() ? path : out, ckpt);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming PCA (Oja) experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("-c,--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_flag("-q,--quiet", quiet, "do not print the per-checkpoint summary");

  std::string out_dir = "sweep_out";
  auto* sweep = app.add_subcommand("sweep", "run every point of a config's \"grid\"");
  sweep->add_option("-c,--config", config_path, "JSON config with a grid object")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--out-dir", out_dir, "directory for per-point CSV/JSON");

  std::vector<double> lambdas;
  std::size_t p = 1;
  std::optional<std::size_t> q;
  std::optional<double> gamma_tilde;
  std::size_t n = 1000;
  double c = 1.0;
  auto* theory = app.add_subcommand("theory", "print rate constants for a spectrum");
  theory->add_option("--lambdas", lambdas, "eigenvalues, descending")->required()->delimiter(',');
  theory->add_option("--p", p, "subspace dimension")->required();
  theory->add_option("--q", q, "gap-free target dimension");
  theory->add_option("--gamma-tilde", gamma_tilde, "gap-free threshold");
  theory->add_option("--n", n, "sample count for the minimax bound");
  theory->add_option("--c", c, "minimax constant");

  std::string out_path;
  auto* compare = app.add_subcommand("compare", "online Oja vs. offline PCA");
  compare->add_option("-c,--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  compare->add_option("-o,--out", out_path, "write the comparison table here instead of stdout");

  auto* ingest = app.add_subcommand("ingest-run", "run on a CSV or binary sample file");
  ingest->add_option("-c,--config", config_path, "JSON config with a data section")->required()->check(CLI::ExistingFile);

  std::optional<std::uint64_t> rotation_seed;
  std::string family = "gaussian";
  std::uint64_t seed = 0;
  std::string format = "binary";
  auto* exp = app.add_subcommand("export", "write a synthetic stream to a file");
  exp->add_option("--lambdas", lambdas, "eigenvalues, descending")->required()->delimiter(',');
  exp->add_option("--p", p, "subspace dimension")->required();
  exp->add_option("--rotation-seed", rotation_seed, "draw a random rotation");
  exp->add_option("--family", family, "gaussian | rademacher | uniform_ball");
  exp->add_option("--seed", seed, "stream seed");
  exp->add_option("--n", n, "number of samples")->required();
  exp->add_option("-o,--out", out_path, "output file")->required();
  exp->add_option("--format", format, "binary | csv");

  std::string ckpt_path;
  std::size_t steps = 0;
  auto* resume = app.add_subcommand("resume", "continue a synthetic run from a checkpoint");
  resume->add_option("--checkpoint", ckpt_path, "checkpoint JSON")->required()->check(CLI::ExistingFile);
  resume->add_option("--steps", steps, "additional samples")->required();
  resume->add_option("-o,--out", out_path, "where to save the new checkpoint (default: overwrite)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, quiet);
    if (*sweep) return cmd_sweep(config_path, out_dir);
    if (*theory) return cmd_theory(lambdas, p, q, gamma_tilde, n, c);
    if (*compare) return cmd_compare(config_path, out_path);
    if (*ingest) return cmd_ingest_run(config_path);
    if (*exp) return cmd_export(lambdas, p, rotation_seed, family, seed, n, out_path, format);
    if (*resume) return cmd_resume(ckpt_path, steps, out_path);
  } catch (const oja::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
