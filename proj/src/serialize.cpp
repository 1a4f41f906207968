#include "oja/serialize.hpp"

#include <string>
#include <vector>

namespace oja {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "oja-checkpoint";
constexpr int kCheckpointVersion = 1;

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const Schedule& schedule) {
  return std::visit(
      [](const auto& r) -> json {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRate>) {
          return {{"kind", "constant"}, {"eta", r.eta}};
        } else if constexpr (std::is_same_v<R, HarmonicRate>) {
          return {{"kind", "harmonic"}, {"C_eta", r.c_eta}, {"gamma_ref", r.gamma_ref}};
        } else {
          return {{"kind", "two_phase"}, {"N_o", r.n_o},     {"C_o_prime", r.c_o_prime},
                  {"C_eta", r.c_eta},    {"gamma", r.gamma}, {"d", r.d},
                  {"delta", r.delta}};
        }
      },
      schedule.rule());
}

Schedule schedule_from_json(const json& j) {
  const auto kind = get_field<std::string>(j, "kind");
  if (kind == "constant") return Schedule::constant(get_field<double>(j, "eta"));
  if (kind == "harmonic") {
    return Schedule::harmonic(get_field<double>(j, "C_eta"), get_field<double>(j, "gamma_ref"));
  }
  if (kind == "two_phase") {
    return Schedule::two_phase(get_field<std::size_t>(j, "N_o"), get_field<double>(j, "C_o_prime"),
                               get_field<double>(j, "C_eta"), get_field<double>(j, "gamma"),
                               get_field<std::size_t>(j, "d"), get_field<double>(j, "delta"));
  }
  fail(ErrorCode::ParseError, "unknown schedule kind '" + kind + "'");
}

json to_json(const Normalizer& normalizer) {
  switch (normalizer.kind) {
    case Normalizer::Kind::QR: return {{"kind", "qr"}};
    case Normalizer::Kind::Polar: return {{"kind", "polar"}};
    case Normalizer::Kind::Deferred:
      return {{"kind", "deferred"}, {"period", normalizer.period}, {"guard", normalizer.guard}};
  }
  return {};
}

Normalizer normalizer_from_json(const json& j) {
  const auto kind = get_field<std::string>(j, "kind");
  if (kind == "qr") return Normalizer::qr();
  if (kind == "polar") return Normalizer::polar();
  if (kind == "deferred") {
    const std::size_t period = j.contains("period") ? get_field<std::size_t>(j, "period") : 10;
    const double guard = j.contains("guard") ? get_field<double>(j, "guard") : 0.1;
    return Normalizer::deferred(period, guard);
  }
  fail(ErrorCode::ParseError, "unknown normalizer kind '" + kind + "'");
}

json to_json(const CovSpec& spec) {
  json j{{"lambdas", std::vector<double>(spec.lambdas.data(), spec.lambdas.data() + spec.lambdas.size())},
         {"p", spec.p},
         {"family", std::string(to_string(spec.family))}};
  j["q"] = spec.q ? json(*spec.q) : json(nullptr);
  j["rotation_seed"] = spec.rotation_seed ? json(*spec.rotation_seed) : json(nullptr);
  return j;
}

CovSpec cov_spec_from_json(const json& j) {
  const auto lambdas = get_field<std::vector<double>>(j, "lambdas");
  std::optional<std::size_t> q;
  if (j.contains("q") && !j.at("q").is_null()) q = get_field<std::size_t>(j, "q");
  std::optional<std::uint64_t> rotation_seed;
  if (j.contains("rotation_seed") && !j.at("rotation_seed").is_null()) {
    rotation_seed = get_field<std::uint64_t>(j, "rotation_seed");
  }
  const Family family = j.contains("family") ? family_from_string(get_field<std::string>(j, "family"))
                                             : Family::Gaussian;
  return make_spec(Eigen::Map<const Vector>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size())),
                   get_field<std::size_t>(j, "p"), rotation_seed, family, q);
}

json to_json(const Checkpoint& ckpt) {
  const Matrix& u = ckpt.state.u;
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index k = 0; k < u.cols(); ++k) entries.push_back(u(i, k));
  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"d", u.rows()},
         {"p", u.cols()},
         {"n", ckpt.state.n},
         {"normalized", ckpt.state.normalized},
         {"seed", ckpt.seed},
         {"schedule", to_json(ckpt.schedule)},
         {"normalizer", to_json(ckpt.normalizer)},
         {"U", entries}};
  j["cov"] = ckpt.cov ? to_json(*ckpt.cov) : json(nullptr);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (get_field<std::string>(j, "format") != kCheckpointFormat) {
    fail(ErrorCode::ParseError, "not an oja checkpoint");
  }
  if (get_field<int>(j, "version") != kCheckpointVersion) {
    fail(ErrorCode::ParseError, "unsupported checkpoint version");
  }
  const auto d = get_field<std::size_t>(j, "d");
  const auto p = get_field<std::size_t>(j, "p");
  const auto entries = get_field<std::vector<double>>(j, "U");
  if (entries.size() != d * p) fail(ErrorCode::ParseError, "checkpoint U has wrong entry count");

  Checkpoint ckpt;
  ckpt.state.u.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < p; ++k)
      ckpt.state.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = entries[i * p + k];
  require_finite(ckpt.state.u, "checkpoint U");
  ckpt.state.n = get_field<std::size_t>(j, "n");
  ckpt.state.normalized = get_field<bool>(j, "normalized");
  ckpt.seed = get_field<std::uint64_t>(j, "seed");
  ckpt.schedule = schedule_from_json(j.at("schedule"));
  ckpt.normalizer = normalizer_from_json(j.at("normalizer"));
  if (j.contains("cov") && !j.at("cov").is_null()) ckpt.cov = cov_spec_from_json(j.at("cov"));
  return ckpt;
}

}  // namespace oja
