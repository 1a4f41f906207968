#pragma once

// JSON forms of the engine's descriptors. Doubles are written with enough
// digits to round-trip exactly.

#include <json.hpp>

#include "oja/engine.hpp"
#include "oja/sampler.hpp"

namespace oja {

nlohmann::json to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Normalizer& normalizer);
Normalizer normalizer_from_json(const nlohmann::json& j);

/// Descriptor only: eigenvalues, p, q, rotation seed and family. The rotation
/// itself is regenerated from its seed.
nlohmann::json to_json(const CovSpec& spec);
CovSpec cov_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace oja
