#pragma once

// JSON views of the library types. Ion indices are 1-based in every external format.

#include "iongate/crystal.hpp"
#include "iongate/gate_physics.hpp"
#include "iongate/optimizer.hpp"
#include "iongate/oracle.hpp"
#include "iongate/scan.hpp"

#include <json.hpp>

namespace iongate {

nlohmann::json to_json(const Crystal& crystal);
nlohmann::json to_json(const GateOutcome& outcome);
nlohmann::json to_json(const OptimizeResult& result);
nlohmann::json to_json(const OracleReport& report);
nlohmann::json to_json(const SweepSpec& spec);

/// Overlays the fields present in `config` onto `base`. Unknown keys are
/// rejected so that typos do not silently fall back to defaults.
SweepSpec sweep_spec_from_json(const nlohmann::json& config, SweepSpec base = {});

}  // namespace iongate
