#pragma once

#include <string>

#include "tod/activeloop.hpp"

namespace tod {

inline constexpr const char* kToolVersion = "todlab 0.1.0";

// Parses the JSON experiment configuration. Every field is optional and
// falls back to its default; unknown keys are rejected with a field-level
// message so typos in sweep configs fail loudly.
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& where);

ExperimentConfig load_experiment_config(const std::string& path);

// Canonical serialization (all fields, sorted keys). Parsing it back yields
// an equal configuration object.
std::string serialize_experiment_config(const ExperimentConfig& config);

}  // namespace tod
