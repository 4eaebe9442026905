#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fedcca/orchestrator.hpp"

namespace fedcca {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Strict parse: unknown keys are rejected by name, absent keys take the
// documented defaults, and the client_domain_map default (contiguous equal
// blocks over the domain list) is resolved here so the config is explicit.
ExperimentConfig parse_config_json(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

// Fully-resolved canonical form; parse(config_to_json(c)) round-trips.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Named ablation variants: full, no_selection, no_attention_aggregation.
AblationVariant ablation_from_name(const std::string& name);
std::string ablation_name(const AblationVariant& variant);

}  // namespace fedcca
