#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pal/pipeline.hpp"

namespace pal {

// JSON <-> config structs. Keys mirror the struct field names; unknown keys
// are rejected with a ConfigError naming the key.

nlohmann::json benchmark_config_to_json(const BenchmarkConfig& cfg);
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j);

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// Canonical serialized form (2-space indent, sorted object keys as emitted by
// the JSON library). Reports echo exactly this text.
std::string pipeline_config_to_text(const PipelineConfig& cfg);

PipelineConfig load_pipeline_config(const std::string& path);

// Applies a dotted-path override, e.g. "wls.sigma=0.7". The value is parsed
// as a JSON literal when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& dotted_key,
                    const std::string& value);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace pal
