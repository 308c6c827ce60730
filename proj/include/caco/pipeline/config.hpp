#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "caco/llm/gateway.hpp"
#include "caco/pipeline/runner.hpp"

namespace caco::pipeline {

/// Lineage timestamp used for offline (mock) runs so outputs are reproducible.
inline constexpr const char* kFixedTimestamp = "1970-01-01T00:00:00Z";

/// Every recognised key with its default value.
nlohmann::json default_config();

/// Overrides leaves of `config` from CACO_<PATH> variables, where PATH is the
/// dotted key path upper-cased with dots as underscores (backend.api_key ->
/// CACO_BACKEND_API_KEY). Values that parse as JSON are taken as JSON,
/// anything else as a string.
void apply_env_overrides(nlohmann::json& config, char** envp);

/// Defaults merged with the file contents. Throws Error(config_error) for an
/// unreadable file, invalid JSON or an unknown key.
nlohmann::json load_config_file(const std::string& path);

struct PipelineConfig {
  RunConfig run;
  StageContext stage;  // gateway left null
  std::string prompts_dir;
  std::string backend_kind;  // "mock" or "http"
  std::string mock_script;
  llm::HttpOptions http;
  llm::GatewayOptions gateway;
};

/// Throws Error(config_error) on wrong types or out-of-range values.
PipelineConfig config_from_json(const nlohmann::json& config);

/// Builds the gateway the config describes.
std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& config);

}  // namespace caco::pipeline
