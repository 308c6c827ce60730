#include "caco/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>

#include "caco/core/error.hpp"

namespace caco::pipeline {

using nlohmann::json;

json default_config() {
  sandbox::ExecLimits limits;
  llm::HttpOptions http;
  llm::GatewayOptions gateway;
  SamplingParams codegen = llm::default_params(llm::Role::codegen);
  return json{
      {"run_dir", "runs"},
      {"run_id", "default"},
      {"seeds", ""},
      {"prompts", ""},
      {"n_samples", 0},
      {"k_reverse", 1},
      {"chunk_size", 1000},
      {"workers", 4},
      {"timestamp", nullptr},
      {"min_lines", 6},
      {"rel_tol", 1e-6},
      {"solve_rate_max", 0.3},
      {"executor",
       {{"interpreter", "python3"},
        {"flags", {"-I", "-B"}},
        {"timeout_ms", limits.wall_ms},
        {"memory_bytes", limits.memory_bytes},
        {"max_stdout_bytes", limits.max_stdout_bytes},
        {"isolate_network", false},
        {"tmp_root", ""},
        {"shim", ""}}},
      {"sampling",
       {{"temperature", codegen.temperature},
        {"top_p", codegen.top_p},
        {"top_k", codegen.top_k},
        {"min_p", codegen.min_p},
        {"max_tokens", codegen.max_tokens}}},
      {"backend",
       {{"kind", "http"},
        {"mock_script", ""},
        {"endpoint", http.endpoint},
        {"path", http.path},
        {"api_key", ""},
        {"model", http.default_model},
        {"models", json::object()},
        {"timeout_ms", http.timeout_ms}}},
      {"gateway",
       {{"max_attempts", gateway.max_attempts},
        {"backoff_ms", gateway.backoff_ms},
        {"backoff_factor", gateway.backoff_factor},
        {"max_in_flight", gateway.max_in_flight}}},
  };
}

namespace {

std::string env_name(const std::string& dotted) {
  std::string name = "CACO_";
  for (char c : dotted) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

void collect_leaves(const json& node, const std::string& prefix, std::map<std::string, std::string>& out) {
  for (const auto& [key, value] : node.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object() && key != "models") {
      collect_leaves(value, path, out);
    } else {
      out[env_name(path)] = path;
    }
  }
}

void check_known(const json& given, const json& defaults, const std::string& prefix) {
  for (const auto& [key, value] : given.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) throw Error(ErrorCode::config_error, "unknown key " + path);
    if (value.is_object() && defaults[key].is_object() && key != "models") check_known(value, defaults[key], path);
  }
}

template <typename T>
T get(const json& config, const char* path) {
  const json* node = &config;
  std::string p = path;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = p.find('.', start);
    node = &node->at(p.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::config_error, std::string(path) + " has the wrong type");
  }
}

}  // namespace

void apply_env_overrides(json& config, char** envp) {
  if (!envp) return;
  std::map<std::string, std::string> leaves;
  collect_leaves(default_config(), "", leaves);
  for (char** e = envp; *e; ++e) {
    const char* eq = std::strchr(*e, '=');
    if (!eq) continue;
    auto it = leaves.find(std::string(*e, static_cast<std::size_t>(eq - *e)));
    if (it == leaves.end()) continue;
    std::string text = eq + 1;
    std::string pointer = "/" + it->second;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    json::json_pointer target(pointer);
    json value = json::parse(text, nullptr, false);
    // String-valued keys take the text verbatim, so "123" stays a string.
    if (value.is_discarded() || (config.contains(target) && config[target].is_string())) value = text;
    config[target] = value;
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot read config " + path);
  json given = json::parse(in, nullptr, false);
  if (given.is_discarded() || !given.is_object()) throw Error(ErrorCode::config_error, path + " is not a JSON object");
  json config = default_config();
  check_known(given, config, "");
  config.merge_patch(given);
  return config;
}

PipelineConfig config_from_json(const json& config) {
  PipelineConfig c;
  try {
    c.run.run_dir = get<std::string>(config, "run_dir");
    c.run.run_id = get<std::string>(config, "run_id");
    c.run.seeds_path = get<std::string>(config, "seeds");
    c.run.n_samples = get<int>(config, "n_samples");
    c.run.k_reverse = get<int>(config, "k_reverse");
    c.run.chunk_size = get<std::size_t>(config, "chunk_size");
    c.run.workers = get<int>(config, "workers");
    if (!config.at("timestamp").is_null()) c.run.fixed_timestamp = get<std::string>(config, "timestamp");

    c.stage.min_lines = get<int>(config, "min_lines");
    c.stage.rel_tol = get<double>(config, "rel_tol");
    if (!config.at("solve_rate_max").is_null()) c.stage.solve_rate_max = get<double>(config, "solve_rate_max");
    else c.stage.solve_rate_max.reset();

    c.stage.executor.interpreter = get<std::string>(config, "executor.interpreter");
    c.stage.executor.interpreter_flags = get<std::vector<std::string>>(config, "executor.flags");
    c.stage.executor.shim_path = get<std::string>(config, "executor.shim");
    c.stage.executor.tmp_root = get<std::string>(config, "executor.tmp_root");
    c.stage.executor.isolate_network = get<bool>(config, "executor.isolate_network");
    c.stage.limits.wall_ms = get<long long>(config, "executor.timeout_ms");
    c.stage.limits.memory_bytes = get<std::size_t>(config, "executor.memory_bytes");
    c.stage.limits.max_stdout_bytes = get<std::size_t>(config, "executor.max_stdout_bytes");

    c.stage.codegen_params.temperature = get<double>(config, "sampling.temperature");
    c.stage.codegen_params.top_p = get<double>(config, "sampling.top_p");
    c.stage.codegen_params.top_k = get<int>(config, "sampling.top_k");
    c.stage.codegen_params.min_p = get<double>(config, "sampling.min_p");
    c.stage.codegen_params.max_tokens = get<int>(config, "sampling.max_tokens");

    c.prompts_dir = get<std::string>(config, "prompts");
    c.backend_kind = get<std::string>(config, "backend.kind");
    c.mock_script = get<std::string>(config, "backend.mock_script");
    c.http.endpoint = get<std::string>(config, "backend.endpoint");
    c.http.path = get<std::string>(config, "backend.path");
    c.http.api_key = get<std::string>(config, "backend.api_key");
    c.http.default_model = get<std::string>(config, "backend.model");
    c.http.models = get<std::map<std::string, std::string>>(config, "backend.models");
    c.http.timeout_ms = get<int>(config, "backend.timeout_ms");

    c.gateway.max_attempts = get<int>(config, "gateway.max_attempts");
    c.gateway.backoff_ms = get<int>(config, "gateway.backoff_ms");
    c.gateway.backoff_factor = get<double>(config, "gateway.backoff_factor");
    c.gateway.max_in_flight = get<int>(config, "gateway.max_in_flight");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, e.what());
  }

  if (c.backend_kind != "mock" && c.backend_kind != "http") {
    throw Error(ErrorCode::config_error, "backend.kind must be mock or http");
  }
  if (c.backend_kind == "mock" && c.mock_script.empty()) {
    throw Error(ErrorCode::config_error, "backend.mock_script is required for the mock backend");
  }
  if (!c.stage.limits.valid()) throw Error(ErrorCode::config_error, "executor limits must be positive");
  if (!c.stage.codegen_params.valid()) throw Error(ErrorCode::config_error, "sampling parameters out of range");
  if (c.stage.min_lines < 0 || c.stage.rel_tol < 0) throw Error(ErrorCode::config_error, "negative threshold");
  if (c.run.workers < 1) throw Error(ErrorCode::config_error, "workers must be at least 1");
  if (c.gateway.max_attempts < 1 || c.gateway.max_in_flight < 1) {
    throw Error(ErrorCode::config_error, "gateway bounds must be at least 1");
  }
  for (const auto& [role, model] : c.http.models) {
    if (!llm::role_from_string(role)) throw Error(ErrorCode::config_error, "unknown role " + role);
  }
  return c;
}

std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& config) {
  std::string dir = config.prompts_dir.empty() ? llm::default_prompt_dir() : config.prompts_dir;
  llm::PromptLibrary prompts = llm::PromptLibrary::load(dir);
  std::shared_ptr<llm::Backend> backend;
  if (config.backend_kind == "mock") {
    backend = llm::MockBackend::from_file(config.mock_script);
  } else {
    backend = std::make_shared<llm::HttpBackend>(config.http);
  }
  return std::make_unique<llm::Gateway>(std::move(prompts), std::move(backend), config.gateway);
}

}  // namespace caco::pipeline
