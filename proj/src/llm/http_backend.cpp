#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "caco/core/error.hpp"
#include "caco/llm/gateway.hpp"

namespace caco::llm {

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {}

Completion HttpBackend::complete(const CompletionRequest& request) {
  nlohmann::json body;
  auto model = options_.models.find(std::string(to_string(request.role)));
  body["model"] = model != options_.models.end() ? model->second : options_.default_model;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const SamplingParams& p = request.params;
  body["temperature"] = p.temperature;
  body["top_p"] = p.top_p;
  if (p.top_k > 0) body["top_k"] = p.top_k;
  body["min_p"] = p.min_p;
  body["max_tokens"] = p.max_tokens;
  body["n"] = 1;

  httplib::Client client(options_.endpoint);
  auto timeout = std::chrono::milliseconds(options_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto res = client.Post(options_.path, headers,
                         body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                         "application/json");
  if (!res) throw TransientError("transport: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::backend_unavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
    throw TransientError("malformed completion response");
  }
  const auto& choice = reply["choices"][0];
  Completion c;
  const auto& message = choice.value("message", nlohmann::json::object());
  c.text = message.value("content", nlohmann::json("")).is_string() ? message.value("content", "") : "";
  c.truncated = choice.value("finish_reason", nlohmann::json("")).is_string() &&
                choice.value("finish_reason", "") == "length";
  return c;
}

}  // namespace caco::llm
