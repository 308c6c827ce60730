#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "caco/core/error.hpp"
#include "caco/llm/gateway.hpp"

namespace caco::llm {

Gateway::Gateway(PromptLibrary prompts, std::shared_ptr<Backend> backend, GatewayOptions options)
    : prompts_(std::move(prompts)), backend_(std::move(backend)), options_(options) {
  if (options_.max_attempts < 1) options_.max_attempts = 1;
  if (options_.max_in_flight < 1) options_.max_in_flight = 1;
}

std::vector<Message> Gateway::render(Role role, const Bindings& bindings) const {
  return prompts_.render(role, bindings);
}

Gateway::Slot::Slot(Gateway& gateway) : gateway_(gateway) {
  std::unique_lock lock(gateway_.slots_mutex_);
  gateway_.slots_cv_.wait(lock, [&] { return gateway_.in_flight_ < gateway_.options_.max_in_flight; });
  ++gateway_.in_flight_;
}

Gateway::Slot::~Slot() {
  {
    std::lock_guard lock(gateway_.slots_mutex_);
    --gateway_.in_flight_;
  }
  gateway_.slots_cv_.notify_one();
}

Completion Gateway::complete(Role role, const std::vector<Message>& messages, const SamplingParams& params,
                             const std::string& digest, long ordinal) {
  CompletionRequest request{role, messages, params, digest, ordinal};
  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    try {
      Slot slot(*this);
      Completion result = backend_->complete(request);
      result.attempts = attempt;
      return result;
    } catch (const TransientError& e) {
      last_error = e.what();
    }
    if (attempt < options_.max_attempts) {
      double wait = options_.backoff_ms * std::pow(options_.backoff_factor, attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(wait)));
    }
  }
  throw Error(ErrorCode::backend_unavailable,
              std::string(to_string(role)) + " failed after " + std::to_string(options_.max_attempts) +
                  " attempts: " + last_error);
}

Completion Gateway::complete_role(Role role, const Bindings& bindings, long ordinal) {
  return complete(role, render(role, bindings), default_params(role), binding_digest(bindings), ordinal);
}

bool Gateway::judge(Role role, const Bindings& bindings, long ordinal) {
  if (!is_judge(role)) throw Error(ErrorCode::config_error, std::string(to_string(role)) + " is not a judge role");
  SamplingParams params = default_params(role);
  params.temperature = 0.0;
  Completion c = complete(role, render(role, bindings), params, binding_digest(bindings), ordinal);
  return parse_verdict(c.text);
}

bool parse_verdict(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
  std::string word;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i]))) {
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(reply[i++]))));
  }
  if (word == "yes") return true;
  if (word == "no") return false;
  throw Error(ErrorCode::unparseable_verdict, std::string(reply.substr(0, 80)));
}

}  // namespace caco::llm
