#include <chrono>
#include <fstream>
#include <thread>

#include "caco/core/error.hpp"
#include "caco/llm/gateway.hpp"

namespace caco::llm {

MockBackend::MockBackend(const nlohmann::json& script) {
  const nlohmann::json& list = script.is_object() ? script.at("entries") : script;
  if (!list.is_array()) throw Error(ErrorCode::config_error, "mock script must be a list of entries");
  for (const auto& item : list) {
    Entry e;
    if (item.contains("role")) {
      e.role = role_from_string(item.at("role").get<std::string>());
      if (!e.role) throw Error(ErrorCode::config_error, "mock script: unknown role " + item.at("role").dump());
    }
    e.digest = item.value("bindings_digest", "");
    e.match = item.value("match", "");
    e.fail_first = item.value("fail_first", 0);
    e.unavailable = item.value("unavailable", false);
    e.delay_ms = item.value("delay_ms", 0);
    for (const auto& r : item.value("replies", nlohmann::json::array())) {
      if (r.is_string()) {
        e.replies.push_back({r.get<std::string>(), false});
      } else {
        e.replies.push_back({r.at("text").get<std::string>(), r.value("truncated", false)});
      }
    }
    if (e.replies.empty() && !e.unavailable) {
      throw Error(ErrorCode::config_error, "mock script entry without replies");
    }
    entries_.push_back(std::move(e));
  }
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot read mock script " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::config_error, "malformed mock script " + path);
  return std::make_shared<MockBackend>(j);
}

MockBackend::Entry* MockBackend::find(const CompletionRequest& request) {
  auto role_ok = [&](const Entry& e) { return !e.role || *e.role == request.role; };
  if (!request.binding_digest.empty()) {
    for (auto& e : entries_) {
      if (role_ok(e) && e.digest == request.binding_digest) return &e;
    }
  }
  std::string text;
  for (const auto& m : request.messages) text += m.content + "\n";
  for (auto& e : entries_) {
    if (role_ok(e) && e.digest.empty() && !e.match.empty() && text.find(e.match) != std::string::npos) {
      return &e;
    }
  }
  for (auto& e : entries_) {
    if (e.role == request.role && e.digest.empty() && e.match.empty()) return &e;
  }
  return nullptr;
}

int MockBackend::calls_for(Role role) const {
  std::lock_guard lock(mutex_);
  auto it = per_role_.find(role);
  return it == per_role_.end() ? 0 : it->second;
}

Completion MockBackend::complete(const CompletionRequest& request) {
  int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};
  ++calls_;

  Reply reply;
  int delay_ms = 0;
  {
    std::lock_guard lock(mutex_);
    ++per_role_[request.role];
    Entry* e = find(request);
    if (!e) {
      throw Error(ErrorCode::backend_unavailable,
                  "mock script has no entry for role " + std::string(to_string(request.role)));
    }
    if (e->unavailable) throw TransientError("scripted outage");
    if (e->failures_so_far < e->fail_first) {
      ++e->failures_so_far;
      throw TransientError("scripted transient failure");
    }
    std::size_t index = static_cast<std::size_t>(request.ordinal < 0 ? 0 : request.ordinal) % e->replies.size();
    reply = e->replies[index];
    delay_ms = e->delay_ms;
  }
  if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  return Completion{reply.text, reply.truncated, 1};
}

}  // namespace caco::llm
