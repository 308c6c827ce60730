#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "caco/core/types.hpp"

namespace caco::llm {

enum class Role {
  unifier_math,
  unifier_algo,
  codegen,
  reverser,
  solver,
  judge_consistency,
  judge_solvable,
  judge_correct,
};

inline constexpr Role kAllRoles[] = {Role::unifier_math,      Role::unifier_algo,
                                     Role::codegen,           Role::reverser,
                                     Role::solver,            Role::judge_consistency,
                                     Role::judge_solvable,    Role::judge_correct};

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view text);
bool is_judge(Role role);

/// Sampling defaults per role: codegen T=0.9 with 1024 tokens; reverser and
/// solver T=0.7, top_p 0.8, top_k 20, min_p 0; unifiers T=0.6; judges T=0.
SamplingParams default_params(Role role);

struct Message {
  std::string role;  // "system" or "user"
  std::string content;
  friend bool operator==(const Message&, const Message&) = default;
};

using Bindings = std::map<std::string, std::string>;

/// Placeholder names in a template body. `{name}` is a placeholder when name
/// is an identifier; `{{` and `}}` stand for literal braces; any other brace
/// is literal text.
std::set<std::string> placeholders_of(std::string_view body);

/// Substitutes placeholders verbatim. Throws Error(missing_placeholder)
/// naming the first unbound key.
std::string substitute(std::string_view body, const Bindings& bindings);

/// SHA-256 over the canonical JSON of the bindings.
std::string binding_digest(const Bindings& bindings);

struct PromptTemplate {
  std::string id;
  std::vector<Message> messages;  // content holds the unrendered body
  std::set<std::string> placeholders;

  std::vector<Message> render(const Bindings& bindings) const;
};

class PromptLibrary {
 public:
  /// Reads manifest.json from `dir`, verifies every asset checksum and the
  /// role table. Throws Error(prompt_checksum) on a mismatch and
  /// Error(unknown_template) on a dangling reference.
  static PromptLibrary load(const std::string& dir);

  const PromptTemplate& get(const std::string& id) const;
  const PromptTemplate& for_role(Role role) const;
  std::vector<Message> render(Role role, const Bindings& bindings) const;

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::map<Role, std::string> roles_;
};

/// $CACO_PROMPTS when set, else the prompts/ directory of the source tree.
std::string default_prompt_dir();

struct CompletionRequest {
  Role role = Role::codegen;
  std::vector<Message> messages;
  SamplingParams params;
  std::string binding_digest;
  long ordinal = 0;  // caller-chosen index, lets scripted backends stay order-independent
};

struct Completion {
  std::string text;
  bool truncated = false;  // backend stopped on the length limit
  int attempts = 1;
};

/// Thrown by backends for failures worth retrying (transport errors,
/// 429/5xx responses, scripted flakiness).
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Replays a JSON script. Entries:
///   {"role": "solver", "bindings_digest": "...", "match": "substring",
///    "replies": ["text", {"text": "...", "truncated": true}],
///    "fail_first": 2, "unavailable": false, "delay_ms": 0}
/// Lookup order: digest, then substring of the rendered messages, then the
/// role's default entry (no digest, no match). Replies are picked by
/// request ordinal modulo their count.
class MockBackend : public Backend {
 public:
  explicit MockBackend(const nlohmann::json& script);
  static std::shared_ptr<MockBackend> from_file(const std::string& path);

  Completion complete(const CompletionRequest& request) override;

  int calls() const { return calls_.load(); }
  int calls_for(Role role) const;
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  struct Reply {
    std::string text;
    bool truncated = false;
  };
  struct Entry {
    std::optional<Role> role;
    std::string digest;
    std::string match;
    std::vector<Reply> replies;
    int fail_first = 0;
    bool unavailable = false;
    int delay_ms = 0;
    int failures_so_far = 0;
  };

  Entry* find(const CompletionRequest& request);

  std::vector<Entry> entries_;
  mutable std::mutex mutex_;
  std::map<Role, int> per_role_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

struct HttpOptions {
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string default_model = "default";
  std::map<std::string, std::string> models;  // role name -> model
  int timeout_ms = 120000;
};

/// Chat-completions client: POSTs {model, messages, temperature, top_p,
/// top_k, min_p, max_tokens} and reads choices[0].message.content.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions options);
  Completion complete(const CompletionRequest& request) override;

 private:
  HttpOptions options_;
};

struct GatewayOptions {
  int max_attempts = 4;
  int backoff_ms = 200;
  double backoff_factor = 2.0;
  int max_in_flight = 8;
};

class Gateway {
 public:
  Gateway(PromptLibrary prompts, std::shared_ptr<Backend> backend, GatewayOptions options = {});

  std::vector<Message> render(Role role, const Bindings& bindings) const;

  /// Sends one request, retrying transient failures with exponential
  /// backoff. Throws Error(backend_unavailable) once attempts run out.
  Completion complete(Role role, const std::vector<Message>& messages, const SamplingParams& params,
                      const std::string& digest = {}, long ordinal = 0);

  /// Renders the role's template and completes it with the role defaults.
  Completion complete_role(Role role, const Bindings& bindings, long ordinal = 0);

  /// Yes/No judge at temperature 0. Throws Error(unparseable_verdict) when
  /// the first alphabetic token is neither yes nor no.
  bool judge(Role role, const Bindings& bindings, long ordinal = 0);

  const PromptLibrary& prompts() const { return prompts_; }

 private:
  // Holds one of the max_in_flight request slots.
  class Slot {
   public:
    explicit Slot(Gateway& gateway);
    ~Slot();
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    Gateway& gateway_;
  };

  PromptLibrary prompts_;
  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;
};

/// Parses the first alphabetic token of a judge reply.
/// Throws Error(unparseable_verdict) unless it is yes or no (any case).
bool parse_verdict(std::string_view reply);

}  // namespace caco::llm
