#include <cctype>
#include <fstream>
#include <sstream>

#include "caco/core/error.hpp"
#include "caco/core/hash.hpp"
#include "caco/llm/gateway.hpp"

namespace caco::llm {

namespace {

constexpr std::string_view kRoleNames[] = {"unifier-math",      "unifier-algo",   "codegen",
                                           "reverser",          "solver",         "judge-consistency",
                                           "judge-solvable",    "judge-correct"};

bool is_identifier(std::string_view text) {
  if (text.empty() || std::isdigit(static_cast<unsigned char>(text[0]))) return false;
  for (char c : text) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

// Calls on_text for literal runs and on_field for each placeholder, in order.
template <typename OnText, typename OnField>
void scan_template(std::string_view body, OnText on_text, OnField on_field) {
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
      on_text(std::string_view(&body[i], 1));
      i += 2;
      continue;
    }
    if (c == '{') {
      std::size_t close = body.find('}', i + 1);
      if (close != std::string_view::npos) {
        std::string_view name = body.substr(i + 1, close - i - 1);
        if (is_identifier(name)) {
          on_field(name);
          i = close + 1;
          continue;
        }
      }
    }
    on_text(body.substr(i, 1));
    ++i;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::unknown_template, "cannot read prompt asset " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Role role) { return kRoleNames[static_cast<int>(role)]; }

std::optional<Role> role_from_string(std::string_view text) {
  for (Role role : kAllRoles) {
    if (to_string(role) == text) return role;
  }
  return std::nullopt;
}

bool is_judge(Role role) {
  return role == Role::judge_consistency || role == Role::judge_solvable || role == Role::judge_correct;
}

SamplingParams default_params(Role role) {
  SamplingParams p;
  switch (role) {
    case Role::codegen:
      p.temperature = 0.9;
      p.max_tokens = 1024;
      break;
    case Role::reverser:
    case Role::solver:
      p.temperature = 0.7;
      p.top_p = 0.8;
      p.top_k = 20;
      p.min_p = 0.0;
      break;
    case Role::unifier_math:
    case Role::unifier_algo:
      p.temperature = 0.6;
      break;
    case Role::judge_consistency:
    case Role::judge_solvable:
    case Role::judge_correct:
      p.temperature = 0.0;
      p.max_tokens = 16;
      break;
  }
  return p;
}

std::set<std::string> placeholders_of(std::string_view body) {
  std::set<std::string> names;
  scan_template(body, [](std::string_view) {}, [&](std::string_view name) { names.emplace(name); });
  return names;
}

std::string substitute(std::string_view body, const Bindings& bindings) {
  std::string out;
  scan_template(
      body, [&](std::string_view text) { out += text; },
      [&](std::string_view name) {
        auto it = bindings.find(std::string(name));
        if (it == bindings.end()) throw Error(ErrorCode::missing_placeholder, std::string(name));
        out += it->second;
      });
  return out;
}

std::string binding_digest(const Bindings& bindings) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : bindings) j[k] = v;
  return sha256_hex(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

std::vector<Message> PromptTemplate::render(const Bindings& bindings) const {
  for (const auto& name : placeholders) {
    if (!bindings.count(name)) throw Error(ErrorCode::missing_placeholder, name);
  }
  std::vector<Message> out;
  for (const auto& m : messages) out.push_back({m.role, substitute(m.content, bindings)});
  return out;
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
  std::string manifest_path = dir + "/manifest.json";
  auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw Error(ErrorCode::unknown_template, "malformed " + manifest_path);
  }
  const nlohmann::json checksums = manifest.value("sha256", nlohmann::json::object());
  const nlohmann::json templates = manifest.value("templates", nlohmann::json::object());
  const nlohmann::json roles = manifest.value("roles", nlohmann::json::object());

  PromptLibrary lib;
  for (const auto& [id, spec] : templates.items()) {
    if (!spec.contains("messages")) throw Error(ErrorCode::unknown_template, id + " has no messages");
    PromptTemplate t;
    t.id = id;
    for (const auto& m : spec.at("messages")) {
      std::string file = m.at("file").get<std::string>();
      std::string body = read_file(dir + "/" + file);
      auto expected = checksums.find(file);
      if (expected == checksums.end() || expected->get<std::string>() != sha256_hex(body)) {
        throw Error(ErrorCode::prompt_checksum, file);
      }
      auto names = placeholders_of(body);
      t.placeholders.insert(names.begin(), names.end());
      t.messages.push_back({m.at("role").get<std::string>(), std::move(body)});
    }
    lib.templates_[id] = std::move(t);
  }
  for (const auto& [role_name, id] : roles.items()) {
    auto role = role_from_string(role_name);
    if (!role) throw Error(ErrorCode::unknown_template, "unknown role " + role_name);
    std::string template_id = id.get<std::string>();
    if (!lib.templates_.count(template_id)) throw Error(ErrorCode::unknown_template, template_id);
    lib.roles_[*role] = template_id;
  }
  for (Role role : kAllRoles) {
    if (!lib.roles_.count(role)) {
      throw Error(ErrorCode::unknown_template, "no template for role " + std::string(to_string(role)));
    }
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(ErrorCode::unknown_template, id);
  return it->second;
}

const PromptTemplate& PromptLibrary::for_role(Role role) const { return get(roles_.at(role)); }

std::vector<Message> PromptLibrary::render(Role role, const Bindings& bindings) const {
  return for_role(role).render(bindings);
}

std::string default_prompt_dir() {
  if (const char* env = std::getenv("CACO_PROMPTS"); env && *env) return env;
  return CACO_SOURCE_PROMPT_DIR;
}

}  // namespace caco::llm
