#include "caco/validator/validator.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "caco/core/error.hpp"
#include "caco/validator/python_ast.hpp"

namespace caco::validator {

namespace {

using py::Expr;
using py::ExprKind;
using py::Module;
using py::Stmt;
using py::StmtKind;

// Statements executed at module level: everything outside def/class bodies.
void collect_module_scope(const std::vector<py::StmtPtr>& body, std::vector<const Stmt*>& out) {
  for (const auto& s : body) {
    out.push_back(s.get());
    if (s->kind == StmtKind::function_def || s->kind == StmtKind::class_def) continue;
    collect_module_scope(s->body, out);
    collect_module_scope(s->orelse, out);
    collect_module_scope(s->finalbody, out);
    for (const auto& h : s->handlers) collect_module_scope(h.body, out);
    for (const auto& c : s->cases) collect_module_scope(c.body, out);
  }
}

bool is_name(const Expr* e, std::string_view name) {
  return e && e->kind == ExprKind::name && e->text == name;
}

bool assigns_to(const Stmt& s, std::string_view name) {
  if (s.kind != StmtKind::assign && s.kind != StmtKind::ann_assign) return false;
  if (s.kind == StmtKind::ann_assign && !s.value) return false;
  return std::any_of(s.targets.begin(), s.targets.end(),
                     [&](const py::ExprPtr& t) { return is_name(t.get(), name); });
}

bool is_string_constant(const Expr* e) {
  return e && e->kind == ExprKind::string && !e->is_bytes && e->items.empty();
}

struct InputMapping {
  bool present = false;
  std::string problem;  // why the last `input` binding is not a usable mapping
  std::vector<std::string> keys;
};

InputMapping find_input_mapping(const std::vector<const Stmt*>& scope) {
  const Stmt* last = nullptr;
  for (const Stmt* s : scope) {
    if (assigns_to(*s, "input")) last = s;
  }
  InputMapping mapping;
  if (!last) {
    mapping.problem = "no module-level assignment to 'input'";
    return mapping;
  }
  const Expr& value = *last->value;
  if (value.kind != ExprKind::dict) {
    mapping.problem = "'input' is not bound to a dict literal";
    return mapping;
  }
  for (std::size_t i = 0; i + 1 < value.items.size(); i += 2) {
    const Expr* key = value.items[i].get();
    if (!is_string_constant(key)) {
      mapping.problem = "'input' keys must be string literals";
      mapping.keys.clear();
      return mapping;
    }
    if (std::find(mapping.keys.begin(), mapping.keys.end(), key->str_value) == mapping.keys.end()) {
      mapping.keys.push_back(key->str_value);
    }
  }
  mapping.present = true;
  return mapping;
}

bool spreads_input(const Expr& call) {
  return std::any_of(call.keywords.begin(), call.keywords.end(), [](const py::Keyword& kw) {
    return !kw.arg && is_name(kw.value.get(), "input");
  });
}

std::string callee_text(const Expr& callee) {
  if (callee.kind == ExprKind::name) return callee.text;
  if (callee.kind == ExprKind::attribute && callee.items[0]) {
    std::string base = callee_text(*callee.items[0]);
    return base.empty() ? std::string() : base + "." + callee.text;
  }
  return {};
}

struct OutputBinding {
  bool assigned = false;
  const Expr* call = nullptr;  // the `**input` call bound to output, if any
};

OutputBinding find_output_binding(const std::vector<const Stmt*>& scope) {
  OutputBinding binding;
  for (const Stmt* s : scope) {
    if (!assigns_to(*s, "output")) continue;
    binding.assigned = true;
    const Expr& value = *s->value;
    if (value.kind == ExprKind::call && spreads_input(value) && !callee_text(*value.items[0]).empty()) {
      binding.call = &value;
    }
  }
  return binding;
}

bool has_print_of_output(const std::vector<const Stmt*>& scope) {
  for (const Stmt* s : scope) {
    if (s->kind != StmtKind::expr || !s->value || s->value->kind != ExprKind::call) continue;
    const Expr& call = *s->value;
    if (is_name(call.items[0].get(), "print") && call.items.size() == 2 && call.keywords.empty() &&
        is_name(call.items[1].get(), "output")) {
      return true;
    }
  }
  return false;
}

// Definition of the called function: a module-level def for a plain name,
// or a method of a module-level class for an attribute callee.
const Stmt* find_callee(const std::vector<const Stmt*>& scope, const Expr& callee, bool& is_method) {
  is_method = false;
  const Stmt* found = nullptr;
  if (callee.kind == ExprKind::name) {
    for (const Stmt* s : scope) {
      if (s->kind == StmtKind::function_def && s->name == callee.text) found = s;
    }
    return found;
  }
  if (callee.kind != ExprKind::attribute) return nullptr;
  for (const Stmt* s : scope) {
    if (s->kind != StmtKind::class_def) continue;
    for (const auto& member : s->body) {
      if (member->kind == StmtKind::function_def && member->name == callee.text) {
        found = member.get();
        is_method = true;
      }
    }
  }
  return found;
}

std::set<std::string> names_in_body(const Stmt& def) {
  std::set<std::string> names;
  for (const auto& s : def.body) {
    py::walk(*s, [&](const Expr& e) {
      if (e.kind == ExprKind::name) names.insert(e.text);
    });
    py::walk_statements(*s, [&](const Stmt& inner) {
      for (const auto& n : inner.names) names.insert(n);
    });
  }
  return names;
}

// Keys read explicitly as input["k"] or input.get("k") outside assignment targets.
std::set<std::string> keys_read_from_input(const Module& module) {
  std::set<std::string> keys;
  auto visit = [&](const Expr& e) {
    if (e.kind == ExprKind::subscript && is_name(e.items[0].get(), "input") &&
        is_string_constant(e.items[1].get())) {
      keys.insert(e.items[1]->str_value);
    }
    if (e.kind == ExprKind::call && e.items[0]->kind == ExprKind::attribute &&
        e.items[0]->text == "get" && is_name(e.items[0]->items[0].get(), "input") &&
        e.items.size() >= 2 && is_string_constant(e.items[1].get())) {
      keys.insert(e.items[1]->str_value);
    }
  };
  for (const auto& top : module.body) {
    py::walk_statements(*top, [&](const Stmt& s) {
      bool skip_targets = s.kind == StmtKind::assign || s.kind == StmtKind::ann_assign ||
                          s.kind == StmtKind::delete_;
      if (!skip_targets) {
        for (const auto& t : s.targets) {
          if (t) py::walk(*t, visit);
        }
      }
      if (s.value) py::walk(*s.value, visit);
      if (s.annotation) py::walk(*s.annotation, visit);
      for (const auto& e : s.exprs) py::walk(*e, visit);
      for (const auto& e : s.decorators) py::walk(*e, visit);
      for (const auto& kw : s.keywords) py::walk(*kw.value, visit);
      for (const auto& p : s.params) {
        if (p.default_value) py::walk(*p.default_value, visit);
      }
      for (const auto& h : s.handlers) {
        if (h.type) py::walk(*h.type, visit);
      }
      for (const auto& c : s.cases) {
        if (c.guard) py::walk(*c.guard, visit);
      }
    });
  }
  return keys;
}

struct Analysis {
  StructuralFacts facts;
  InputMapping mapping;
  bool output_assigned = false;
  std::vector<std::string> unused;
};

Analysis analyze(const Module& module, std::string_view source) {
  std::vector<const Stmt*> scope;
  collect_module_scope(module.body, scope);

  Analysis a;
  a.mapping = find_input_mapping(scope);
  a.facts.input_keys = a.mapping.keys;
  OutputBinding binding = find_output_binding(scope);
  a.output_assigned = binding.assigned;
  if (binding.call) a.facts.called_function = callee_text(*binding.call->items[0]);
  a.facts.has_output_print = has_print_of_output(scope);
  a.facts.noncomment_lines = count_noncomment_lines(source);

  if (!a.mapping.present || a.mapping.keys.empty()) return a;

  const Stmt* def = nullptr;
  bool is_method = false;
  if (binding.call) def = find_callee(scope, *binding.call->items[0], is_method);

  std::set<std::string> body_names;
  std::set<std::string> named_params;
  std::optional<std::string> var_keyword;
  if (def) {
    body_names = names_in_body(*def);
    bool skip_first = is_method && !def->params.empty() &&
                      def->params[0].kind != py::ParamKind::keyword_only &&
                      std::none_of(def->decorators.begin(), def->decorators.end(),
                                   [](const py::ExprPtr& d) { return is_name(d.get(), "staticmethod"); });
    for (std::size_t i = skip_first ? 1 : 0; i < def->params.size(); ++i) {
      const py::Param& p = def->params[i];
      if (p.kind == py::ParamKind::normal || p.kind == py::ParamKind::keyword_only) {
        named_params.insert(p.name);
      } else if (p.kind == py::ParamKind::var_keyword) {
        var_keyword = p.name;
      }
    }
  }
  std::set<std::string> read_keys = keys_read_from_input(module);

  for (const auto& key : a.mapping.keys) {
    bool used = false;
    if (named_params.count(key)) {
      used = body_names.count(key) > 0;
    } else if (var_keyword) {
      used = body_names.count(*var_keyword) > 0;
    }
    if (!used) used = read_keys.count(key) > 0;
    if (!used) a.unused.push_back(key);
  }
  return a;
}

Module parse_or_throw(const std::string& source) { return py::parse_module(source); }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

}  // namespace

int count_noncomment_lines(std::string_view source) {
  enum class State { code, short_string, long_string };
  State state = State::code;
  char quote = 0;
  int count = 0;
  bool has_code = false;
  auto end_line = [&] {
    if (has_code) ++count;
    has_code = false;
    if (state == State::short_string) state = State::code;
  };
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\f' || c == '\v'; };

  for (std::size_t i = 0; i < source.size(); ++i) {
    char c = source[i];
    if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < source.size() && source[i + 1] == '\n') ++i;
      end_line();
      continue;
    }
    if (is_space(c)) continue;
    switch (state) {
      case State::code:
        if (c == '#') {
          while (i + 1 < source.size() && source[i + 1] != '\n' && source[i + 1] != '\r') ++i;
          continue;
        }
        has_code = true;
        if (c == '\'' || c == '"') {
          quote = c;
          if (source.substr(i, 3) == std::string(3, c)) {
            state = State::long_string;
            i += 2;
          } else {
            state = State::short_string;
          }
        }
        break;
      case State::short_string:
      case State::long_string:
        has_code = true;
        if (c == '\\') {
          // An escaped newline is still a line break for counting purposes.
          if (i + 1 < source.size() && source[i + 1] != '\n' && source[i + 1] != '\r') ++i;
        } else if (c == quote) {
          if (state == State::short_string) {
            state = State::code;
          } else if (source.substr(i, 3) == std::string(3, quote)) {
            state = State::code;
            i += 2;
          }
        }
        break;
    }
  }
  if (has_code) ++count;
  return count;
}

StructuralFacts parse_structure(const std::string& source) {
  Module module = parse_or_throw(source);
  return analyze(module, source).facts;
}

std::vector<std::string> unused_input_keys(const std::string& source) {
  Module module = parse_or_throw(source);
  return analyze(module, source).unused;
}

ValidationReport validate(const std::string& source, int min_lines) {
  ValidationReport report;
  auto add = [&](CheckId id, bool passed, std::string detail) {
    report.checks.push_back(CheckResult{id, passed, std::move(detail)});
  };

  std::optional<Module> module;
  std::string syntax_detail;
  try {
    module = py::parse_module(source);
  } catch (const Error& e) {
    syntax_detail = e.what();
  }

  int lines = count_noncomment_lines(source);
  std::string lines_detail = std::to_string(lines) + " non-comment lines, need " + std::to_string(min_lines);

  if (!module) {
    add(CheckId::syntax_ok, false, syntax_detail);
    add(CheckId::has_input_mapping, false, "not evaluated");
    add(CheckId::calls_with_input, false, "not evaluated");
    add(CheckId::assigns_output, false, "not evaluated");
    add(CheckId::prints_output, false, "not evaluated");
    add(CheckId::min_lines, lines >= min_lines, lines_detail);
    add(CheckId::keys_used, false, "not evaluated");
    report.facts.noncomment_lines = lines;
    report.passed = false;
    return report;
  }

  Analysis a = analyze(*module, source);
  report.facts = a.facts;
  add(CheckId::syntax_ok, true, "");
  add(CheckId::has_input_mapping, a.mapping.present,
      a.mapping.present ? "keys: " + join(a.mapping.keys) : a.mapping.problem);
  add(CheckId::calls_with_input, a.facts.called_function.has_value(),
      a.facts.called_function ? "calls " + *a.facts.called_function
                              : "no call spreading **input is bound to 'output'");
  add(CheckId::assigns_output, a.output_assigned,
      a.output_assigned ? "" : "no module-level assignment to 'output'");
  add(CheckId::prints_output, a.facts.has_output_print,
      a.facts.has_output_print ? "" : "no statement print(output)");
  add(CheckId::min_lines, lines >= min_lines, lines_detail);
  add(CheckId::keys_used, a.unused.empty(), a.unused.empty() ? "" : "unused: " + join(a.unused));

  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const CheckResult& c) { return c.passed; });
  return report;
}

}  // namespace caco::validator
