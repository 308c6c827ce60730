#pragma once

// Syntax tree for candidate programs (Python 3.8+ grammar). Nodes are
// generic: each kind documents how it uses the shared child slots.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace caco::py {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

enum class ExprKind {
  name,        // text = identifier
  constant,    // text = source spelling (number, None, True, False, ...)
  string,      // str_value = decoded text of plain strings; items = f-string fields
  attribute,   // items[0] = object, text = attribute name
  subscript,   // items[0] = object, items[1] = index
  slice,       // items = {lower, upper, step}, each may be null
  call,        // items[0] = callee, items[1..] = positional args; keywords
  starred,     // items[0]
  tuple,       // items
  list,        // items
  set,         // items
  dict,        // items = key, value, key, value...; null key marks **value
  list_comp,   // items[0] = element; generators
  set_comp,    // items[0] = element; generators
  dict_comp,   // items[0] = key, items[1] = value; generators
  generator,   // items[0] = element; generators
  bool_op,     // text = "and" / "or"; items
  bin_op,      // text = operator; items[0], items[1]
  unary_op,    // text = operator; items[0]
  compare,     // items[0] op[0] items[1] op[1] items[2] ...
  if_exp,      // items = {body, test, orelse}
  lambda,      // params; items[0] = body
  named_expr,  // items = {target, value}
  await_expr,  // items[0]
  yield_expr,  // items[0] may be null
  yield_from,  // items[0]
};

struct Keyword {
  std::optional<std::string> arg;  // absent for **value
  ExprPtr value;
};

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
  bool is_async = false;
};

enum class ParamKind { positional_only, normal, var_positional, keyword_only, var_keyword };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::normal;
  ExprPtr annotation;
  ExprPtr default_value;
};

struct Expr {
  ExprKind kind = ExprKind::name;
  int line = 0;
  std::string text;
  std::string str_value;
  bool is_bytes = false;
  std::vector<ExprPtr> items;
  std::vector<std::string> ops;  // compare operators
  std::vector<Keyword> keywords;
  std::vector<Comprehension> generators;
  std::vector<Param> params;
};

enum class StmtKind {
  function_def,  // name, params, decorators, value = return annotation, body, is_async
  class_def,     // name, decorators, exprs = bases, keywords, body
  return_,       // value may be null
  delete_,       // targets
  assign,        // targets (chained), value
  aug_assign,    // targets[0], name = operator, value
  ann_assign,    // targets[0], annotation, value may be null
  for_,          // targets[0], value = iterable, body, orelse, is_async
  while_,        // value = test, body, orelse
  if_,           // value = test, body, orelse (elif nests an if_)
  with_,         // exprs = context managers, targets = optional vars (null allowed), body
  match_,        // value = subject, cases
  raise_,        // value = exception, annotation = cause; both may be null
  try_,          // body, handlers, orelse, finalbody
  assert_,       // value = test, annotation = message
  import_,       // names
  import_from,   // name = module (with leading dots), names
  global_,       // names
  nonlocal_,     // names
  expr,          // value
  pass,
  break_,
  continue_,
};

struct ExceptHandler {
  ExprPtr type;  // null for bare except
  std::string name;
  std::vector<StmtPtr> body;
};

struct MatchCase {
  ExprPtr pattern;
  ExprPtr guard;
  std::vector<StmtPtr> body;
};

struct Stmt {
  StmtKind kind = StmtKind::pass;
  int line = 0;
  std::string name;
  bool is_async = false;
  std::vector<ExprPtr> targets;
  ExprPtr value;
  ExprPtr annotation;
  std::vector<ExprPtr> exprs;
  std::vector<ExprPtr> decorators;
  std::vector<Keyword> keywords;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  std::vector<StmtPtr> orelse;
  std::vector<StmtPtr> finalbody;
  std::vector<ExceptHandler> handlers;
  std::vector<MatchCase> cases;
  std::vector<std::string> names;
};

struct Module {
  std::vector<StmtPtr> body;
};

/// Parses a whole module. Throws Error(syntax_error) with a "line N: ..."
/// message when the source is not valid Python.
Module parse_module(const std::string& source);

/// Calls `fn` on every expression reachable from `expr`, itself included,
/// in pre-order.
void walk(const Expr& expr, const std::function<void(const Expr&)>& fn);

/// Calls `fn` on every expression reachable from `stmt`, including nested
/// statement bodies, parameter defaults and annotations.
void walk(const Stmt& stmt, const std::function<void(const Expr&)>& fn);

/// Calls `fn` on `stmt` and every statement nested in it.
void walk_statements(const Stmt& stmt, const std::function<void(const Stmt&)>& fn);

}  // namespace caco::py
