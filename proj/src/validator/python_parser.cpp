// Recursive-descent parser for the Python 3 statement and expression grammar.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "caco/core/error.hpp"
#include "caco/validator/python_ast.hpp"
#include "python_lexer.hpp"

namespace caco::py {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",   "assert", "async",  "await", "break",
    "class", "continue", "def",   "del",      "elif", "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",   "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",  "while",  "with",   "yield",
};

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

constexpr std::array<std::string_view, 13> kAugOps = {"+=", "-=", "*=",  "/=",  "//=", "%=", "@=",
                                                      "&=", "|=", "^=", ">>=", "<<=", "**="};

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string decode_escapes(std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      continue;
    }
    char e = body[++i];
    auto hex = [&](std::size_t n) {
      std::string digits(body.substr(i + 1, n));
      i += digits.size();
      return std::strtoul(digits.c_str(), nullptr, 16);
    };
    switch (e) {
      case '\n': break;
      case '\r':
        if (i + 1 < body.size() && body[i + 1] == '\n') ++i;
        break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case '0': case '1': case '2': case '3': case '4': case '5': case '6': case '7': {
        unsigned value = static_cast<unsigned>(e - '0');
        for (int k = 0; k < 2 && i + 1 < body.size() && body[i + 1] >= '0' && body[i + 1] <= '7'; ++k) {
          value = value * 8 + static_cast<unsigned>(body[++i] - '0');
        }
        append_utf8(out, value);
        break;
      }
      case 'x': append_utf8(out, hex(2)); break;
      case 'u': append_utf8(out, hex(4)); break;
      case 'U': append_utf8(out, hex(8)); break;
      case 'a': out.push_back('\a'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case '\\': case '\'': case '"': out.push_back(e); break;
      default:
        out.push_back('\\');
        out.push_back(e);
    }
  }
  return out;
}

// Python rejects these at compile time: short \x, \u and \U escapes, code
// points above U+10FFFF and malformed \N{...} names. Well-formed names that
// are missing from the Unicode database are not detected.
std::optional<std::string> escape_error(std::string_view body, bool bytes) {
  auto hex_run = [&](std::size_t from, std::size_t n) {
    std::size_t k = 0;
    while (k < n && from + k < body.size() && std::isxdigit(static_cast<unsigned char>(body[from + k]))) ++k;
    return k;
  };
  for (std::size_t i = 0; i + 1 < body.size(); ++i) {
    if (body[i] != '\\') continue;
    char e = body[++i];
    std::size_t width = e == 'x' ? 2 : e == 'u' ? 4 : e == 'U' ? 8 : 0;
    if (width && (e == 'x' || !bytes)) {
      if (hex_run(i + 1, width) != width) return "truncated \\" + std::string(1, e) + " escape";
      if (e == 'U' && std::strtoul(std::string(body.substr(i + 1, 8)).c_str(), nullptr, 16) > 0x10FFFF) {
        return "illegal Unicode character";
      }
      i += width;
    } else if (e == 'N' && !bytes) {
      std::size_t close = body.find('}', i + 1);
      if (i + 1 >= body.size() || body[i + 1] != '{' || close == std::string_view::npos || close == i + 2) {
        return "malformed \\N character escape";
      }
      for (std::size_t k = i + 2; k < close; ++k) {
        char c = body[k];
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != ' ' && c != '-') return "unknown Unicode character name";
      }
      i = close;
    }
  }
  return std::nullopt;
}

ExprPtr make_expr(ExprKind kind, int line, std::string text = {}) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = line;
  e->text = std::move(text);
  return e;
}

std::string_view describe(const Expr& e) {
  switch (e.kind) {
    case ExprKind::call: return "function call";
    case ExprKind::constant: return "literal";
    case ExprKind::string: return "literal";
    case ExprKind::list_comp: return "list comprehension";
    case ExprKind::set_comp: return "set comprehension";
    case ExprKind::dict_comp: return "dict comprehension";
    case ExprKind::generator: return "generator expression";
    case ExprKind::lambda: return "lambda";
    case ExprKind::if_exp: return "conditional expression";
    case ExprKind::named_expr: return "named expression";
    case ExprKind::compare: return "comparison";
    case ExprKind::await_expr: return "await expression";
    case ExprKind::yield_expr:
    case ExprKind::yield_from: return "yield expression";
    case ExprKind::dict: return "dict literal";
    case ExprKind::set: return "set display";
    case ExprKind::tuple: return "tuple";
    default: return "expression";
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Module parse_file() {
    Module module;
    while (!at(TokenType::end)) {
      if (at(TokenType::newline)) {
        ++pos_;
        continue;
      }
      if (at(TokenType::indent)) fail("unexpected indent");
      parse_statement(module.body);
    }
    return module;
  }

  // Expression-only entry used for f-string replacement fields.
  ExprPtr parse_fstring_field() {
    ExprPtr e = at_op("yield") ? parse_yield() : parse_star_expressions(true);
    while (at(TokenType::newline)) ++pos_;
    if (!at(TokenType::end)) fail("f-string: invalid expression");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  int line() const { return peek().line; }
  bool at(TokenType type) const { return peek().type == type; }
  bool at_op(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return (t.type == TokenType::op || t.type == TokenType::name) && t.text == text;
  }
  bool at_name() const { return at(TokenType::name) && !is_keyword(peek().text); }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxIssue{line(), message};
  }
  [[noreturn]] void fail_at(int at_line, const std::string& message) const {
    throw SyntaxIssue{at_line, message};
  }

  bool accept(std::string_view text) {
    if (!at_op(text)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view text) {
    if (!accept(text)) fail("expected '" + std::string(text) + "'");
  }
  std::string expect_name() {
    if (!at_name()) fail("invalid syntax: expected a name");
    return toks_[pos_++].text;
  }
  void expect_newline() {
    if (at(TokenType::end)) return;
    if (!at(TokenType::newline)) fail("invalid syntax");
    ++pos_;
  }

  // ---- statements ----------------------------------------------------------

  void parse_statement(std::vector<StmtPtr>& out) {
    if (at_op("match") && try_parse_match(out)) return;
    if (at_op("@") || at_op("def") || at_op("class") || at_op("if") || at_op("while") ||
        at_op("for") || at_op("with") || at_op("try") || at_op("async")) {
      out.push_back(parse_compound());
      return;
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(std::vector<StmtPtr>& out) {
    out.push_back(parse_simple());
    while (accept(";")) {
      if (at(TokenType::newline) || at(TokenType::end)) break;
      out.push_back(parse_simple());
    }
    expect_newline();
  }

  std::vector<StmtPtr> parse_block() {
    std::vector<StmtPtr> body;
    if (at(TokenType::newline)) {
      ++pos_;
      if (!at(TokenType::indent)) fail("expected an indented block");
      ++pos_;
      while (!at(TokenType::dedent) && !at(TokenType::end)) {
        if (at(TokenType::indent)) fail("unexpected indent");
        parse_statement(body);
      }
      if (at(TokenType::dedent)) ++pos_;
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  StmtPtr new_stmt(StmtKind kind, int at_line) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->line = at_line;
    return s;
  }

  StmtPtr parse_compound() {
    int start = line();
    if (at_op("@")) {
      std::vector<ExprPtr> decorators;
      while (accept("@")) {
        decorators.push_back(parse_named_expression());
        expect_newline();
      }
      StmtPtr target;
      if (at_op("def") || (at_op("async") && at_op("def", 1))) {
        target = parse_compound();
      } else if (at_op("class")) {
        target = parse_compound();
      } else {
        fail("invalid syntax: decorator must precede def or class");
      }
      target->decorators = std::move(decorators);
      target->line = start;
      return target;
    }
    if (accept("async")) {
      if (!(at_op("def") || at_op("for") || at_op("with"))) fail("invalid syntax after 'async'");
      StmtPtr s = parse_compound();
      s->is_async = true;
      return s;
    }
    if (accept("def")) {
      auto s = new_stmt(StmtKind::function_def, start);
      s->name = expect_name();
      expect("(");
      s->params = parse_parameters(")", true);
      expect(")");
      if (accept("->")) s->value = parse_expression();
      expect(":");
      s->body = parse_block();
      return s;
    }
    if (accept("class")) {
      auto s = new_stmt(StmtKind::class_def, start);
      s->name = expect_name();
      if (accept("(")) {
        auto call = make_expr(ExprKind::call, start);
        call->items.push_back(nullptr);
        parse_arguments(*call);
        for (std::size_t i = 1; i < call->items.size(); ++i) s->exprs.push_back(std::move(call->items[i]));
        s->keywords = std::move(call->keywords);
      }
      expect(":");
      s->body = parse_block();
      return s;
    }
    if (accept("if")) return parse_if_rest(start);
    if (accept("while")) {
      auto s = new_stmt(StmtKind::while_, start);
      s->value = parse_named_expression();
      expect(":");
      s->body = parse_block();
      if (accept("else")) {
        expect(":");
        s->orelse = parse_block();
      }
      return s;
    }
    if (accept("for")) {
      auto s = new_stmt(StmtKind::for_, start);
      s->targets.push_back(parse_target_list());
      expect("in");
      s->value = parse_star_expressions(false);
      expect(":");
      s->body = parse_block();
      if (accept("else")) {
        expect(":");
        s->orelse = parse_block();
      }
      return s;
    }
    if (accept("with")) {
      auto s = new_stmt(StmtKind::with_, start);
      if (!try_parse_parenthesized_with_items(*s)) parse_with_items(*s);
      expect(":");
      s->body = parse_block();
      return s;
    }
    if (accept("try")) {
      auto s = new_stmt(StmtKind::try_, start);
      expect(":");
      s->body = parse_block();
      while (at_op("except")) {
        ++pos_;
        ExceptHandler h;
        if (!at_op(":")) {
          h.type = parse_expression();
          if (at_op(",")) fail("multiple exception types must be parenthesized");
          if (accept("as")) h.name = expect_name();
        }
        expect(":");
        h.body = parse_block();
        s->handlers.push_back(std::move(h));
      }
      if (accept("else")) {
        if (s->handlers.empty()) fail("invalid syntax: 'else' without 'except'");
        expect(":");
        s->orelse = parse_block();
      }
      if (accept("finally")) {
        expect(":");
        s->finalbody = parse_block();
      }
      if (s->handlers.empty() && s->finalbody.empty()) fail("expected 'except' or 'finally' block");
      return s;
    }
    fail("invalid syntax");
  }

  StmtPtr parse_if_rest(int start) {
    auto s = new_stmt(StmtKind::if_, start);
    s->value = parse_named_expression();
    expect(":");
    s->body = parse_block();
    if (at_op("elif")) {
      int elif_line = line();
      ++pos_;
      s->orelse.push_back(parse_if_rest(elif_line));
    } else if (accept("else")) {
      expect(":");
      s->orelse = parse_block();
    }
    return s;
  }

  void parse_with_items(Stmt& s) {
    do {
      s.exprs.push_back(parse_expression());
      if (accept("as")) {
        ExprPtr target = parse_target();
        check_assign_target(*target);
        s.targets.push_back(std::move(target));
      } else {
        s.targets.push_back(nullptr);
      }
    } while (accept(","));
  }

  // with (a as b, c as d): ...
  bool try_parse_parenthesized_with_items(Stmt& s) {
    if (!at_op("(")) return false;
    std::size_t save = pos_;
    try {
      ++pos_;
      Stmt probe;
      do {
        if (at_op(")")) break;
        probe.exprs.push_back(parse_expression());
        if (accept("as")) {
          ExprPtr target = parse_target();
          check_assign_target(*target);
          probe.targets.push_back(std::move(target));
        } else {
          probe.targets.push_back(nullptr);
        }
      } while (accept(","));
      expect(")");
      if (!at_op(":")) throw SyntaxIssue{line(), "not a parenthesized with-item list"};
      s.exprs = std::move(probe.exprs);
      s.targets = std::move(probe.targets);
      return true;
    } catch (const SyntaxIssue&) {
      pos_ = save;
      return false;
    }
  }

  StmtPtr parse_simple() {
    int start = line();
    if (accept("pass")) return new_stmt(StmtKind::pass, start);
    if (accept("break")) return new_stmt(StmtKind::break_, start);
    if (accept("continue")) return new_stmt(StmtKind::continue_, start);
    if (accept("return")) {
      auto s = new_stmt(StmtKind::return_, start);
      if (!at_statement_end()) s->value = parse_star_expressions(false);
      return s;
    }
    if (accept("raise")) {
      auto s = new_stmt(StmtKind::raise_, start);
      if (!at_statement_end()) {
        s->value = parse_expression();
        if (accept("from")) s->annotation = parse_expression();
      }
      return s;
    }
    if (at_op("global") || at_op("nonlocal")) {
      auto s = new_stmt(at_op("global") ? StmtKind::global_ : StmtKind::nonlocal_, start);
      ++pos_;
      do {
        s->names.push_back(expect_name());
      } while (accept(","));
      return s;
    }
    if (accept("del")) {
      auto s = new_stmt(StmtKind::delete_, start);
      do {
        if (at_statement_end()) break;
        ExprPtr target = parse_target();
        check_delete_target(*target);
        s->targets.push_back(std::move(target));
      } while (accept(","));
      if (s->targets.empty()) fail("invalid syntax");
      return s;
    }
    if (accept("assert")) {
      auto s = new_stmt(StmtKind::assert_, start);
      s->value = parse_expression();
      if (accept(",")) s->annotation = parse_expression();
      return s;
    }
    if (accept("import")) {
      auto s = new_stmt(StmtKind::import_, start);
      do {
        std::string name = parse_dotted_name();
        if (accept("as")) name += " as " + expect_name();
        s->names.push_back(name);
      } while (accept(","));
      return s;
    }
    if (accept("from")) {
      auto s = new_stmt(StmtKind::import_from, start);
      std::string module;
      while (at_op(".") || at_op("...")) module += toks_[pos_++].text;
      if (!at_op("import")) module += parse_dotted_name();
      if (module.empty()) fail("invalid syntax");
      s->name = module;
      expect("import");
      if (accept("*")) {
        s->names.push_back("*");
      } else {
        bool paren = accept("(");
        do {
          if (paren && at_op(")")) break;
          std::string name = expect_name();
          if (accept("as")) name += " as " + expect_name();
          s->names.push_back(name);
        } while (accept(","));
        if (paren) expect(")");
        if (s->names.empty()) fail("invalid syntax");
        if (!paren && toks_[pos_ - 1].text == ",") fail("trailing comma not allowed without surrounding parentheses");
      }
      return s;
    }
    return parse_expression_statement(start);
  }

  bool at_statement_end() const {
    return at(TokenType::newline) || at(TokenType::end) || at_op(";");
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (accept(".")) name += "." + expect_name();
    return name;
  }

  ExprPtr parse_assignment_value() {
    if (at_op("yield")) return parse_yield();
    return parse_star_expressions(false);
  }

  StmtPtr parse_expression_statement(int start) {
    ExprPtr first = at_op("yield") ? parse_yield() : parse_star_expressions(false);
    if (at_op("=")) {
      auto s = new_stmt(StmtKind::assign, start);
      s->targets.push_back(std::move(first));
      ExprPtr value;
      while (accept("=")) {
        value = parse_assignment_value();
        if (at_op("=")) s->targets.push_back(std::move(value));
      }
      for (const auto& target : s->targets) check_assign_target(*target);
      s->value = std::move(value);
      return s;
    }
    for (std::string_view op : kAugOps) {
      if (at_op(op)) {
        ++pos_;
        if (first->kind != ExprKind::name && first->kind != ExprKind::attribute &&
            first->kind != ExprKind::subscript) {
          fail_at(first->line, "'" + std::string(describe(*first)) +
                                   "' is an illegal expression for augmented assignment");
        }
        auto s = new_stmt(StmtKind::aug_assign, start);
        s->name = std::string(op);
        s->targets.push_back(std::move(first));
        s->value = parse_assignment_value();
        return s;
      }
    }
    if (accept(":")) {
      if (first->kind != ExprKind::name && first->kind != ExprKind::attribute &&
          first->kind != ExprKind::subscript) {
        fail_at(first->line, "only single target (not " + std::string(describe(*first)) +
                                 ") can be annotated");
      }
      auto s = new_stmt(StmtKind::ann_assign, start);
      s->targets.push_back(std::move(first));
      s->annotation = parse_expression();
      if (accept("=")) s->value = parse_assignment_value();
      return s;
    }
    auto s = new_stmt(StmtKind::expr, start);
    s->value = std::move(first);
    return s;
  }

  void check_assign_target(const Expr& e) {
    switch (e.kind) {
      case ExprKind::name:
      case ExprKind::attribute:
      case ExprKind::subscript:
        return;
      case ExprKind::starred:
        check_assign_target(*e.items[0]);
        return;
      case ExprKind::tuple:
      case ExprKind::list:
        for (const auto& item : e.items) check_assign_target(*item);
        return;
      case ExprKind::constant:
        if (e.text == "True" || e.text == "False" || e.text == "None") {
          fail_at(e.line, "cannot assign to " + e.text);
        }
        [[fallthrough]];
      default:
        fail_at(e.line, "cannot assign to " + std::string(describe(e)));
    }
  }

  void check_delete_target(const Expr& e) {
    switch (e.kind) {
      case ExprKind::name:
      case ExprKind::attribute:
      case ExprKind::subscript:
        return;
      case ExprKind::tuple:
      case ExprKind::list:
        for (const auto& item : e.items) check_delete_target(*item);
        return;
      default:
        fail_at(e.line, "cannot delete " + std::string(describe(e)));
    }
  }

  // ---- parameters ----------------------------------------------------------

  std::vector<Param> parse_parameters(std::string_view closer, bool annotations) {
    std::vector<Param> params;
    bool seen_slash = false;
    bool seen_star = false;
    bool seen_kwargs = false;
    bool seen_default = false;
    bool bare_star_pending = false;
    while (!at_op(closer)) {
      if (seen_kwargs) fail("arguments cannot follow var-keyword argument");
      if (accept("/")) {
        if (seen_slash || seen_star || params.empty()) fail("invalid syntax at '/'");
        seen_slash = true;
        for (auto& p : params) p.kind = ParamKind::positional_only;
      } else if (accept("**")) {
        Param p;
        p.kind = ParamKind::var_keyword;
        p.name = expect_name();
        if (annotations && accept(":")) p.annotation = parse_expression();
        if (at_op("=")) fail("var-keyword argument cannot have default value");
        params.push_back(std::move(p));
        seen_kwargs = true;
      } else if (accept("*")) {
        if (seen_star) fail("* argument may appear only once");
        seen_star = true;
        if (at_op(",") || at_op(closer)) {
          bare_star_pending = true;
        } else {
          Param p;
          p.kind = ParamKind::var_positional;
          p.name = expect_name();
          if (annotations && accept(":")) p.annotation = parse_star_annotation();
          if (at_op("=")) fail("var-positional argument cannot have default value");
          params.push_back(std::move(p));
        }
      } else {
        Param p;
        p.kind = seen_star ? ParamKind::keyword_only : ParamKind::normal;
        p.name = expect_name();
        if (annotations && accept(":")) p.annotation = parse_expression();
        if (accept("=")) {
          p.default_value = parse_expression();
          if (!seen_star) seen_default = true;
        } else if (seen_default && !seen_star) {
          fail("non-default argument follows default argument");
        }
        if (seen_star) bare_star_pending = false;
        params.push_back(std::move(p));
      }
      if (!accept(",")) break;
    }
    if (bare_star_pending) fail("named arguments must follow bare *");
    return params;
  }

  ExprPtr parse_star_annotation() {
    if (at_op("*")) {
      int l = line();
      ++pos_;
      auto star = make_expr(ExprKind::starred, l);
      star->items.push_back(parse_expression());
      return star;
    }
    return parse_expression();
  }

  // ---- call arguments ------------------------------------------------------

  // Parses "(...)" after the opening paren; fills call.items[1..] and keywords.
  void parse_arguments(Expr& call) {
    bool seen_keyword = false;
    bool seen_double_star = false;
    std::size_t count = 0;
    bool bare_generator = false;
    while (!at_op(")")) {
      ++count;
      int l = line();
      if (accept("**")) {
        call.keywords.push_back(Keyword{std::nullopt, parse_expression()});
        seen_double_star = true;
      } else if (accept("*")) {
        if (seen_double_star) fail("iterable argument unpacking follows keyword argument unpacking");
        auto star = make_expr(ExprKind::starred, l);
        star->items.push_back(parse_expression());
        call.items.push_back(std::move(star));
      } else if (at(TokenType::name) && at_op("=", 1)) {
        std::string name = expect_name();
        expect("=");
        call.keywords.push_back(Keyword{name, parse_expression()});
        seen_keyword = true;
      } else {
        ExprPtr arg = parse_named_expression();
        if (at_op("=")) fail("expression cannot contain assignment, perhaps you meant \"==\"?");
        if (at_op("for") || at_op("async")) {
          arg = parse_comprehension_tail(ExprKind::generator, std::move(arg), nullptr);
          bare_generator = true;
        }
        if (seen_double_star) fail("positional argument follows keyword argument unpacking");
        if (seen_keyword) fail("positional argument follows keyword argument");
        call.items.push_back(std::move(arg));
      }
      if (!accept(",")) break;
    }
    if (bare_generator && count > 1) fail("Generator expression must be parenthesized");
    expect(")");
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr parse_star_expressions(bool allow_named) {
    int l = line();
    ExprPtr first = parse_star_expression(allow_named);
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::tuple, l);
    tuple->items.push_back(std::move(first));
    while (accept(",")) {
      if (!starts_expression()) break;
      tuple->items.push_back(parse_star_expression(allow_named));
    }
    return tuple;
  }

  ExprPtr parse_star_expression(bool allow_named) {
    if (at_op("*")) {
      int l = line();
      ++pos_;
      auto star = make_expr(ExprKind::starred, l);
      star->items.push_back(parse_bitwise_or());
      return star;
    }
    return allow_named ? parse_named_expression() : parse_expression();
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::name:
        if (!is_keyword(t.text)) return true;
        return t.text == "None" || t.text == "True" || t.text == "False" || t.text == "not" ||
               t.text == "lambda" || t.text == "await" || t.text == "yield";
      case TokenType::number:
      case TokenType::string:
        return true;
      case TokenType::op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  ExprPtr parse_named_expression() {
    if (at(TokenType::name) && at_op(":=", 1)) {
      int l = line();
      if (!at_name()) fail("cannot use assignment expressions with " + peek().text);
      auto target = make_expr(ExprKind::name, l, toks_[pos_++].text);
      expect(":=");
      auto named = make_expr(ExprKind::named_expr, l);
      named->items.push_back(std::move(target));
      named->items.push_back(parse_expression());
      return named;
    }
    ExprPtr e = parse_expression();
    if (at_op(":=")) fail_at(e->line, "cannot use assignment expressions with " + std::string(describe(*e)));
    return e;
  }

  ExprPtr parse_expression() {
    if (at_op("lambda")) return parse_lambda();
    int l = line();
    ExprPtr body = parse_disjunction();
    if (at_op("if")) {
      ++pos_;
      ExprPtr test = parse_disjunction();
      expect("else");
      ExprPtr orelse = parse_expression();
      auto e = make_expr(ExprKind::if_exp, l);
      e->items.push_back(std::move(body));
      e->items.push_back(std::move(test));
      e->items.push_back(std::move(orelse));
      return e;
    }
    return body;
  }

  ExprPtr parse_expression_no_cond() {
    if (at_op("lambda")) return parse_lambda();
    return parse_disjunction();
  }

  ExprPtr parse_lambda() {
    int l = line();
    expect("lambda");
    auto e = make_expr(ExprKind::lambda, l);
    e->params = parse_parameters(":", false);
    expect(":");
    e->items.push_back(parse_expression());
    return e;
  }

  ExprPtr parse_yield() {
    int l = line();
    expect("yield");
    if (accept("from")) {
      auto e = make_expr(ExprKind::yield_from, l);
      e->items.push_back(parse_expression());
      return e;
    }
    auto e = make_expr(ExprKind::yield_expr, l);
    if (starts_expression()) {
      e->items.push_back(parse_star_expressions(false));
    } else {
      e->items.push_back(nullptr);
    }
    return e;
  }

  ExprPtr parse_bool_chain(std::string_view op, ExprPtr (Parser::*next)()) {
    int l = line();
    ExprPtr first = (this->*next)();
    if (!at_op(op)) return first;
    auto e = make_expr(ExprKind::bool_op, l, std::string(op));
    e->items.push_back(std::move(first));
    while (accept(op)) e->items.push_back((this->*next)());
    return e;
  }

  ExprPtr parse_disjunction() { return parse_bool_chain("or", &Parser::parse_conjunction); }
  ExprPtr parse_conjunction() { return parse_bool_chain("and", &Parser::parse_inversion); }

  ExprPtr parse_inversion() {
    if (at_op("not")) {
      int l = line();
      ++pos_;
      auto e = make_expr(ExprKind::unary_op, l, "not");
      e->items.push_back(parse_inversion());
      return e;
    }
    return parse_comparison();
  }

  std::optional<std::string> comparison_operator() {
    static constexpr std::array<std::string_view, 6> kSimple = {"==", "!=", "<=", ">=", "<", ">"};
    for (std::string_view op : kSimple) {
      if (at(TokenType::op) && peek().text == op) {
        ++pos_;
        return std::string(op);
      }
    }
    if (at_op("in")) {
      ++pos_;
      return "in";
    }
    if (at_op("not") && at_op("in", 1)) {
      pos_ += 2;
      return "not in";
    }
    if (at_op("is")) {
      ++pos_;
      if (accept("not")) return "is not";
      return "is";
    }
    return std::nullopt;
  }

  ExprPtr parse_comparison() {
    int l = line();
    ExprPtr first = parse_bitwise_or();
    auto op = comparison_operator();
    if (!op) return first;
    auto e = make_expr(ExprKind::compare, l);
    e->items.push_back(std::move(first));
    do {
      e->ops.push_back(*op);
      e->items.push_back(parse_bitwise_or());
    } while ((op = comparison_operator()));
    return e;
  }

  ExprPtr parse_binary_level(std::initializer_list<std::string_view> ops, ExprPtr (Parser::*next)()) {
    ExprPtr lhs = (this->*next)();
    while (true) {
      std::optional<std::string_view> matched;
      for (std::string_view op : ops) {
        if (at(TokenType::op) && peek().text == op) matched = op;
      }
      if (!matched) return lhs;
      int l = line();
      ++pos_;
      auto e = make_expr(ExprKind::bin_op, l, std::string(*matched));
      e->items.push_back(std::move(lhs));
      e->items.push_back((this->*next)());
      lhs = std::move(e);
    }
  }

  ExprPtr parse_bitwise_or() { return parse_binary_level({"|"}, &Parser::parse_bitwise_xor); }
  ExprPtr parse_bitwise_xor() { return parse_binary_level({"^"}, &Parser::parse_bitwise_and); }
  ExprPtr parse_bitwise_and() { return parse_binary_level({"&"}, &Parser::parse_shift); }
  ExprPtr parse_shift() { return parse_binary_level({"<<", ">>"}, &Parser::parse_sum); }
  ExprPtr parse_sum() { return parse_binary_level({"+", "-"}, &Parser::parse_term); }
  ExprPtr parse_term() {
    return parse_binary_level({"*", "/", "//", "%", "@"}, &Parser::parse_factor);
  }

  ExprPtr parse_factor() {
    if (at(TokenType::op) && (peek().text == "-" || peek().text == "+" || peek().text == "~")) {
      int l = line();
      auto e = make_expr(ExprKind::unary_op, l, toks_[pos_++].text);
      e->items.push_back(parse_factor());
      return e;
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    int l = line();
    ExprPtr base;
    if (accept("await")) {
      base = make_expr(ExprKind::await_expr, l);
      base->items.push_back(parse_primary());
    } else {
      base = parse_primary();
    }
    if (at(TokenType::op) && peek().text == "**") {
      ++pos_;
      auto e = make_expr(ExprKind::bin_op, l, "**");
      e->items.push_back(std::move(base));
      e->items.push_back(parse_factor());
      return e;
    }
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      int l = line();
      if (accept(".")) {
        auto attr = make_expr(ExprKind::attribute, l, expect_name());
        attr->items.push_back(std::move(e));
        e = std::move(attr);
      } else if (at(TokenType::op) && peek().text == "(") {
        ++pos_;
        auto call = make_expr(ExprKind::call, e->line);
        call->items.push_back(std::move(e));
        parse_arguments(*call);
        e = std::move(call);
      } else if (at(TokenType::op) && peek().text == "[") {
        ++pos_;
        auto sub = make_expr(ExprKind::subscript, l);
        sub->items.push_back(std::move(e));
        sub->items.push_back(parse_slices());
        expect("]");
        e = std::move(sub);
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_slices() {
    int l = line();
    ExprPtr first = parse_slice();
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::tuple, l);
    tuple->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op("]")) break;
      tuple->items.push_back(parse_slice());
    }
    return tuple;
  }

  ExprPtr parse_slice() {
    int l = line();
    ExprPtr lower;
    if (!at_op(":")) {
      if (at_op("*")) fail_at(l, "starred expression in subscript");
      lower = parse_named_expression();
      if (!at_op(":")) return lower;
    }
    auto slice = make_expr(ExprKind::slice, l);
    expect(":");
    ExprPtr upper;
    ExprPtr step;
    if (!at_op("]") && !at_op(",") && !at_op(":")) upper = parse_expression();
    if (accept(":")) {
      if (!at_op("]") && !at_op(",")) step = parse_expression();
    }
    slice->items.push_back(std::move(lower));
    slice->items.push_back(std::move(upper));
    slice->items.push_back(std::move(step));
    return slice;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    int l = t.line;
    switch (t.type) {
      case TokenType::name:
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          ++pos_;
          return make_expr(ExprKind::constant, l, t.text);
        }
        if (is_keyword(t.text)) fail("invalid syntax");
        ++pos_;
        return make_expr(ExprKind::name, l, t.text);
      case TokenType::number:
        ++pos_;
        return make_expr(ExprKind::constant, l, t.text);
      case TokenType::string:
        return parse_strings();
      case TokenType::op:
        if (t.text == "...") {
          ++pos_;
          return make_expr(ExprKind::constant, l, "...");
        }
        if (t.text == "(") return parse_paren();
        if (t.text == "[") return parse_list();
        if (t.text == "{") return parse_brace();
        break;
      default:
        break;
    }
    if (t.type == TokenType::newline || t.type == TokenType::end) fail("invalid syntax");
    if (t.type == TokenType::indent) fail("unexpected indent");
    fail("invalid syntax near '" + t.text + "'");
  }

  ExprPtr parse_paren() {
    int l = line();
    expect("(");
    if (accept(")")) return make_expr(ExprKind::tuple, l);
    if (at_op("yield")) {
      ExprPtr y = parse_yield();
      expect(")");
      return y;
    }
    ExprPtr first = parse_star_expression(true);
    if (at_op("for") || at_op("async")) {
      ExprPtr gen = parse_comprehension_tail(ExprKind::generator, std::move(first), nullptr);
      expect(")");
      return gen;
    }
    if (!at_op(",")) {
      expect(")");
      if (first->kind == ExprKind::starred) fail_at(l, "cannot use starred expression here");
      return first;
    }
    auto tuple = make_expr(ExprKind::tuple, l);
    tuple->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op(")")) break;
      tuple->items.push_back(parse_star_expression(true));
    }
    expect(")");
    return tuple;
  }

  ExprPtr parse_list() {
    int l = line();
    expect("[");
    auto list = make_expr(ExprKind::list, l);
    if (accept("]")) return list;
    ExprPtr first = parse_star_expression(true);
    if (at_op("for") || at_op("async")) {
      ExprPtr comp = parse_comprehension_tail(ExprKind::list_comp, std::move(first), nullptr);
      expect("]");
      return comp;
    }
    list->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op("]")) break;
      list->items.push_back(parse_star_expression(true));
    }
    expect("]");
    return list;
  }

  ExprPtr parse_brace() {
    int l = line();
    expect("{");
    if (accept("}")) return make_expr(ExprKind::dict, l);
    if (at_op("**")) return parse_dict_rest(l, nullptr);
    ExprPtr first = parse_star_expression(true);
    if (accept(":")) {
      if (first->kind == ExprKind::starred) fail("cannot use a starred expression in a dictionary key");
      ExprPtr value = parse_expression();
      if (at_op("for") || at_op("async")) {
        ExprPtr comp = parse_comprehension_tail(ExprKind::dict_comp, std::move(first), std::move(value));
        expect("}");
        return comp;
      }
      auto dict = make_expr(ExprKind::dict, l);
      dict->items.push_back(std::move(first));
      dict->items.push_back(std::move(value));
      if (!accept(",")) {
        expect("}");
        return dict;
      }
      return parse_dict_rest(l, std::move(dict));
    }
    if (at_op("for") || at_op("async")) {
      ExprPtr comp = parse_comprehension_tail(ExprKind::set_comp, std::move(first), nullptr);
      expect("}");
      return comp;
    }
    auto set = make_expr(ExprKind::set, l);
    set->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op("}")) break;
      set->items.push_back(parse_star_expression(true));
    }
    expect("}");
    return set;
  }

  ExprPtr parse_dict_rest(int l, ExprPtr dict) {
    if (!dict) dict = make_expr(ExprKind::dict, l);
    while (!at_op("}")) {
      if (accept("**")) {
        dict->items.push_back(nullptr);
        dict->items.push_back(parse_bitwise_or());
      } else {
        dict->items.push_back(parse_expression());
        expect(":");
        dict->items.push_back(parse_expression());
      }
      if (!accept(",")) break;
    }
    expect("}");
    return dict;
  }

  ExprPtr parse_comprehension_tail(ExprKind kind, ExprPtr element, ExprPtr value) {
    if (element->kind == ExprKind::starred) {
      fail_at(element->line, "iterable unpacking cannot be used in comprehension");
    }
    auto comp = make_expr(kind, element->line);
    comp->items.push_back(std::move(element));
    if (value) comp->items.push_back(std::move(value));
    while (at_op("for") || (at_op("async") && at_op("for", 1))) {
      Comprehension gen;
      if (accept("async")) gen.is_async = true;
      expect("for");
      gen.target = parse_target_list();
      expect("in");
      gen.iter = parse_disjunction();
      while (accept("if")) gen.ifs.push_back(parse_expression_no_cond());
      comp->generators.push_back(std::move(gen));
    }
    return comp;
  }

  // Assignment-style targets for `for`, comprehensions, `with ... as`, `del`.
  ExprPtr parse_target() {
    if (at_op("*")) {
      int l = line();
      ++pos_;
      auto star = make_expr(ExprKind::starred, l);
      star->items.push_back(parse_target());
      return star;
    }
    return parse_primary();
  }

  ExprPtr parse_target_list() {
    int l = line();
    ExprPtr first = parse_target();
    if (!at_op(",")) {
      check_assign_target(*first);
      return first;
    }
    auto tuple = make_expr(ExprKind::tuple, l);
    tuple->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op("in") || at_op("=")) break;
      tuple->items.push_back(parse_target());
    }
    check_assign_target(*tuple);
    return tuple;
  }

  // ---- strings -------------------------------------------------------------

  ExprPtr parse_strings() {
    int l = line();
    auto e = make_expr(ExprKind::string, l);
    bool any_bytes = false;
    bool any_text = false;
    while (at(TokenType::string)) {
      const Token& t = toks_[pos_++];
      e->text += t.text;
      bool bytes = t.prefix.find('b') != std::string::npos;
      bool raw = t.prefix.find('r') != std::string::npos;
      (bytes ? any_bytes : any_text) = true;
      if (t.prefix.find('f') != std::string::npos) {
        parse_fstring_body(t.body, t.line, *e);
      } else if (raw) {
        e->str_value += t.body;
      } else {
        if (auto problem = escape_error(t.body, bytes)) fail_at(t.line, *problem);
        e->str_value += decode_escapes(t.body);
      }
    }
    if (any_bytes && any_text) fail_at(l, "cannot mix bytes and nonbytes literals");
    e->is_bytes = any_bytes;
    return e;
  }

  // Extracts replacement fields from an f-string body and parses each one.
  void parse_fstring_body(std::string_view body, int at_line, Expr& into) {
    std::size_t i = 0;
    while (i < body.size()) {
      char c = body[i];
      if (c == '{') {
        if (i + 1 < body.size() && body[i + 1] == '{') {
          i += 2;
          continue;
        }
        i = parse_fstring_field(body, i + 1, at_line, into);
      } else if (c == '}') {
        if (i + 1 < body.size() && body[i + 1] == '}') {
          i += 2;
          continue;
        }
        fail_at(at_line, "f-string: single '}' is not allowed");
      } else {
        ++i;
      }
    }
  }

  // `start` points just past '{'. Returns the index just past the closing '}'.
  std::size_t parse_fstring_field(std::string_view body, std::size_t start, int at_line, Expr& into) {
    std::size_t i = start;
    int depth = 0;
    char quote = 0;
    std::size_t expr_end = std::string_view::npos;
    while (i < body.size()) {
      char c = body[i];
      if (quote) {
        if (c == '\\') {
          i += 2;
          continue;
        }
        if (c == quote) quote = 0;
        ++i;
        continue;
      }
      if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
        --depth;
      } else if (depth == 0 && (c == '}' || c == ':' ||
                                (c == '!' && i + 1 < body.size() && body[i + 1] != '='))) {
        expr_end = i;
        break;
      } else if (c == '#') {
        fail_at(at_line, "f-string expression part cannot include '#'");
      }
      ++i;
    }
    if (expr_end == std::string_view::npos) fail_at(at_line, "f-string: expecting '}'");
    std::string expr_text(body.substr(start, expr_end - start));
    // Self-documenting "{x=}" form.
    std::string trimmed = expr_text;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
    if (!trimmed.empty() && trimmed.back() == '=' &&
        (trimmed.size() < 2 || std::string_view("=!<>").find(trimmed[trimmed.size() - 2]) == std::string_view::npos)) {
      trimmed.pop_back();
      expr_text = trimmed;
    }
    if (expr_text.find_first_not_of(" \t\r\n") == std::string::npos) {
      fail_at(at_line, "f-string: empty expression not allowed");
    }
    into.items.push_back(parse_field_expression(expr_text, at_line));

    i = expr_end;
    if (body[i] == '!') {
      i += 2;  // conversion character
      if (i > body.size()) fail_at(at_line, "f-string: expecting '}'");
    }
    if (i < body.size() && body[i] == ':') {
      ++i;
      // Format spec may hold nested replacement fields.
      while (i < body.size() && body[i] != '}') {
        if (body[i] == '{') {
          i = parse_fstring_field(body, i + 1, at_line, into);
        } else {
          ++i;
        }
      }
    }
    if (i >= body.size() || body[i] != '}') fail_at(at_line, "f-string: expecting '}'");
    return i + 1;
  }

  ExprPtr parse_field_expression(const std::string& text, int at_line) {
    std::vector<Token> tokens;
    try {
      tokens = tokenize("(" + text + "\n)");
    } catch (const SyntaxIssue& issue) {
      fail_at(at_line, "f-string: " + issue.message);
    }
    // Keep only what sits between the wrapping parentheses.
    std::vector<Token> field_tokens;
    std::size_t last_close = tokens.size();
    for (std::size_t k = tokens.size(); k-- > 0;) {
      if (tokens[k].type == TokenType::op && tokens[k].text == ")") {
        last_close = k;
        break;
      }
    }
    for (std::size_t k = 1; k < last_close; ++k) {
      if (tokens[k].type == TokenType::newline) continue;
      field_tokens.push_back(tokens[k]);
      field_tokens.back().line = at_line;
    }
    Token end;
    end.type = TokenType::end;
    end.line = at_line;
    field_tokens.push_back(end);
    try {
      return Parser(std::move(field_tokens)).parse_fstring_field();
    } catch (const SyntaxIssue& issue) {
      fail_at(at_line, "f-string: " + issue.message);
    }
  }

  // ---- match statement (soft keyword) --------------------------------------

  bool try_parse_match(std::vector<StmtPtr>& out) {
    std::size_t save = pos_;
    int start = line();
    try {
      ++pos_;
      if (at(TokenType::newline) || at_op("=") || at_op(".")) {
        throw SyntaxIssue{start, "not a match statement"};
      }
      auto s = new_stmt(StmtKind::match_, start);
      s->value = parse_star_expressions(true);
      expect(":");
      if (!at(TokenType::newline)) throw SyntaxIssue{start, "not a match statement"};
      ++pos_;
      if (!at(TokenType::indent)) throw SyntaxIssue{start, "not a match statement"};
      ++pos_;
      while (!at(TokenType::dedent) && !at(TokenType::end)) {
        if (!at_op("case")) fail("expected 'case'");
        ++pos_;
        MatchCase mc;
        mc.pattern = parse_pattern_top();
        if (accept("if")) mc.guard = parse_named_expression();
        expect(":");
        mc.body = parse_block();
        s->cases.push_back(std::move(mc));
      }
      if (at(TokenType::dedent)) ++pos_;
      if (s->cases.empty()) fail("match statement needs at least one case");
      out.push_back(std::move(s));
      return true;
    } catch (const SyntaxIssue&) {
      pos_ = save;
      return false;
    }
  }

  ExprPtr parse_pattern_top() {
    int l = line();
    ExprPtr first = parse_pattern_as();
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::tuple, l);
    tuple->items.push_back(std::move(first));
    while (accept(",")) {
      if (at_op(":") || at_op("if")) break;
      tuple->items.push_back(parse_pattern_as());
    }
    return tuple;
  }

  ExprPtr parse_pattern_as() {
    ExprPtr p = parse_pattern_or();
    if (accept("as")) {
      int l = line();
      auto named = make_expr(ExprKind::named_expr, l);
      named->items.push_back(make_expr(ExprKind::name, l, expect_name()));
      named->items.push_back(std::move(p));
      return named;
    }
    return p;
  }

  ExprPtr parse_pattern_or() {
    int l = line();
    ExprPtr first = parse_pattern_closed();
    if (!at_op("|")) return first;
    auto e = make_expr(ExprKind::bool_op, l, "|");
    e->items.push_back(std::move(first));
    while (accept("|")) e->items.push_back(parse_pattern_closed());
    return e;
  }

  ExprPtr parse_pattern_closed() {
    int l = line();
    if (accept("*")) {
      auto star = make_expr(ExprKind::starred, l);
      star->items.push_back(make_expr(ExprKind::name, l, expect_name()));
      return star;
    }
    if (accept("(")) {
      auto tuple = make_expr(ExprKind::tuple, l);
      bool comma = false;
      while (!at_op(")")) {
        tuple->items.push_back(parse_pattern_as());
        if (!accept(",")) break;
        comma = true;
      }
      expect(")");
      if (tuple->items.size() == 1 && !comma) return std::move(tuple->items[0]);
      return tuple;
    }
    if (accept("[")) {
      auto list = make_expr(ExprKind::list, l);
      while (!at_op("]")) {
        list->items.push_back(parse_pattern_as());
        if (!accept(",")) break;
      }
      expect("]");
      return list;
    }
    if (accept("{")) {
      auto dict = make_expr(ExprKind::dict, l);
      while (!at_op("}")) {
        if (accept("**")) {
          dict->items.push_back(nullptr);
          dict->items.push_back(make_expr(ExprKind::name, line(), expect_name()));
        } else {
          dict->items.push_back(parse_sum());
          expect(":");
          dict->items.push_back(parse_pattern_as());
        }
        if (!accept(",")) break;
      }
      expect("}");
      return dict;
    }
    if (at(TokenType::name) && !is_keyword(peek().text)) {
      ExprPtr value = make_expr(ExprKind::name, l, toks_[pos_++].text);
      while (accept(".")) {
        auto attr = make_expr(ExprKind::attribute, l, expect_name());
        attr->items.push_back(std::move(value));
        value = std::move(attr);
      }
      if (accept("(")) {
        auto call = make_expr(ExprKind::call, l);
        call->items.push_back(std::move(value));
        while (!at_op(")")) {
          if (at(TokenType::name) && at_op("=", 1)) {
            std::string name = expect_name();
            expect("=");
            call->keywords.push_back(Keyword{name, parse_pattern_as()});
          } else {
            call->items.push_back(parse_pattern_as());
          }
          if (!accept(",")) break;
        }
        expect(")");
        return call;
      }
      return value;
    }
    // Literal patterns: numbers (with sign and complex parts), strings, constants.
    return parse_sum();
  }
};

}  // namespace

Module parse_module(const std::string& source) {
  try {
    return Parser(tokenize(source)).parse_file();
  } catch (const SyntaxIssue& issue) {
    throw Error(ErrorCode::syntax_error, "line " + std::to_string(issue.line) + ": " + issue.message);
  }
}

void walk(const Expr& expr, const std::function<void(const Expr&)>& fn) {
  fn(expr);
  for (const auto& item : expr.items) {
    if (item) walk(*item, fn);
  }
  for (const auto& kw : expr.keywords) {
    if (kw.value) walk(*kw.value, fn);
  }
  for (const auto& gen : expr.generators) {
    if (gen.target) walk(*gen.target, fn);
    if (gen.iter) walk(*gen.iter, fn);
    for (const auto& cond : gen.ifs) walk(*cond, fn);
  }
  for (const auto& p : expr.params) {
    if (p.default_value) walk(*p.default_value, fn);
  }
}

void walk_statements(const Stmt& stmt, const std::function<void(const Stmt&)>& fn) {
  fn(stmt);
  for (const auto* block : {&stmt.body, &stmt.orelse, &stmt.finalbody}) {
    for (const auto& child : *block) walk_statements(*child, fn);
  }
  for (const auto& h : stmt.handlers) {
    for (const auto& child : h.body) walk_statements(*child, fn);
  }
  for (const auto& c : stmt.cases) {
    for (const auto& child : c.body) walk_statements(*child, fn);
  }
}

void walk(const Stmt& stmt, const std::function<void(const Expr&)>& fn) {
  walk_statements(stmt, [&](const Stmt& s) {
    for (const auto& e : s.targets) {
      if (e) walk(*e, fn);
    }
    if (s.value) walk(*s.value, fn);
    if (s.annotation) walk(*s.annotation, fn);
    for (const auto& e : s.exprs) walk(*e, fn);
    for (const auto& e : s.decorators) walk(*e, fn);
    for (const auto& kw : s.keywords) walk(*kw.value, fn);
    for (const auto& p : s.params) {
      if (p.annotation) walk(*p.annotation, fn);
      if (p.default_value) walk(*p.default_value, fn);
    }
    for (const auto& h : s.handlers) {
      if (h.type) walk(*h.type, fn);
    }
    for (const auto& c : s.cases) {
      if (c.pattern) walk(*c.pattern, fn);
      if (c.guard) walk(*c.guard, fn);
    }
  });
}

}  // namespace caco::py
