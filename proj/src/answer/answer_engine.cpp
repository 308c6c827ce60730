#include "caco/answer/answer_engine.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <regex>
#include <utility>

#include "caco/core/error.hpp"

namespace caco::answer {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Replaces `\cmd{X}` with `X`, for text-style wrappers that carry no math.
void unwrap_command(std::string& text, std::string_view cmd) {
  std::string needle = std::string(cmd) + "{";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    std::size_t open = pos + needle.size() - 1;
    int depth = 0;
    std::size_t close = std::string::npos;
    for (std::size_t i = open; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      if (text[i] == '}' && --depth == 0) {
        close = i;
        break;
      }
    }
    if (close == std::string::npos) return;
    std::string inner = text.substr(open + 1, close - open - 1);
    text.replace(pos, close - pos + 1, inner);
  }
}

// Markup stripping shared by every parse attempt.
std::string strip_markup(std::string_view raw) {
  std::string s(raw);
  replace_all(s, "\\left", "");
  replace_all(s, "\\right", "");
  replace_all(s, "\\displaystyle", "");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  replace_all(s, "\\!", "");
  replace_all(s, "\\,", " ");
  replace_all(s, "\\;", " ");
  replace_all(s, "\\:", " ");
  replace_all(s, "\\quad", " ");
  replace_all(s, "{,}", "");
  replace_all(s, "$", "");
  for (std::string_view cmd : {"\\text", "\\mathrm", "\\textbf", "\\mathbf", "\\boxed"}) {
    unwrap_command(s, cmd);
  }
  // Unicode spellings of the symbolic grammar.
  replace_all(s, "−", "-");
  replace_all(s, "×", "*");
  replace_all(s, "÷", "/");
  replace_all(s, "·", "*");
  replace_all(s, "π", "\\pi");
  replace_all(s, "√", "\\sqrt");
  return trim(s);
}

std::string remove_spaces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (!is_space(c)) out.push_back(c);
  }
  return out;
}

std::string drop_thousands_separators(const std::string& compact) {
  static const std::regex kGrouped(R"(^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (!std::regex_match(compact, kGrouped)) return compact;
  std::string out;
  for (char c : compact) {
    if (c != ',') out.push_back(c);
  }
  return out;
}

std::optional<IntegerAnswer> parse_integer(const std::string& s) {
  static const std::regex kInt(R"(^[+-]?\d+$)");
  if (!std::regex_match(s, kInt)) return std::nullopt;
  bool negative = s[0] == '-';
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  while (start + 1 < s.size() && s[start] == '0') ++start;
  std::string digits = s.substr(start);
  if (digits == "0") negative = false;
  return IntegerAnswer{(negative ? "-" : "") + digits};
}

std::optional<std::int64_t> to_int64(const std::string& s) {
  std::int64_t value = 0;
  const char* begin = s.data();
  if (!s.empty() && s[0] == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<RationalAnswer> make_rational(const std::string& num_text, const std::string& den_text) {
  auto num = to_int64(num_text);
  auto den = to_int64(den_text);
  if (!num || !den || *den == 0) return std::nullopt;
  if (*num == INT64_MIN || *den == INT64_MIN) return std::nullopt;
  std::int64_t n = *num;
  std::int64_t d = *den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  return RationalAnswer{n, d};
}

std::optional<RationalAnswer> parse_rational(const std::string& s) {
  static const std::regex kSlash(R"(^([+-]?\d+)/([+-]?\d+)$)");
  static const std::regex kFrac(R"(^([+-]?)\\frac\{([+-]?\d+)\}\{([+-]?\d+)\}$)");
  static const std::regex kFracShort(R"(^([+-]?)\\frac(\d)(\d)$)");
  std::smatch m;
  if (std::regex_match(s, m, kSlash)) return make_rational(m[1].str(), m[2].str());
  if (std::regex_match(s, m, kFrac) || std::regex_match(s, m, kFracShort)) {
    auto r = make_rational(m[2].str(), m[3].str());
    if (r && m[1].str() == "-") r->numerator = -r->numerator;
    return r;
  }
  return std::nullopt;
}

std::optional<DecimalAnswer> parse_decimal(const std::string& s) {
  static const std::regex kDec(R"(^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$)");
  if (!std::regex_match(s, kDec)) return std::nullopt;
  double value = std::strtod(s.c_str(), nullptr);
  if (!std::isfinite(value)) return std::nullopt;
  return DecimalAnswer{value};
}

// Recursive-descent parser for the symbolic answer grammar over compact text.
class SymbolicParser {
 public:
  explicit SymbolicParser(std::string_view text) : text_(text) {}

  std::optional<SymExpr> parse() {
    auto expr = parse_sum();
    if (!expr || pos_ != text_.size()) return std::nullopt;
    return expr;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= text_.size(); }
  bool starts(std::string_view token) const { return text_.substr(pos_, token.size()) == token; }
  bool accept(std::string_view token) {
    if (!starts(token)) return false;
    pos_ += token.size();
    return true;
  }

  std::optional<SymExpr> parse_sum() {
    auto lhs = parse_product();
    if (!lhs) return std::nullopt;
    while (!at_end()) {
      SymExpr::Op op;
      if (accept("+")) {
        op = SymExpr::Op::add;
      } else if (accept("-")) {
        op = SymExpr::Op::sub;
      } else {
        break;
      }
      auto rhs = parse_product();
      if (!rhs) return std::nullopt;
      lhs = SymExpr::binary(op, std::move(*lhs), std::move(*rhs));
    }
    return lhs;
  }

  bool starts_atom() const {
    if (at_end()) return false;
    char c = text_[pos_];
    return c == '(' || c == '{' || c == '\\' || starts("pi") || starts("sqrt") || is_digit(c) ||
           c == '.';
  }

  std::optional<SymExpr> parse_product() {
    auto lhs = parse_unary();
    if (!lhs) return std::nullopt;
    while (!at_end()) {
      SymExpr::Op op;
      if (accept("**")) {
        // handled in parse_power; a bare "**" here is malformed
        return std::nullopt;
      }
      if (accept("*") || accept("\\times") || accept("\\cdot")) {
        op = SymExpr::Op::mul;
      } else if (accept("/") || accept("\\div")) {
        op = SymExpr::Op::div;
      } else if (starts_atom() && !is_digit(text_[pos_]) && text_[pos_] != '.') {
        op = SymExpr::Op::mul;  // implicit, e.g. 3\sqrt{3} or 2\pi
      } else {
        break;
      }
      auto rhs = parse_unary();
      if (!rhs) return std::nullopt;
      lhs = SymExpr::binary(op, std::move(*lhs), std::move(*rhs));
    }
    return lhs;
  }

  std::optional<SymExpr> parse_unary() {
    if (accept("-")) {
      auto inner = parse_unary();
      if (!inner) return std::nullopt;
      return SymExpr::unary(SymExpr::Op::neg, std::move(*inner));
    }
    if (accept("+")) return parse_unary();
    return parse_power();
  }

  std::optional<SymExpr> parse_power() {
    auto base = parse_atom();
    if (!base) return std::nullopt;
    if (accept("^") || accept("**")) {
      auto exponent = parse_unary();
      if (!exponent) return std::nullopt;
      return SymExpr::binary(SymExpr::Op::pow, std::move(*base), std::move(*exponent));
    }
    return base;
  }

  std::optional<SymExpr> parse_group(char open, char close) {
    if (!accept(std::string_view(&open, 1))) return std::nullopt;
    auto inner = parse_sum();
    if (!inner || !accept(std::string_view(&close, 1))) return std::nullopt;
    return inner;
  }

  std::optional<SymExpr> parse_number() {
    std::size_t start = pos_;
    while (!at_end() && is_digit(text_[pos_])) ++pos_;
    if (!at_end() && text_[pos_] == '.') {
      ++pos_;
      while (!at_end() && is_digit(text_[pos_])) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && text_[start] == '.')) {
      pos_ = start;
      return std::nullopt;
    }
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (!at_end() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t digits = pos_;
      while (!at_end() && is_digit(text_[pos_])) ++pos_;
      if (pos_ == digits) pos_ = save;
    }
    std::string number(text_.substr(start, pos_ - start));
    return SymExpr::number(std::strtod(number.c_str(), nullptr));
  }

  std::optional<SymExpr> parse_atom() {
    if (at_end()) return std::nullopt;
    char c = text_[pos_];
    if (c == '(') return parse_group('(', ')');
    if (c == '{') return parse_group('{', '}');
    if (is_digit(c) || c == '.') return parse_number();
    if (accept("\\pi") || accept("pi")) return SymExpr::pi();
    if (accept("\\sqrt")) {
      std::optional<SymExpr> degree;
      if (starts("[")) {
        degree = parse_group('[', ']');
        if (!degree) return std::nullopt;
      }
      std::optional<SymExpr> radicand;
      if (starts("{")) {
        radicand = parse_group('{', '}');
      } else if (starts("(")) {
        radicand = parse_group('(', ')');
      } else if (!at_end() && is_digit(text_[pos_])) {
        // \sqrt3 takes a single digit
        radicand = SymExpr::number(text_[pos_++] - '0');
      } else {
        radicand = parse_atom();
      }
      if (!radicand) return std::nullopt;
      if (degree) {
        return SymExpr::binary(
            SymExpr::Op::pow, std::move(*radicand),
            SymExpr::binary(SymExpr::Op::div, SymExpr::number(1.0), std::move(*degree)));
      }
      return SymExpr::unary(SymExpr::Op::sqrt, std::move(*radicand));
    }
    if (accept("sqrt")) {
      auto inner = parse_group('(', ')');
      if (!inner) return std::nullopt;
      return SymExpr::unary(SymExpr::Op::sqrt, std::move(*inner));
    }
    if (accept("\\frac")) {
      auto num = parse_group('{', '}');
      if (!num) return std::nullopt;
      auto den = parse_group('{', '}');
      if (!den) return std::nullopt;
      return SymExpr::binary(SymExpr::Op::div, std::move(*num), std::move(*den));
    }
    return std::nullopt;
  }
};

bool symbolic_has_operator(const SymExpr& expr) { return expr.op != SymExpr::Op::number; }

std::string canonical_literal(std::string_view text) {
  std::string collapsed;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(c);
  }
  // Spaces next to separators and brackets carry no meaning: "[1, 2]" == "[1,2]".
  static constexpr std::string_view kTight = ",;:()[]{}";
  std::string out;
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    char c = collapsed[i];
    if (c == ' ') {
      char prev = out.empty() ? '\0' : out.back();
      char next = i + 1 < collapsed.size() ? collapsed[i + 1] : '\0';
      if (kTight.find(prev) != std::string_view::npos ||
          kTight.find(next) != std::string_view::npos) {
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void render_expr(const SymExpr& expr, std::string& out) {
  using Op = SymExpr::Op;
  auto binary = [&](std::string_view op) {
    out.push_back('(');
    render_expr(expr.args.at(0), out);
    out += op;
    render_expr(expr.args.at(1), out);
    out.push_back(')');
  };
  switch (expr.op) {
    case Op::number: {
      double v = expr.value;
      if (std::floor(v) == v && std::fabs(v) < 1e15) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
        out.append(buf, res.ptr);
      } else {
        out += format_decimal(v);
      }
      break;
    }
    case Op::pi: out += "pi"; break;
    case Op::neg:
      out += "(-";
      render_expr(expr.args.at(0), out);
      out += ")";
      break;
    case Op::add: binary("+"); break;
    case Op::sub: binary("-"); break;
    case Op::mul: binary("*"); break;
    case Op::div: binary("/"); break;
    case Op::pow: binary("^"); break;
    case Op::sqrt:
      out += "sqrt(";
      render_expr(expr.args.at(0), out);
      out += ")";
      break;
  }
}

std::optional<long double> finite_real(const AnswerForm& form) {
  auto value = form.to_real();
  if (!value || !std::isfinite(*value)) return std::nullopt;
  return value;
}

// A literal may still hide a number behind an assignment prefix ("b = -3")
// or trailing punctuation.
std::optional<AnswerForm> reparse_literal(const AnswerForm& literal) {
  std::string text = std::get<LiteralAnswer>(literal.value).text;
  auto eq = text.rfind('=');
  if (eq != std::string::npos) text = text.substr(eq + 1);
  text = trim(text);
  while (!text.empty() && (text.back() == '.' || text.back() == ',')) text.pop_back();
  AnswerForm form = parse_answer(text);
  if (!form.is_numeric()) return std::nullopt;
  return form;
}

}  // namespace

std::string format_decimal(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string extract_boxed(std::string_view solution_text) {
  static constexpr std::string_view kMarker = "\\boxed";
  std::optional<std::string> last;
  std::size_t pos = 0;
  while ((pos = solution_text.find(kMarker, pos)) != std::string_view::npos) {
    std::size_t i = pos + kMarker.size();
    pos = i;
    while (i < solution_text.size() && solution_text[i] == ' ') ++i;
    if (i >= solution_text.size() || solution_text[i] != '{') continue;
    int depth = 0;
    std::size_t open = i;
    for (; i < solution_text.size(); ++i) {
      char c = solution_text[i];
      if (c == '\\' && i + 1 < solution_text.size() &&
          (solution_text[i + 1] == '{' || solution_text[i + 1] == '}')) {
        ++i;  // escaped brace is content
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) {
        last = std::string(solution_text.substr(open + 1, i - open - 1));
        break;
      }
    }
  }
  if (!last) throw Error(ErrorCode::no_boxed_answer, "no \\boxed{...} group in solution");
  return *last;
}

AnswerForm parse_answer(std::string_view raw) {
  AnswerForm form;
  std::string stripped = strip_markup(raw);
  form.raw = stripped;
  std::string compact = drop_thousands_separators(remove_spaces(stripped));

  if (auto v = parse_integer(compact)) {
    form.value = *v;
  } else if (auto r = parse_rational(compact)) {
    form.value = *r;
  } else if (auto d = parse_decimal(compact)) {
    form.value = *d;
  } else if (auto e = SymbolicParser(compact).parse();
             e && symbolic_has_operator(*e) && std::isfinite(e->evaluate())) {
    form.value = SymbolicAnswer{std::move(*e)};
  } else {
    form.value = LiteralAnswer{canonical_literal(stripped)};
  }
  return form;
}

AnswerForm normalize_stdout(std::string_view stdout_text) {
  std::string_view rest = stdout_text;
  while (!rest.empty()) {
    std::size_t nl = rest.find_last_of('\n', rest.size() - 1);
    std::string_view line = nl == std::string_view::npos ? rest : rest.substr(nl + 1);
    std::string trimmed = trim(line);
    if (!trimmed.empty()) return parse_answer(trimmed);
    if (nl == std::string_view::npos) break;
    rest = rest.substr(0, nl);
  }
  throw Error(ErrorCode::empty_output, "program printed no non-empty line");
}

bool answers_match(const AnswerForm& a, const AnswerForm& b, double rel_tol) {
  if (a.is_numeric() && b.is_numeric()) {
    auto x = finite_real(a);
    auto y = finite_real(b);
    if (!x || !y) return false;
    long double scale = std::max({1.0L, std::fabs(*x), std::fabs(*y)});
    return std::fabs(*x - *y) <= static_cast<long double>(rel_tol) * scale;
  }
  if (!a.is_numeric() && !b.is_numeric()) {
    return lowercase(std::get<LiteralAnswer>(a.value).text) ==
           lowercase(std::get<LiteralAnswer>(b.value).text);
  }
  const AnswerForm& literal = a.is_numeric() ? b : a;
  const AnswerForm& numeric = a.is_numeric() ? a : b;
  auto reparsed = reparse_literal(literal);
  return reparsed && answers_match(*reparsed, numeric, rel_tol);
}

std::string render(const AnswerForm& form) {
  struct Visitor {
    std::string operator()(const IntegerAnswer& a) const { return a.digits; }
    std::string operator()(const RationalAnswer& a) const {
      return std::to_string(a.numerator) + "/" + std::to_string(a.denominator);
    }
    std::string operator()(const DecimalAnswer& a) const { return format_decimal(a.value); }
    std::string operator()(const SymbolicAnswer& a) const {
      std::string out;
      render_expr(a.expr, out);
      return out;
    }
    std::string operator()(const LiteralAnswer& a) const { return a.text; }
  };
  return std::visit(Visitor{}, form.value);
}

}  // namespace caco::answer
