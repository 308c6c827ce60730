#include "python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace caco::py {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 48> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "=",  "!",
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) continue;
      }
      at_line_start_ = false;
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
      } else if (c == '\\') {
        ++pos_;
        if (!consume_newline()) fail("unexpected character after line continuation character");
        if (pos_ >= src_.size()) fail("unexpected EOF while parsing");
      } else if (c == '\n' || c == '\r') {
        consume_newline();
        if (depth_ == 0 && line_has_tokens_) emit(TokenType::newline, "");
        line_has_tokens_ = false;
        at_line_start_ = true;
      } else if (is_string_start()) {
        lex_string();
      } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        lex_number();
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        emit(TokenType::name, std::string(src_.substr(start, pos_ - start)));
      } else {
        lex_operator();
      }
    }
    if (depth_ > 0) fail("unexpected EOF: unclosed bracket");
    if (line_has_tokens_) emit(TokenType::newline, "");
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenType::dedent, "");
    }
    emit(TokenType::end, "");
    return std::move(tokens_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  bool line_has_tokens_ = false;
  std::vector<int> indents_;
  std::vector<char> brackets_;
  std::vector<Token> tokens_;

  [[noreturn]] void fail(const std::string& message) const { throw SyntaxIssue{line_, message}; }

  void emit(TokenType type, std::string text, int line = 0) {
    Token t;
    t.type = type;
    t.text = std::move(text);
    t.line = line ? line : line_;
    tokens_.push_back(std::move(t));
    if (type != TokenType::newline && type != TokenType::indent && type != TokenType::dedent) {
      line_has_tokens_ = true;
    }
  }

  bool consume_newline() {
    if (pos_ >= src_.size()) return true;  // continuation at EOF
    if (src_[pos_] == '\r') {
      ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
    } else if (src_[pos_] == '\n') {
      ++pos_;
    } else {
      return false;
    }
    ++line_;
    return true;
  }

  // Measures the indentation of a logical line start. Returns false when the
  // line is blank or comment-only (no tokens, no indentation change).
  bool handle_indentation() {
    int column = 0;
    std::size_t p = pos_;
    while (p < src_.size()) {
      char c = src_[p];
      if (c == ' ') {
        ++column;
      } else if (c == '\t') {
        column = (column / 8 + 1) * 8;
      } else if (c == '\f') {
        column = 0;
      } else {
        break;
      }
      ++p;
    }
    if (p >= src_.size() || src_[p] == '#' || src_[p] == '\n' || src_[p] == '\r') {
      // Blank or comment-only: skip to end of line without emitting anything.
      pos_ = p;
      while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
      if (pos_ < src_.size()) consume_newline();
      return false;
    }
    pos_ = p;
    at_line_start_ = false;
    if (column > indents_.back()) {
      indents_.push_back(column);
      emit(TokenType::indent, "");
    } else {
      while (column < indents_.back()) {
        indents_.pop_back();
        emit(TokenType::dedent, "");
      }
      if (column != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    line_has_tokens_ = false;
    return true;
  }

  bool is_string_start() const {
    std::size_t p = pos_;
    std::size_t n = 0;
    while (p < src_.size() && n < 3 && std::isalpha(static_cast<unsigned char>(src_[p]))) {
      ++p;
      ++n;
    }
    if (p >= src_.size() || (src_[p] != '\'' && src_[p] != '"')) return false;
    if (n == 0) return true;
    std::string prefix;
    for (std::size_t i = pos_; i < p; ++i) {
      prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src_[i]))));
    }
    static constexpr std::array<std::string_view, 9> kPrefixes = {"r",  "u",  "b",  "f", "br",
                                                                 "rb", "fr", "rf", ""};
    return std::find(kPrefixes.begin(), kPrefixes.end(), prefix) != kPrefixes.end();
  }

  void lex_string() {
    std::size_t start = pos_;
    int start_line = line_;
    std::string prefix;
    while (src_[pos_] != '\'' && src_[pos_] != '"') {
      prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_]))));
      ++pos_;
    }
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    std::size_t qlen = triple ? 3 : 1;
    pos_ += qlen;
    std::size_t body_start = pos_;
    while (true) {
      if (pos_ >= src_.size()) {
        line_ = start_line;
        fail(triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
      }
      char c = src_[pos_];
      if (c == '\\') {
        ++pos_;
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n' || src_[pos_] == '\r') {
            consume_newline();
          } else {
            ++pos_;
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) {
          line_ = start_line;
          fail("unterminated string literal");
        }
        consume_newline();
        continue;
      }
      if (c == quote) {
        if (!triple) break;
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) break;
      }
      ++pos_;
    }
    std::size_t body_end = pos_;
    pos_ += qlen;
    Token t;
    t.type = TokenType::string;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.line = start_line;
    t.prefix = prefix;
    t.body = std::string(src_.substr(body_start, body_end - body_start));
    tokens_.push_back(std::move(t));
    line_has_tokens_ = true;
  }

  // Digits with single underscores between them.
  std::size_t scan_digits(bool (*ok)(char)) {
    std::size_t count = 0;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (ok(c)) {
        ++pos_;
        ++count;
      } else if (c == '_' && count > 0 && pos_ + 1 < src_.size() && ok(src_[pos_ + 1])) {
        ++pos_;
      } else if (c == '_') {
        fail("invalid decimal literal");
      } else {
        break;
      }
    }
    return count;
  }

  void lex_number() {
    std::size_t start = pos_;
    char c = src_[pos_];
    if (c == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      char kind = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])));
      pos_ += 2;
      if (pos_ < src_.size() && src_[pos_] == '_') ++pos_;
      bool (*ok)(char) = kind == 'x'   ? +[](char d) { return std::isxdigit(static_cast<unsigned char>(d)) != 0; }
                         : kind == 'o' ? +[](char d) { return d >= '0' && d <= '7'; }
                                       : +[](char d) { return d == '0' || d == '1'; };
      if (scan_digits(ok) == 0) fail("invalid number literal");
    } else {
      std::size_t int_digits = scan_digits(+[](char d) { return is_digit(d); });
      bool is_float = false;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        is_float = true;
        if (pos_ < src_.size() && is_digit(src_[pos_])) scan_digits(+[](char d) { return is_digit(d); });
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (pos_ < src_.size() && is_digit(src_[pos_])) {
          scan_digits(+[](char d) { return is_digit(d); });
          is_float = true;
        } else {
          pos_ = save;  // e.g. "1else": the letters start a keyword
        }
      }
      bool imaginary = pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J');
      if (imaginary) ++pos_;
      if (!is_float && !imaginary && int_digits > 1 && src_[start] == '0') {
        for (std::size_t i = start; i < pos_; ++i) {
          if (src_[i] != '0' && src_[i] != '_') {
            fail("leading zeros in decimal integer literals are not permitted");
          }
        }
      }
    }
    if (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
      // Python still accepts a keyword glued to a number, as in "1if x else 2".
      std::size_t end = pos_;
      while (end < src_.size() && is_ident_char(static_cast<unsigned char>(src_[end]))) ++end;
      std::string_view word = src_.substr(pos_, end - pos_);
      static constexpr std::array<std::string_view, 8> kGlued = {"and", "else", "for", "if",
                                                                 "in",  "is",   "not", "or"};
      if (std::find(kGlued.begin(), kGlued.end(), word) == kGlued.end()) fail("invalid decimal literal");
    }
    emit(TokenType::number, std::string(src_.substr(start, pos_ - start)));
  }

  void lex_operator() {
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        if (op == "!") break;
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") {
          ++depth_;
          brackets_.push_back(op[0]);
        } else if (op == ")" || op == "]" || op == "}") {
          char open = op == ")" ? '(' : op == "]" ? '[' : '{';
          if (brackets_.empty()) fail("unmatched '" + std::string(op) + "'");
          if (brackets_.back() != open) {
            fail("closing parenthesis '" + std::string(op) + "' does not match opening '" +
                 std::string(1, brackets_.back()) + "'");
          }
          brackets_.pop_back();
          --depth_;
        }
        emit(TokenType::op, std::string(op));
        return;
      }
    }
    fail(std::string("invalid character '") + src_[pos_] + "'");
  }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace caco::py
