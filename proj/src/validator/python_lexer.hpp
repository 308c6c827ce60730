#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace caco::py {

enum class TokenType { name, number, string, op, newline, indent, dedent, end };

struct Token {
  TokenType type = TokenType::end;
  std::string text;    // full spelling; for strings includes prefix and quotes
  int line = 0;
  // Strings only.
  std::string prefix;  // lowercased prefix letters
  std::string body;    // content between the quotes, undecoded
};

/// Thrown by the lexer and parser; converted to Error(syntax_error) at the
/// public boundary.
struct SyntaxIssue {
  int line;
  std::string message;
};

/// Splits source into tokens with INDENT/DEDENT bookkeeping.
/// Throws SyntaxIssue on malformed input.
std::vector<Token> tokenize(std::string_view source);

}  // namespace caco::py
