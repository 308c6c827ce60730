#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace caco {

/// Expression tree for symbolic answers such as 3\sqrt{3} or 2\pi/3.
struct SymExpr {
  enum class Op { number, pi, neg, add, sub, mul, div, pow, sqrt };

  Op op = Op::number;
  double value = 0.0;  // only for Op::number
  std::vector<SymExpr> args;

  static SymExpr number(double v) { return SymExpr{Op::number, v, {}}; }
  static SymExpr pi() { return SymExpr{Op::pi, 0.0, {}}; }
  static SymExpr unary(Op op, SymExpr a) { return SymExpr{op, 0.0, {std::move(a)}}; }
  static SymExpr binary(Op op, SymExpr a, SymExpr b) {
    return SymExpr{op, 0.0, {std::move(a), std::move(b)}};
  }

  long double evaluate() const;
  friend bool operator==(const SymExpr&, const SymExpr&) = default;
};

struct IntegerAnswer {
  std::string digits;  // canonical: optional '-', no leading zeros, "0" for zero
  friend bool operator==(const IntegerAnswer&, const IntegerAnswer&) = default;
};

struct RationalAnswer {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;  // > 0, gcd(numerator, denominator) == 1
  friend bool operator==(const RationalAnswer&, const RationalAnswer&) = default;
};

struct DecimalAnswer {
  double value = 0.0;
  friend bool operator==(const DecimalAnswer&, const DecimalAnswer&) = default;
};

struct SymbolicAnswer {
  SymExpr expr;
  friend bool operator==(const SymbolicAnswer&, const SymbolicAnswer&) = default;
};

struct LiteralAnswer {
  std::string text;
  friend bool operator==(const LiteralAnswer&, const LiteralAnswer&) = default;
};

enum class AnswerKind { integer, rational, decimal, symbolic, literal };

std::string_view to_string(AnswerKind kind);

/// A normalized final answer. `raw` keeps the text the value was parsed from
/// so equivalence decisions can be audited.
struct AnswerForm {
  std::variant<IntegerAnswer, RationalAnswer, DecimalAnswer, SymbolicAnswer, LiteralAnswer> value;
  std::string raw;

  AnswerKind kind() const { return static_cast<AnswerKind>(value.index()); }
  bool is_numeric() const { return kind() != AnswerKind::literal; }

  /// Real value of a numeric form; absent for literals.
  std::optional<long double> to_real() const;

  /// Payload equality, ignoring `raw`.
  bool same_value(const AnswerForm& other) const { return value == other.value; }

  friend bool operator==(const AnswerForm&, const AnswerForm&) = default;
};

}  // namespace caco
