#include "caco/core/types.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "caco/core/hash.hpp"

namespace caco {

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::seed_math: return "seed-math";
    case Origin::seed_algo: return "seed-algo";
    case Origin::sampled: return "sampled";
  }
  return "sampled";
}

std::optional<Origin> origin_from_string(std::string_view text) {
  if (text == "seed-math") return Origin::seed_math;
  if (text == "seed-algo") return Origin::seed_algo;
  if (text == "sampled") return Origin::sampled;
  return std::nullopt;
}

std::string_view to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::ok: return "ok";
    case ExecStatus::runtime_error: return "runtime-error";
    case ExecStatus::timeout: return "timeout";
    case ExecStatus::output_overflow: return "output-overflow";
    case ExecStatus::setup_error: return "setup-error";
  }
  return "setup-error";
}

std::string_view to_string(CheckId id) {
  switch (id) {
    case CheckId::syntax_ok: return "syntax-ok";
    case CheckId::has_input_mapping: return "has-input-mapping";
    case CheckId::calls_with_input: return "calls-with-input";
    case CheckId::assigns_output: return "assigns-output";
    case CheckId::prints_output: return "prints-output";
    case CheckId::min_lines: return "min-lines";
    case CheckId::keys_used: return "keys-used";
  }
  return "syntax-ok";
}

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::integer: return "integer";
    case AnswerKind::rational: return "rational";
    case AnswerKind::decimal: return "decimal";
    case AnswerKind::symbolic: return "symbolic";
    case AnswerKind::literal: return "literal";
  }
  return "literal";
}

CandidateProgram CandidateProgram::make(std::string source, Origin origin, ProgramMeta meta) {
  CandidateProgram program;
  program.id = program_id(source);
  program.source = std::move(source);
  program.origin = origin;
  program.meta = std::move(meta);
  return program;
}

std::optional<std::string> CandidateProgram::attr(std::string_view key) const {
  auto it = meta.attrs.find(std::string(key));
  if (it == meta.attrs.end()) return std::nullopt;
  return it->second;
}

std::optional<CheckId> ValidationReport::first_failure() const {
  for (const auto& check : checks) {
    if (!check.passed) return check.id;
  }
  return std::nullopt;
}

std::string DatasetRecord::key() const {
  auto variant = program.attr(kAttrVariant);
  if (!variant || *variant == "0") return program.id;
  char buf[32];
  std::snprintf(buf, sizeof buf, "#%06ld", std::strtol(variant->c_str(), nullptr, 10));
  return program.id + buf;
}

bool SamplingParams::valid() const {
  return temperature >= 0.0 && top_p > 0.0 && top_p <= 1.0 && top_k >= 0 && min_p >= 0.0 &&
         min_p < 1.0 && max_tokens > 0 && n_samples > 0;
}

long double SymExpr::evaluate() const {
  switch (op) {
    case Op::number: return value;
    case Op::pi: return std::numbers::pi_v<long double>;
    case Op::neg: return -args.at(0).evaluate();
    case Op::add: return args.at(0).evaluate() + args.at(1).evaluate();
    case Op::sub: return args.at(0).evaluate() - args.at(1).evaluate();
    case Op::mul: return args.at(0).evaluate() * args.at(1).evaluate();
    case Op::div: return args.at(0).evaluate() / args.at(1).evaluate();
    case Op::pow: return std::pow(args.at(0).evaluate(), args.at(1).evaluate());
    case Op::sqrt: return std::sqrt(args.at(0).evaluate());
  }
  return NAN;
}

std::optional<long double> AnswerForm::to_real() const {
  struct Visitor {
    std::optional<long double> operator()(const IntegerAnswer& a) const {
      return std::strtold(a.digits.c_str(), nullptr);
    }
    std::optional<long double> operator()(const RationalAnswer& a) const {
      return static_cast<long double>(a.numerator) / static_cast<long double>(a.denominator);
    }
    std::optional<long double> operator()(const DecimalAnswer& a) const { return a.value; }
    std::optional<long double> operator()(const SymbolicAnswer& a) const {
      return a.expr.evaluate();
    }
    std::optional<long double> operator()(const LiteralAnswer&) const { return std::nullopt; }
  };
  return std::visit(Visitor{}, value);
}

}  // namespace caco
