#pragma once

#include <string>
#include <string_view>

#include "caco/core/answer_form.hpp"

namespace caco::answer {

inline constexpr double kDefaultRelTol = 1e-6;

/// Contents of the last \boxed{...} group, nested braces kept verbatim.
/// Throws Error(no_boxed_answer) when the text has none.
std::string extract_boxed(std::string_view solution_text);

/// Parses answer text, trying integer, rational, decimal, symbolic and
/// finally literal. Never fails.
AnswerForm parse_answer(std::string_view raw);

/// parse_answer applied to the last non-empty line of program output.
/// Throws Error(empty_output) when every line is blank.
AnswerForm normalize_stdout(std::string_view stdout_text);

/// Numeric forms match when |x - y| <= rel_tol * max(1, |x|, |y|); literals
/// match after case folding and whitespace canonicalization.
bool answers_match(const AnswerForm& a, const AnswerForm& b, double rel_tol = kDefaultRelTol);

/// Canonical text for a form; parse_answer(render(f)) has the same value as f
/// for every numeric form.
std::string render(const AnswerForm& form);

/// Shortest round-trip text for a double, always containing '.' or an exponent.
std::string format_decimal(double value);

}  // namespace caco::answer
