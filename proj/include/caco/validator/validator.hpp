#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "caco/core/types.hpp"

namespace caco::validator {

inline constexpr int kDefaultMinLines = 6;

/// Template facts of a candidate: the keys of the module-level dict literal
/// bound to `input`, the function whose `**input` call is bound to `output`,
/// the non-comment line count and whether `print(output)` appears.
/// Throws Error(syntax_error) when the source does not parse.
StructuralFacts parse_structure(const std::string& source);

/// Lines that are neither blank nor comment-only. Docstring lines count.
int count_noncomment_lines(std::string_view source);

/// Input keys that the program never uses, in mapping order. A key is used
/// when the called function binds it to a parameter that occurs in its body
/// (directly or through an occurring **kwargs), or when the program reads
/// input["key"] / input.get("key") somewhere.
/// Throws Error(syntax_error) when the source does not parse.
std::vector<std::string> unused_input_keys(const std::string& source);

/// Runs every CheckId in order. Never throws and never executes the source.
ValidationReport validate(const std::string& source, int min_lines = kDefaultMinLines);

}  // namespace caco::validator
