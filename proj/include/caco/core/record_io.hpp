#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "caco/core/types.hpp"

namespace caco {

// Line-delimited JSON record format. Field names: id, problem, solution,
// code, origin, meta, verdict{answer_match, cot_consistent, accepted},
// lineage[{stage, timestamp}].

nlohmann::json record_to_json(const DatasetRecord& record);

/// Throws Error(parse_error) on missing fields, wrong types, an unknown
/// origin, or an id that does not match the code.
DatasetRecord record_from_json(const nlohmann::json& j);

/// Single line, no trailing newline.
std::string serialize_record(const DatasetRecord& record);
DatasetRecord parse_record(std::string_view line);

/// serialize then parse.
DatasetRecord roundtrip(const DatasetRecord& record);

nlohmann::json meta_to_json(const ProgramMeta& meta);
ProgramMeta meta_from_json(const nlohmann::json& j);

}  // namespace caco
