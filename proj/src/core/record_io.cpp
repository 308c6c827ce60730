#include "caco/core/record_io.hpp"

#include "caco/answer/answer_engine.hpp"
#include "caco/core/error.hpp"
#include "caco/core/hash.hpp"

namespace caco {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::parse_error, what); }

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) corrupt(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) corrupt(std::string("field '") + name + "' is not a string");
  return v.get<std::string>();
}

bool bool_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_boolean()) corrupt(std::string("field '") + name + "' is not a boolean");
  return v.get<bool>();
}

}  // namespace

json meta_to_json(const ProgramMeta& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta.attrs) j[k] = v;
  j["source"] = meta.source;
  if (meta.solve_rate) j["solve_rate"] = *meta.solve_rate;
  if (meta.ground_truth) j["ground_truth"] = *meta.ground_truth;
  return j;
}

ProgramMeta meta_from_json(const json& j) {
  if (!j.is_object()) corrupt("meta is not an object");
  ProgramMeta meta;
  for (const auto& [k, v] : j.items()) {
    if (k == "source") {
      if (!v.is_string()) corrupt("meta.source is not a string");
      meta.source = v.get<std::string>();
    } else if (k == "solve_rate") {
      if (!v.is_number()) corrupt("meta.solve_rate is not a number");
      double rate = v.get<double>();
      if (rate < 0.0 || rate > 1.0) corrupt("meta.solve_rate outside [0,1]");
      meta.solve_rate = rate;
    } else if (k == "ground_truth") {
      if (v.is_string()) {
        meta.ground_truth = v.get<std::string>();
      } else if (!v.is_null()) {
        meta.ground_truth = v.dump();
      }
    } else {
      meta.attrs[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return meta;
}

json record_to_json(const DatasetRecord& record) {
  json j;
  j["id"] = record.program.id;
  j["problem"] = record.problem ? json(record.problem->text) : json(nullptr);
  if (record.solution) {
    json s;
    s["text"] = record.solution->text;
    s["boxed_raw"] = record.solution->boxed_raw ? json(*record.solution->boxed_raw) : json(nullptr);
    if (record.solution->answer) {
      s["answer"] = {{"kind", to_string(record.solution->answer->kind())},
                     {"value", answer::render(*record.solution->answer)}};
    } else {
      s["answer"] = nullptr;
    }
    j["solution"] = std::move(s);
  } else {
    j["solution"] = nullptr;
  }
  j["code"] = record.program.source;
  j["origin"] = to_string(record.program.origin);
  j["meta"] = meta_to_json(record.program.meta);
  if (record.verdict) {
    j["verdict"] = {{"answer_match", record.verdict->answer_match()},
                    {"cot_consistent", record.verdict->cot_consistent()},
                    {"accepted", record.verdict->accepted()}};
  } else {
    j["verdict"] = nullptr;
  }
  json lineage = json::array();
  for (const auto& entry : record.lineage) {
    lineage.push_back({{"stage", entry.stage}, {"timestamp", entry.timestamp}});
  }
  j["lineage"] = std::move(lineage);
  return j;
}

DatasetRecord record_from_json(const json& j) {
  if (!j.is_object()) corrupt("record is not an object");
  DatasetRecord record;
  record.program.source = string_field(j, "code");
  record.program.id = string_field(j, "id");
  if (record.program.id != program_id(record.program.source)) corrupt("id does not match code");
  auto origin = origin_from_string(string_field(j, "origin"));
  if (!origin) corrupt("unknown origin");
  record.program.origin = *origin;
  record.program.meta = meta_from_json(field(j, "meta"));

  const json& problem = field(j, "problem");
  if (problem.is_string()) {
    record.problem = Problem{problem.get<std::string>()};
  } else if (!problem.is_null()) {
    corrupt("problem is neither text nor null");
  }

  const json& solution = field(j, "solution");
  if (solution.is_object()) {
    Solution s;
    s.text = string_field(solution, "text");
    const json& boxed = field(solution, "boxed_raw");
    if (boxed.is_string()) {
      s.boxed_raw = boxed.get<std::string>();
      s.answer = answer::parse_answer(*s.boxed_raw);
    } else if (!boxed.is_null()) {
      corrupt("solution.boxed_raw is neither text nor null");
    }
    record.solution = std::move(s);
  } else if (!solution.is_null()) {
    corrupt("solution is neither object nor null");
  }

  const json& verdict = field(j, "verdict");
  if (verdict.is_object()) {
    Verdict v(bool_field(verdict, "answer_match"), bool_field(verdict, "cot_consistent"));
    if (v.accepted() != bool_field(verdict, "accepted")) corrupt("verdict.accepted inconsistent");
    record.verdict = v;
  } else if (!verdict.is_null()) {
    corrupt("verdict is neither object nor null");
  }

  const json& lineage = field(j, "lineage");
  if (!lineage.is_array()) corrupt("lineage is not an array");
  for (const auto& entry : lineage) {
    record.lineage.push_back({string_field(entry, "stage"), string_field(entry, "timestamp")});
  }
  return record;
}

std::string serialize_record(const DatasetRecord& record) {
  return record_to_json(record).dump(-1, ' ', false, json::error_handler_t::replace);
}

DatasetRecord parse_record(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) corrupt("malformed JSON line");
  return record_from_json(j);
}

DatasetRecord roundtrip(const DatasetRecord& record) {
  return parse_record(serialize_record(record));
}

}  // namespace caco
