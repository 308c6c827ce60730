#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caco/core/answer_form.hpp"

namespace caco {

enum class Origin { seed_math, seed_algo, sampled };

std::string_view to_string(Origin origin);
std::optional<Origin> origin_from_string(std::string_view text);

/// Provenance attached to a candidate. Known keys are typed; everything else
/// (execution stdout, variant index, audit notes) lives in `attrs`.
struct ProgramMeta {
  std::string source;                       // dataset name
  std::optional<double> solve_rate;         // in [0, 1]
  std::optional<std::string> ground_truth;  // reference answer text
  std::map<std::string, std::string> attrs;

  friend bool operator==(const ProgramMeta&, const ProgramMeta&) = default;
};

inline constexpr std::string_view kAttrStdout = "stdout";
inline constexpr std::string_view kAttrVariant = "variant";

struct CandidateProgram {
  std::string id;  // program_id(source)
  std::string source;
  Origin origin = Origin::sampled;
  ProgramMeta meta;

  /// Builds a candidate with its id derived from the source.
  static CandidateProgram make(std::string source, Origin origin, ProgramMeta meta = {});

  std::optional<std::string> attr(std::string_view key) const;

  friend bool operator==(const CandidateProgram&, const CandidateProgram&) = default;
};

enum class ExecStatus { ok, runtime_error, timeout, output_overflow, setup_error };

std::string_view to_string(ExecStatus status);

struct ExceptionInfo {
  std::string class_name;
  std::string message;
  friend bool operator==(const ExceptionInfo&, const ExceptionInfo&) = default;
};

struct ExecutionResult {
  ExecStatus status = ExecStatus::setup_error;
  std::string stdout_text;
  bool truncated = false;
  long long duration_ms = 0;
  std::optional<int> exit_code;
  std::optional<ExceptionInfo> exception;  // instrumented mode only
  std::string stderr_text;                 // capped, diagnostic only
  std::string detail;                      // setup-error explanation
};

struct StructuralFacts {
  std::vector<std::string> input_keys;
  std::optional<std::string> called_function;
  int noncomment_lines = 0;
  bool has_output_print = false;

  friend bool operator==(const StructuralFacts&, const StructuralFacts&) = default;
};

enum class CheckId {
  syntax_ok,
  has_input_mapping,
  calls_with_input,
  assigns_output,
  prints_output,
  min_lines,
  keys_used,
};

inline constexpr CheckId kAllChecks[] = {
    CheckId::syntax_ok,     CheckId::has_input_mapping, CheckId::calls_with_input,
    CheckId::assigns_output, CheckId::prints_output,    CheckId::min_lines,
    CheckId::keys_used,
};

std::string_view to_string(CheckId id);

struct CheckResult {
  CheckId id;
  bool passed = false;
  std::string detail;
  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed = false;
  StructuralFacts facts;

  /// First failing check, if any.
  std::optional<CheckId> first_failure() const;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct Problem {
  std::string text;
  friend bool operator==(const Problem&, const Problem&) = default;
};

struct Solution {
  std::string text;
  std::optional<std::string> boxed_raw;
  std::optional<AnswerForm> answer;  // present iff boxed_raw parsed
  friend bool operator==(const Solution&, const Solution&) = default;
};

class Verdict {
 public:
  Verdict() = default;
  Verdict(bool answer_match, bool cot_consistent)
      : answer_match_(answer_match), cot_consistent_(cot_consistent) {}

  bool answer_match() const { return answer_match_; }
  bool cot_consistent() const { return cot_consistent_; }
  bool accepted() const { return answer_match_ && cot_consistent_; }

  friend bool operator==(const Verdict&, const Verdict&) = default;

 private:
  bool answer_match_ = false;
  bool cot_consistent_ = false;
};

struct LineageEntry {
  std::string stage;
  std::string timestamp;  // ISO-8601 UTC
  friend bool operator==(const LineageEntry&, const LineageEntry&) = default;
};

/// One (problem, solution, code) tuple with its verdict. Intermediate stage
/// files carry the same shape with the not-yet-produced parts absent.
struct DatasetRecord {
  std::optional<Problem> problem;
  std::optional<Solution> solution;
  CandidateProgram program;
  std::optional<Verdict> verdict;
  std::vector<LineageEntry> lineage;

  /// Stable ordering key: program id plus variant index.
  std::string key() const;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 1.0;
  int top_k = 0;  // 0 disables
  double min_p = 0.0;
  int max_tokens = 2048;
  int n_samples = 1;

  bool valid() const;
  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

}  // namespace caco
