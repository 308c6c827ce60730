#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "caco/core/types.hpp"

namespace caco::store {

/// Stage graph in execution order; also the row order of funnel reports.
inline constexpr std::string_view kStages[] = {"unify",   "filter-seed", "sample", "filter-sampled",
                                               "reverse", "solve",       "verify"};

/// Every rejection reason a stage may record.
inline constexpr std::string_view kRejectReasons[] = {
    "syntax-ok",       "has-input-mapping", "calls-with-input", "assigns-output",
    "prints-output",   "min-lines",         "keys-used",        "timeout",
    "runtime-error",   "output-overflow",   "setup-error",      "output-mismatch",
    "empty-output",    "completion-failed", "duplicate",        "empty-problem",
    "no-boxed-answer", "answer-mismatch",   "cot-inconsistent", "judge-unparseable",
    "solve-rate",
};

bool is_known_reason(std::string_view reason);

struct StageCounts {
  long long in = 0;
  long long out = 0;
  std::map<std::string, long long> rejected;

  long long rejected_total() const;
  bool conserved() const { return in == out + rejected_total(); }
  friend bool operator==(const StageCounts&, const StageCounts&) = default;
};

struct Checkpoint {
  std::string stage;
  bool complete = false;
  std::size_t cursor = 0;           // next work item index
  StageCounts counts;
  std::string processed_digest;     // chained digest of committed record keys
  std::string input_digest;         // identifies the inputs the stage ran on
  std::size_t out_bytes = 0;        // committed length of out.jsonl
  std::size_t rejects_bytes = 0;    // committed length of rejects.jsonl

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

nlohmann::json checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Written to a temp file and renamed into place.
void write_checkpoint(const std::string& path, const Checkpoint& cp);
/// Empty when the file does not exist. Throws Error(parse_error) when corrupt.
std::optional<Checkpoint> read_checkpoint(const std::string& path);

/// Appends one line per record; each line goes out in a single write.
/// Throws Error(storage_io).
void append(const std::string& path, const std::vector<DatasetRecord>& records);
void append_lines(const std::string& path, const std::vector<std::string>& lines);

struct LoadResult {
  std::vector<DatasetRecord> records;
  std::size_t malformed = 0;
};

/// Reads a record file, skipping and counting lines that do not parse.
/// Throws Error(storage_io) when the file cannot be opened.
LoadResult load(const std::string& path);

/// First record per program id, original order kept.
std::vector<DatasetRecord> dedup(const std::vector<DatasetRecord>& records);

struct FunnelRow {
  std::string stage;
  StageCounts counts;
  std::optional<double> retention;  // out / in; absent when in == 0
};

/// One row per stage directory present under run_dir, in stage order.
/// Throws Error(missing_checkpoint) naming a stage directory without one.
std::vector<FunnelRow> funnel_report(const std::string& run_dir);

/// Replaces `path` with `lines` (each newline-terminated) via rename.
void rewrite_lines(const std::string& path, const std::vector<std::string>& lines);

/// Lines of a text file without their terminators. Missing file: empty.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace caco::store
