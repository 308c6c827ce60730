#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caco/pipeline/stages.hpp"
#include "caco/store/store.hpp"

namespace caco::pipeline {

struct RunConfig {
  std::string run_dir = "runs";
  std::string run_id = "default";
  std::string seeds_path;  // JSONL of SeedProblem objects
  int n_samples = 0;
  int k_reverse = 1;
  std::size_t chunk_size = 1000;
  int workers = 4;
  std::optional<std::string> fixed_timestamp;  // lineage timestamp; wall clock when absent

  // Test hooks for interrupt-and-resume.
  std::optional<std::string> stop_after_stage;
  std::optional<int> stop_after_chunks;
};

struct StageReport {
  std::string stage;
  store::StageCounts counts;
  bool complete = false;
  bool skipped = false;  // an existing complete checkpoint was reused
};

struct RunReport {
  std::vector<StageReport> stages;
  bool interrupted = false;
  long long accepted = 0;
};

/// Runs stages under <run_dir>/<run_id>/<stage>/ with one checkpoint per
/// committed chunk. A rerun resumes an incomplete stage from its cursor,
/// reuses a complete one, and restarts a stage whose inputs changed.
class Runner {
 public:
  Runner(RunConfig config, StageContext ctx);

  std::string run_path() const;
  std::string stage_path(std::string_view stage) const;

  /// Throws Error(missing_checkpoint) when an upstream stage is not
  /// complete, Error(config_error) for unknown stages or a missing gateway.
  StageReport run_stage(std::string_view stage);

  /// Every stage in order; stops early on a test hook.
  RunReport run_all();

  /// Audit over the accepted records of this run.
  AuditReport audit(std::size_t sample_size, unsigned long long seed = 0);

  const RunConfig& config() const { return config_; }
  const StageContext& context() const { return ctx_; }

 private:
  RunConfig config_;
  StageContext ctx_;
};

/// Stages whose upstream outputs are present and complete; `filter` expands
/// to filter-seed and filter-sampled.
std::vector<std::string> expand_stage_command(const Runner& runner, std::string_view command);

}  // namespace caco::pipeline
