#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "caco/core/types.hpp"

namespace caco::sandbox {

struct ExecLimits {
  long long wall_ms = 10000;
  std::size_t memory_bytes = std::size_t{512} << 20;
  std::size_t max_stdout_bytes = std::size_t{64} << 10;
  std::vector<std::string> env_allowlist = {"PATH", "LANG", "LC_ALL", "LC_CTYPE"};

  bool valid() const { return wall_ms > 0 && max_stdout_bytes > 0; }
};

struct ExecutorConfig {
  std::string interpreter = "python3";  // bare names are looked up on PATH
  std::vector<std::string> interpreter_flags = {"-I", "-B"};
  std::string shim_path;                // required by execute_instrumented
  std::string tmp_root;                 // empty: $CACO_TMPDIR, then $TMPDIR, then /tmp
  bool isolate_network = false;         // best effort; silently skipped when not permitted
};

/// Line the shim prints before its JSON result when descriptor 3 is unusable.
inline constexpr std::string_view kShimSentinel = "\x1e---SHIM-RESULT---\x1e";

/// Runs the program as `interpreter flags candidate.py` in a fresh temp
/// directory, in its own process group, under the given limits.
ExecutionResult execute_plain(const CandidateProgram& program, const ExecLimits& limits,
                              const ExecutorConfig& config = {});

/// Runs `interpreter flags shim candidate.py` and merges the shim's JSON
/// result (descriptor 3, else the sentinel block on stdout) into the result.
ExecutionResult execute_instrumented(const CandidateProgram& program, const ExecLimits& limits,
                                     const ExecutorConfig& config = {});

/// Resolves a bare program name against PATH. Returns empty when not found.
std::string find_executable(const std::string& name);

}  // namespace caco::sandbox
