#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "caco/core/types.hpp"
#include "caco/llm/gateway.hpp"
#include "caco/sandbox/executor.hpp"

namespace caco::pipeline {

/// One unify input. Math items carry a problem and optional solution;
/// algorithmic items carry code and its test function.
struct SeedProblem {
  std::string text;
  std::optional<std::string> solution;
  bool algorithmic = false;
  std::string code;
  std::string test_code;
  ProgramMeta meta;  // ground_truth and solve_rate live here
};

/// Fields: text, solution, ground_truth, kind ("math" | "algo"), code,
/// test_code, meta{source, solve_rate, ...}. Throws Error(parse_error).
SeedProblem seed_from_json(const nlohmann::json& j);
nlohmann::json seed_to_json(const SeedProblem& seed);

struct Rejection {
  std::string reason;  // one of store::kRejectReasons
  std::string detail;
};

/// A value or the reason it was dropped.
template <typename T>
struct Outcome {
  std::optional<T> value;
  Rejection rejection;

  static Outcome ok(T v) { return Outcome{std::move(v), {}}; }
  static Outcome reject(std::string reason, std::string detail = {}) {
    return Outcome{std::nullopt, Rejection{std::move(reason), std::move(detail)}};
  }
  explicit operator bool() const { return value.has_value(); }
};

struct StageContext {
  llm::Gateway* gateway = nullptr;
  sandbox::ExecLimits limits;
  sandbox::ExecutorConfig executor;
  int min_lines = 6;
  double rel_tol = 1e-6;
  std::optional<double> solve_rate_max = 0.3;  // inputs at or above are skipped
  SamplingParams codegen_params = llm::default_params(llm::Role::codegen);
};

/// First fenced code block of a completion, else the whole reply.
std::string extract_code(const std::string& completion);

/// Problem text after the last "### Math Problem:" marker, with a trailing
/// "### End Problem" removed and whitespace trimmed.
std::string extract_problem(const std::string& completion);

/// Static checks, execution and (when asked and a ground truth exists) the
/// answer match. Kept candidates carry their stdout in meta.
Outcome<CandidateProgram> filter_one(const StageContext& ctx, CandidateProgram candidate,
                                     bool require_answer_match);

/// Unifier prompt, one completion, then filter_one with the answer match.
Outcome<CandidateProgram> unify_one(const StageContext& ctx, const SeedProblem& seed, long ordinal);

/// One codegen completion on the empty-user scaffold.
Outcome<CandidateProgram> sample_one(const StageContext& ctx, long ordinal);

Outcome<Problem> reverse_one(const StageContext& ctx, const CandidateProgram& candidate, long ordinal);

Solution solve_one(const StageContext& ctx, const Problem& problem, long ordinal);

struct VerifyOutcome {
  Verdict verdict;
  std::string reason;  // empty when accepted
  std::string detail;
  bool judge_called = false;
};

/// Answer check first, consistency judge only when the answers match.
VerifyOutcome verify_one(const StageContext& ctx, const Problem& problem, const Solution& solution,
                         const CandidateProgram& candidate, long ordinal = 0);

// Batch forms of the stage operations, without checkpointing.
std::vector<CandidateProgram> stage_unify(const StageContext& ctx, const std::vector<SeedProblem>& seeds,
                                          std::vector<Rejection>* rejections = nullptr);
std::vector<CandidateProgram> stage_sample(const StageContext& ctx, int n,
                                           std::vector<Rejection>* rejections = nullptr);
std::vector<CandidateProgram> stage_filter(const StageContext& ctx, const std::vector<CandidateProgram>& candidates,
                                           bool require_answer_match,
                                           std::vector<Rejection>* rejections = nullptr);

struct AuditReport {
  long long sampled = 0;
  long long solvable = 0;
  long long correct = 0;
  long long unparseable = 0;
};

/// Uniform sample without replacement (seeded), judged for solvability
/// and correctness.
AuditReport stage_audit(const StageContext& ctx, const std::vector<DatasetRecord>& records,
                        std::size_t sample_size, unsigned long long seed = 0);

}  // namespace caco::pipeline
