#include "caco/pipeline/stages.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "caco/answer/answer_engine.hpp"
#include "caco/core/error.hpp"
#include "caco/core/record_io.hpp"
#include "caco/validator/validator.hpp"

namespace caco::pipeline {

using llm::Role;
using nlohmann::json;

namespace {

std::string trim(std::string_view text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

std::string last_line(std::string_view text) {
  std::string t = trim(text);
  std::size_t nl = t.rfind('\n');
  return nl == std::string::npos ? t : t.substr(nl + 1);
}

Outcome<llm::Completion> try_complete(const StageContext& ctx, Role role, const llm::Bindings& bindings,
                                      long ordinal) {
  try {
    return Outcome<llm::Completion>::ok(ctx.gateway->complete_role(role, bindings, ordinal));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::backend_unavailable) throw;
    return Outcome<llm::Completion>::reject("completion-failed", e.what());
  }
}

}  // namespace

SeedProblem seed_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "seed problem is not an object");
  SeedProblem s;
  try {
    s.text = j.value("text", "");
    if (j.contains("solution") && j["solution"].is_string()) s.solution = j["solution"].get<std::string>();
    s.algorithmic = j.value("kind", "math") == "algo";
    s.code = j.value("code", "");
    s.test_code = j.value("test_code", "");
    if (j.contains("meta")) s.meta = meta_from_json(j["meta"]);
    if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
      s.meta.ground_truth = j["ground_truth"].is_string() ? j["ground_truth"].get<std::string>()
                                                          : j["ground_truth"].dump();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("seed problem: ") + e.what());
  }
  if (s.algorithmic ? s.code.empty() : s.text.empty()) {
    throw Error(ErrorCode::parse_error, "seed problem has neither text nor code");
  }
  return s;
}

json seed_to_json(const SeedProblem& seed) {
  json j{{"kind", seed.algorithmic ? "algo" : "math"}, {"meta", meta_to_json(seed.meta)}};
  if (seed.algorithmic) {
    j["code"] = seed.code;
    j["test_code"] = seed.test_code;
  } else {
    j["text"] = seed.text;
    if (seed.solution) j["solution"] = *seed.solution;
  }
  return j;
}

std::string extract_code(const std::string& completion) {
  std::size_t open = completion.find("```");
  if (open == std::string::npos) return completion;
  std::size_t body = completion.find('\n', open);
  if (body == std::string::npos) return {};
  ++body;
  std::size_t close = completion.find("```", body);
  if (close == std::string::npos) return completion.substr(body);
  return completion.substr(body, close - body);
}

std::string extract_problem(const std::string& completion) {
  static constexpr std::string_view kMarker = "### Math Problem:";
  static constexpr std::string_view kEnd = "### End Problem";
  std::string_view text = completion;
  std::size_t marker = text.rfind(kMarker);
  if (marker != std::string_view::npos) text.remove_prefix(marker + kMarker.size());
  std::size_t end = text.find(kEnd);
  if (end != std::string_view::npos) text = text.substr(0, end);
  return trim(text);
}

Outcome<CandidateProgram> filter_one(const StageContext& ctx, CandidateProgram candidate,
                                     bool require_answer_match) {
  using Result = Outcome<CandidateProgram>;
  ValidationReport report = validator::validate(candidate.source, ctx.min_lines);
  if (!report.passed) {
    CheckId failed = *report.first_failure();
    auto check = std::find_if(report.checks.begin(), report.checks.end(),
                              [&](const CheckResult& c) { return c.id == failed; });
    return Result::reject(std::string(to_string(failed)), check->detail);
  }

  std::string stdout_text;
  if (auto cached = candidate.attr(kAttrStdout)) {
    stdout_text = *cached;
  } else {
    ExecutionResult exec = sandbox::execute_plain(candidate, ctx.limits, ctx.executor);
    if (exec.status != ExecStatus::ok) {
      std::string detail = exec.detail.empty() ? last_line(exec.stderr_text) : exec.detail;
      return Result::reject(std::string(to_string(exec.status)), detail);
    }
    stdout_text = exec.stdout_text;
  }

  AnswerForm produced;
  try {
    produced = answer::normalize_stdout(stdout_text);
  } catch (const Error&) {
    return Result::reject("empty-output");
  }
  if (require_answer_match && candidate.meta.ground_truth) {
    AnswerForm expected = answer::parse_answer(*candidate.meta.ground_truth);
    if (!answer::answers_match(produced, expected, ctx.rel_tol)) {
      return Result::reject("output-mismatch",
                            "got " + answer::render(produced) + ", expected " + answer::render(expected));
    }
  }
  candidate.meta.attrs[std::string(kAttrStdout)] = stdout_text;
  return Result::ok(std::move(candidate));
}

Outcome<CandidateProgram> unify_one(const StageContext& ctx, const SeedProblem& seed, long ordinal) {
  using Result = Outcome<CandidateProgram>;
  if (ctx.solve_rate_max && seed.meta.solve_rate && *seed.meta.solve_rate >= *ctx.solve_rate_max) {
    return Result::reject("solve-rate", "solve rate " + answer::format_decimal(*seed.meta.solve_rate));
  }
  Role role = seed.algorithmic ? Role::unifier_algo : Role::unifier_math;
  llm::Bindings bindings = seed.algorithmic
                               ? llm::Bindings{{"code", seed.code}, {"test_code", seed.test_code}}
                               : llm::Bindings{{"problem", seed.text}, {"solution", seed.solution.value_or("")}};
  auto reply = try_complete(ctx, role, bindings, ordinal);
  if (!reply) return Result::reject(reply.rejection.reason, reply.rejection.detail);
  CandidateProgram candidate = CandidateProgram::make(
      extract_code(reply.value->text), seed.algorithmic ? Origin::seed_algo : Origin::seed_math, seed.meta);
  return filter_one(ctx, std::move(candidate), true);
}

Outcome<CandidateProgram> sample_one(const StageContext& ctx, long ordinal) {
  using Result = Outcome<CandidateProgram>;
  llm::Completion reply;
  try {
    reply = ctx.gateway->complete(Role::codegen, ctx.gateway->render(Role::codegen, {}), ctx.codegen_params, {},
                                  ordinal);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::backend_unavailable) throw;
    return Result::reject("completion-failed", e.what());
  }
  ProgramMeta meta;
  meta.source = "codegen";
  return Result::ok(CandidateProgram::make(extract_code(reply.text), Origin::sampled, std::move(meta)));
}

Outcome<Problem> reverse_one(const StageContext& ctx, const CandidateProgram& candidate, long ordinal) {
  auto reply = try_complete(ctx, Role::reverser, {{"code", candidate.source}}, ordinal);
  if (!reply) return Outcome<Problem>::reject(reply.rejection.reason, reply.rejection.detail);
  std::string text = extract_problem(reply.value->text);
  if (text.empty()) return Outcome<Problem>::reject("empty-problem");
  return Outcome<Problem>::ok(Problem{std::move(text)});
}

Solution solve_one(const StageContext& ctx, const Problem& problem, long ordinal) {
  llm::Completion reply = ctx.gateway->complete_role(Role::solver, {{"problem", problem.text}}, ordinal);
  Solution s;
  s.text = reply.text;
  try {
    s.boxed_raw = answer::extract_boxed(s.text);
    s.answer = answer::parse_answer(*s.boxed_raw);
  } catch (const Error&) {
  }
  return s;
}

VerifyOutcome verify_one(const StageContext& ctx, const Problem& problem, const Solution& solution,
                         const CandidateProgram& candidate, long ordinal) {
  (void)problem;
  VerifyOutcome out;
  auto reject = [&](std::string reason, std::string detail = {}) {
    out.reason = std::move(reason);
    out.detail = std::move(detail);
    return out;
  };
  if (!solution.answer) return reject("no-boxed-answer");

  std::string stdout_text;
  if (auto cached = candidate.attr(kAttrStdout)) {
    stdout_text = *cached;
  } else {
    ExecutionResult exec = sandbox::execute_plain(candidate, ctx.limits, ctx.executor);
    if (exec.status != ExecStatus::ok) return reject(std::string(to_string(exec.status)), exec.detail);
    stdout_text = exec.stdout_text;
  }
  AnswerForm produced;
  try {
    produced = answer::normalize_stdout(stdout_text);
  } catch (const Error&) {
    return reject("empty-output");
  }
  if (!answer::answers_match(*solution.answer, produced, ctx.rel_tol)) {
    return reject("answer-mismatch",
                  "solution " + answer::render(*solution.answer) + ", code " + answer::render(produced));
  }

  out.judge_called = true;
  bool consistent = false;
  try {
    consistent = ctx.gateway->judge(Role::judge_consistency, {{"solution", solution.text}, {"code", candidate.source}},
                                    ordinal);
  } catch (const Error& e) {
    out.verdict = Verdict(true, false);
    if (e.code() == ErrorCode::unparseable_verdict) return reject("judge-unparseable", e.what());
    if (e.code() == ErrorCode::backend_unavailable) return reject("completion-failed", e.what());
    throw;
  }
  out.verdict = Verdict(true, consistent);
  if (!consistent) return reject("cot-inconsistent");
  return out;
}

std::vector<CandidateProgram> stage_unify(const StageContext& ctx, const std::vector<SeedProblem>& seeds,
                                          std::vector<Rejection>* rejections) {
  std::vector<CandidateProgram> kept;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto result = unify_one(ctx, seeds[i], static_cast<long>(i));
    if (result && !seen.insert(result.value->id).second) result = Outcome<CandidateProgram>::reject("duplicate");
    if (result) {
      kept.push_back(std::move(*result.value));
    } else if (rejections) {
      rejections->push_back(result.rejection);
    }
  }
  return kept;
}

std::vector<CandidateProgram> stage_sample(const StageContext& ctx, int n, std::vector<Rejection>* rejections) {
  std::vector<CandidateProgram> kept;
  std::set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    auto result = sample_one(ctx, i);
    if (result && !seen.insert(result.value->id).second) result = Outcome<CandidateProgram>::reject("duplicate");
    if (result) {
      kept.push_back(std::move(*result.value));
    } else if (rejections) {
      rejections->push_back(result.rejection);
    }
  }
  return kept;
}

std::vector<CandidateProgram> stage_filter(const StageContext& ctx, const std::vector<CandidateProgram>& candidates,
                                           bool require_answer_match, std::vector<Rejection>* rejections) {
  std::vector<CandidateProgram> kept;
  for (const auto& c : candidates) {
    auto result = filter_one(ctx, c, require_answer_match);
    if (result) {
      kept.push_back(std::move(*result.value));
    } else if (rejections) {
      rejections->push_back(result.rejection);
    }
  }
  return kept;
}

AuditReport stage_audit(const StageContext& ctx, const std::vector<DatasetRecord>& records, std::size_t sample_size,
                        unsigned long long seed) {
  AuditReport report;
  std::vector<std::size_t> all(records.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> picked;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), std::min(sample_size, records.size()), rng);

  for (std::size_t index : picked) {
    const DatasetRecord& r = records[index];
    if (!r.problem || !r.solution) continue;
    ++report.sampled;
    long ordinal = static_cast<long>(index);
    try {
      if (ctx.gateway->judge(Role::judge_solvable, {{"problem", r.problem->text}}, ordinal)) ++report.solvable;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unparseable_verdict) throw;
      ++report.unparseable;
    }
    try {
      if (ctx.gateway->judge(Role::judge_correct, {{"problem", r.problem->text}, {"solution", r.solution->text}},
                             ordinal)) {
        ++report.correct;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unparseable_verdict) throw;
      ++report.unparseable;
    }
  }
  return report;
}

}  // namespace caco::pipeline
