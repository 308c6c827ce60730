// caco: command-line front end for the verifiable reasoning-data pipeline.
//
// Every subcommand prints one line of space-separated key=value pairs.
// Exit status: 0 success, 1 rejections under --strict or a runtime failure,
// 2 configuration or usage error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "caco/answer/answer_engine.hpp"
#include "caco/core/error.hpp"
#include "caco/pipeline/config.hpp"
#include "caco/pipeline/runner.hpp"
#include "caco/sandbox/executor.hpp"
#include "caco/store/store.hpp"
#include "caco/validator/validator.hpp"

extern char** environ;

namespace {

using namespace caco;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config_path;
  std::optional<std::string> run_dir;
  std::optional<std::string> run_id;
  std::optional<int> workers;
  std::optional<long long> timeout_ms;
  std::optional<std::string> mock;
  std::optional<std::string> prompts;
  bool strict = false;
  int n = 0;
  std::size_t audit_sample = 0;
  unsigned long long audit_seed = 0;
  std::string file;
  bool instrumented = false;
};

class Summary {
 public:
  template <typename T>
  Summary& add(const std::string& key, const T& value) {
    std::ostringstream text;
    if constexpr (std::is_same_v<T, bool>) {
      text << (value ? "true" : "false");
    } else {
      text << value;
    }
    return add_text(key, text.str());
  }

  Summary& add_text(const std::string& key, const std::string& value) {
    bool plain = !value.empty() && value.find_first_of(" \t\r\n\"=") == std::string::npos;
    parts_.push_back(key + "=" + (plain ? value : json(value).dump()));
    return *this;
  }

  void print() const {
    for (std::size_t i = 0; i < parts_.size(); ++i) std::cout << (i ? " " : "") << parts_[i];
    std::cout << "\n";
  }

 private:
  std::vector<std::string> parts_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot read " + path);
  std::ostringstream data;
  data << in.rdbuf();
  return data.str();
}

// Defaults, then the config file, then CACO_ variables, then flags.
pipeline::PipelineConfig resolve_config(const Flags& flags, bool require_file) {
  json config;
  if (flags.config_path.empty()) {
    if (require_file) throw Error(ErrorCode::config_error, "--config is required for this subcommand");
    config = pipeline::default_config();
  } else {
    config = pipeline::load_config_file(flags.config_path);
  }
  pipeline::apply_env_overrides(config, environ);
  if (flags.run_dir) config["run_dir"] = *flags.run_dir;
  if (flags.run_id) config["run_id"] = *flags.run_id;
  if (flags.workers) config["workers"] = *flags.workers;
  if (flags.timeout_ms) config["executor"]["timeout_ms"] = *flags.timeout_ms;
  if (flags.prompts) config["prompts"] = *flags.prompts;
  if (flags.mock) {
    config["backend"]["kind"] = "mock";
    config["backend"]["mock_script"] = *flags.mock;
    if (config["timestamp"].is_null()) config["timestamp"] = pipeline::kFixedTimestamp;
  }
  return pipeline::config_from_json(config);
}

void add_counts(Summary& s, const std::string& prefix, const store::StageCounts& counts) {
  s.add(prefix + "in", counts.in).add(prefix + "out", counts.out).add(prefix + "rejected", counts.rejected_total());
  for (const auto& [reason, n] : counts.rejected) s.add(prefix + "rejected." + reason, n);
}

int cmd_validate_one(const Flags& flags) {
  pipeline::PipelineConfig config = resolve_config(flags, false);
  ValidationReport report = validator::validate(read_file(flags.file), config.stage.min_lines);
  auto failure = report.first_failure();
  Summary s;
  s.add("passed", report.passed)
      .add_text("first_failure", failure ? std::string(to_string(*failure)) : "none")
      .add("noncomment_lines", report.facts.noncomment_lines)
      .add("input_keys", report.facts.input_keys.size());
  s.print();
  return flags.strict && !report.passed ? kExitPartial : kExitOk;
}

int cmd_exec_one(const Flags& flags) {
  pipeline::PipelineConfig config = resolve_config(flags, false);
  CandidateProgram program = CandidateProgram::make(read_file(flags.file), Origin::sampled);
  ExecutionResult r = flags.instrumented
                          ? sandbox::execute_instrumented(program, config.stage.limits, config.stage.executor)
                          : sandbox::execute_plain(program, config.stage.limits, config.stage.executor);
  Summary s;
  s.add_text("status", std::string(to_string(r.status))).add("duration_ms", r.duration_ms);
  if (r.exit_code) s.add("exit_code", *r.exit_code);
  s.add("truncated", r.truncated);
  try {
    s.add_text("answer", answer::render(answer::normalize_stdout(r.stdout_text)));
  } catch (const Error&) {
  }
  if (r.exception) s.add_text("exception", r.exception->class_name);
  if (!r.detail.empty()) s.add_text("detail", r.detail);
  s.print();
  return flags.strict && r.status != ExecStatus::ok ? kExitPartial : kExitOk;
}

int cmd_stats(const Flags& flags) {
  pipeline::PipelineConfig config = resolve_config(flags, false);
  pipeline::Runner runner(config.run, config.stage);
  Summary s;
  s.add_text("run", runner.run_path());
  for (const auto& row : store::funnel_report(runner.run_path())) {
    add_counts(s, row.stage + ".", row.counts);
    if (row.retention) {
      s.add_text(row.stage + ".retention", answer::format_decimal(*row.retention));
    } else {
      s.add_text(row.stage + ".retention", "n/a");
    }
  }
  s.print();
  return kExitOk;
}

int cmd_audit(const Flags& flags) {
  pipeline::PipelineConfig config = resolve_config(flags, true);
  auto gateway = pipeline::make_gateway(config);
  config.stage.gateway = gateway.get();
  pipeline::Runner runner(config.run, config.stage);
  pipeline::AuditReport report = runner.audit(flags.audit_sample, flags.audit_seed);
  Summary s;
  s.add("sampled", report.sampled)
      .add("solvable", report.solvable)
      .add("correct", report.correct)
      .add("unparseable", report.unparseable);
  s.print();
  return flags.strict && report.unparseable > 0 ? kExitPartial : kExitOk;
}

int cmd_stages(const Flags& flags, const std::string& command) {
  bool needs_backend = command != "filter";
  pipeline::PipelineConfig config = resolve_config(flags, needs_backend);
  if (command == "sample") config.run.n_samples = flags.n;
  std::unique_ptr<llm::Gateway> gateway;
  if (needs_backend) {
    gateway = pipeline::make_gateway(config);
    config.stage.gateway = gateway.get();
  }
  pipeline::Runner runner(config.run, config.stage);

  Summary s;
  long long rejected = 0;
  if (command == "run-all") {
    pipeline::RunReport report = runner.run_all();
    s.add("accepted", report.accepted).add("interrupted", report.interrupted);
    for (const auto& stage : report.stages) {
      add_counts(s, stage.stage + ".", stage.counts);
      rejected += stage.counts.rejected_total();
    }
  } else {
    for (const auto& stage : pipeline::expand_stage_command(runner, command)) {
      pipeline::StageReport report = runner.run_stage(stage);
      s.add(report.stage + ".complete", report.complete).add(report.stage + ".skipped", report.skipped);
      add_counts(s, report.stage + ".", report.counts);
      rejected += report.counts.rejected_total();
    }
  }
  s.print();
  return flags.strict && rejected > 0 ? kExitPartial : kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::config_error:
    case ErrorCode::prompt_checksum:
    case ErrorCode::unknown_template:
    case ErrorCode::missing_placeholder:
    case ErrorCode::missing_checkpoint:
      return kExitConfig;
    default:
      return kExitPartial;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable reasoning-data pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;

  app.add_option("--config", flags.config_path, "JSON config file");
  app.add_option("--run-dir", flags.run_dir, "Root directory for runs");
  app.add_option("--run-id", flags.run_id, "Run name under the run directory");
  app.add_option("--workers", flags.workers, "Worker pool size")->check(CLI::PositiveNumber);
  app.add_option("--timeout-ms", flags.timeout_ms, "Execution wall-clock limit")->check(CLI::PositiveNumber);
  app.add_option("--mock", flags.mock, "Scripted backend file (offline, deterministic)");
  app.add_option("--prompts", flags.prompts, "Prompt asset directory");
  app.add_flag("--strict", flags.strict, "Exit 1 when anything was rejected");

  std::vector<std::pair<std::string, std::string>> stage_commands = {
      {"unify", "Convert seed problems into code chains of thought"},
      {"filter", "Validate and execute unified and sampled programs"},
      {"reverse", "Back-translate programs into problems"},
      {"solve", "Answer the back-translated problems"},
      {"verify", "Apply answer and consistency verification"},
      {"run-all", "Run every stage, resuming from checkpoints"},
  };
  for (const auto& [name, help] : stage_commands) app.add_subcommand(name, help);
  app.add_subcommand("sample", "Sample new programs from the code generator")
      ->add_option("--n", flags.n, "Number of completions")
      ->required()
      ->check(CLI::NonNegativeNumber);
  auto* audit = app.add_subcommand("audit", "Judge solvability and correctness of accepted records");
  audit->add_option("--sample", flags.audit_sample, "Records to sample")->required();
  audit->add_option("--seed", flags.audit_seed, "Sampling seed");
  app.add_subcommand("stats", "Funnel counts of a run");
  app.add_subcommand("validate-one", "Run the static checks on one program")
      ->add_option("--file", flags.file, "Program file")
      ->required();
  auto* exec = app.add_subcommand("exec-one", "Execute one program in the sandbox");
  exec->add_option("--file", flags.file, "Program file")->required();
  exec->add_flag("--instrumented", flags.instrumented, "Run through the configured shim");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "validate-one") return cmd_validate_one(flags);
    if (command == "exec-one") return cmd_exec_one(flags);
    if (command == "stats") return cmd_stats(flags);
    if (command == "audit") return cmd_audit(flags);
    return cmd_stages(flags, command);
  } catch (const Error& e) {
    std::cerr << "caco: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "caco: " << e.what() << "\n";
    return kExitPartial;
  }
}
