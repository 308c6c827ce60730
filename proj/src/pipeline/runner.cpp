#include "caco/pipeline/runner.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "caco/core/error.hpp"
#include "caco/core/hash.hpp"
#include "caco/core/record_io.hpp"

namespace caco::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ItemResult {
  std::optional<DatasetRecord> out;
  Rejection rejection;
  json rejected_record;
};

struct StagePlan {
  std::vector<std::string> upstream;  // stage names whose out.jsonl feed this stage
  std::size_t items = 0;
  json params;
  std::function<ItemResult(std::size_t)> process;
};

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream data;
  data << in.rdbuf();
  return sha256_hex(data.str());
}

long ordinal_of(const CandidateProgram& program) {
  auto variant = program.attr(kAttrVariant);
  return variant ? std::stol(*variant) : 0;
}

ItemResult accept(DatasetRecord record) {
  ItemResult r;
  r.out = std::move(record);
  return r;
}

ItemResult reject(const Rejection& rejection, json record) {
  ItemResult r;
  r.rejection = rejection;
  r.rejected_record = std::move(record);
  return r;
}

std::vector<DatasetRecord> load_stage(const Runner& runner, std::string_view stage) {
  return store::load((fs::path(runner.stage_path(stage)) / "out.jsonl").string()).records;
}

std::vector<SeedProblem> load_seeds(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::config_error, "no seeds file configured");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot open seeds file " + path);
  std::vector<SeedProblem> seeds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::config_error, path + " line " + std::to_string(line_no) + ": not JSON");
    }
    try {
      seeds.push_back(seed_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorCode::config_error, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return seeds;
}

json context_params(const StageContext& ctx) {
  json j{{"min_lines", ctx.min_lines}, {"rel_tol", ctx.rel_tol}, {"wall_ms", ctx.limits.wall_ms},
         {"memory_bytes", ctx.limits.memory_bytes}, {"max_stdout_bytes", ctx.limits.max_stdout_bytes}};
  j["solve_rate_max"] = ctx.solve_rate_max ? json(*ctx.solve_rate_max) : json(nullptr);
  return j;
}

// Runs process(i) for every i in [begin, end) on up to `workers` threads.
std::vector<ItemResult> run_chunk(const StagePlan& plan, std::size_t begin, std::size_t end, int workers) {
  std::vector<ItemResult> results(end - begin);
  std::atomic<std::size_t> next{begin};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    while (!failed.load()) {
      std::size_t i = next.fetch_add(1);
      if (i >= end) return;
      try {
        results[i - begin] = plan.process(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), end - begin);
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

void finalize_files(const std::string& out_path, const std::string& rejects_path) {
  std::vector<std::pair<std::string, std::string>> keyed;
  for (auto& line : store::read_lines(out_path)) {
    std::string key = parse_record(line).key();
    keyed.emplace_back(std::move(key), std::move(line));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out_lines;
  for (auto& [key, line] : keyed) out_lines.push_back(std::move(line));
  store::rewrite_lines(out_path, out_lines);

  std::vector<std::string> reject_lines = store::read_lines(rejects_path);
  std::sort(reject_lines.begin(), reject_lines.end());
  store::rewrite_lines(rejects_path, reject_lines);
}

}  // namespace

Runner::Runner(RunConfig config, StageContext ctx) : config_(std::move(config)), ctx_(std::move(ctx)) {
  if (config_.chunk_size == 0) throw Error(ErrorCode::config_error, "chunk_size must be positive");
  if (config_.k_reverse < 1) throw Error(ErrorCode::config_error, "k_reverse must be at least 1");
  if (config_.n_samples < 0) throw Error(ErrorCode::config_error, "n_samples must not be negative");
}

std::string Runner::run_path() const { return (fs::path(config_.run_dir) / config_.run_id).string(); }

std::string Runner::stage_path(std::string_view stage) const {
  return (fs::path(run_path()) / stage).string();
}

StageReport Runner::run_stage(std::string_view stage) {
  const std::string name(stage);
  const std::string timestamp = config_.fixed_timestamp.value_or(now_iso8601());
  auto stamp = [&](DatasetRecord& r) { r.lineage.push_back(LineageEntry{name, timestamp}); };
  auto require_gateway = [&] {
    if (!ctx_.gateway) throw Error(ErrorCode::config_error, "stage " + name + " needs a model backend");
  };

  std::vector<SeedProblem> seeds;
  std::vector<DatasetRecord> inputs;
  StagePlan plan;
  json params = context_params(ctx_);

  if (name == "unify") {
    plan.params = params;
  } else if (name == "filter-seed") {
    plan.upstream = {"unify"};
  } else if (name == "sample") {
    plan.params = {{"n_samples", config_.n_samples},
                   {"temperature", ctx_.codegen_params.temperature},
                   {"top_p", ctx_.codegen_params.top_p},
                   {"top_k", ctx_.codegen_params.top_k},
                   {"min_p", ctx_.codegen_params.min_p},
                   {"max_tokens", ctx_.codegen_params.max_tokens}};
  } else if (name == "filter-sampled") {
    plan.upstream = {"sample"};
  } else if (name == "reverse") {
    plan.upstream = {"filter-seed", "filter-sampled"};
    plan.params = {{"k_reverse", config_.k_reverse}};
  } else if (name == "solve") {
    plan.upstream = {"reverse"};
  } else if (name == "verify") {
    plan.upstream = {"solve"};
  } else {
    throw Error(ErrorCode::config_error, "unknown stage " + name);
  }
  if (name == "filter-seed" || name == "filter-sampled" || name == "verify") plan.params = params;

  for (const auto& up : plan.upstream) {
    auto cp = store::read_checkpoint((fs::path(stage_path(up)) / "checkpoint").string());
    if (!cp || !cp->complete) throw Error(ErrorCode::missing_checkpoint, up);
  }

  std::string digest_input = name + "\n" + plan.params.dump() + "\n";
  if (name == "unify") {
    if (config_.seeds_path.empty()) throw Error(ErrorCode::config_error, "no seeds file configured");
    digest_input += file_digest(config_.seeds_path) + "\n";
  }
  for (const auto& up : plan.upstream) {
    digest_input += up + ":" + file_digest((fs::path(stage_path(up)) / "out.jsonl").string()) + "\n";
  }
  const std::string input_digest = sha256_hex(digest_input);

  const fs::path dir = stage_path(name);
  const std::string out_path = (dir / "out.jsonl").string();
  const std::string rejects_path = (dir / "rejects.jsonl").string();
  const std::string cp_path = (dir / "checkpoint").string();

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::storage_io, "create " + dir.string() + ": " + ec.message());

  store::Checkpoint cp;
  std::optional<store::Checkpoint> previous = store::read_checkpoint(cp_path);
  if (previous && previous->input_digest == input_digest && previous->stage == name) {
    if (previous->complete) return StageReport{name, previous->counts, true, true};
    cp = *previous;
  } else {
    cp.stage = name;
    cp.input_digest = input_digest;
  }

  // Drop anything appended after the last committed checkpoint.
  for (auto [path, bytes] : {std::pair{out_path, cp.out_bytes}, std::pair{rejects_path, cp.rejects_bytes}}) {
    if (!fs::exists(path)) {
      store::append_lines(path, {});
    }
    fs::resize_file(path, bytes, ec);
    if (ec) throw Error(ErrorCode::storage_io, "truncate " + path + ": " + ec.message());
  }

  std::set<std::string> seen;
  for (const auto& line : store::read_lines(out_path)) seen.insert(parse_record(line).key());

  if (name == "unify") {
    require_gateway();
    seeds = load_seeds(config_.seeds_path);
    plan.items = seeds.size();
    plan.process = [&](std::size_t i) {
      auto result = unify_one(ctx_, seeds[i], static_cast<long>(i));
      if (!result) return reject(result.rejection, seed_to_json(seeds[i]));
      DatasetRecord r;
      r.program = std::move(*result.value);
      stamp(r);
      return accept(std::move(r));
    };
  } else if (name == "filter-seed" || name == "filter-sampled") {
    inputs = load_stage(*this, plan.upstream.front());
    plan.items = inputs.size();
    bool require_match = name == "filter-seed";
    plan.process = [&, require_match](std::size_t i) {
      DatasetRecord r = inputs[i];
      auto result = filter_one(ctx_, r.program, require_match);
      if (!result) return reject(result.rejection, record_to_json(r));
      r.program = std::move(*result.value);
      stamp(r);
      return accept(std::move(r));
    };
  } else if (name == "sample") {
    require_gateway();
    plan.items = static_cast<std::size_t>(config_.n_samples);
    plan.process = [&](std::size_t i) {
      auto result = sample_one(ctx_, static_cast<long>(i));
      if (!result) return reject(result.rejection, json(nullptr));
      DatasetRecord r;
      r.program = std::move(*result.value);
      stamp(r);
      return accept(std::move(r));
    };
  } else if (name == "reverse") {
    require_gateway();
    for (const auto& up : plan.upstream) {
      auto part = load_stage(*this, up);
      inputs.insert(inputs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    const std::size_t k = static_cast<std::size_t>(config_.k_reverse);
    plan.items = inputs.size() * k;
    plan.process = [&, k](std::size_t i) {
      DatasetRecord r = inputs[i / k];
      long variant = static_cast<long>(i % k);
      if (k > 1) r.program.meta.attrs[std::string(kAttrVariant)] = std::to_string(variant);
      auto result = reverse_one(ctx_, r.program, variant);
      if (!result) return reject(result.rejection, record_to_json(r));
      r.problem = std::move(*result.value);
      stamp(r);
      return accept(std::move(r));
    };
  } else if (name == "solve") {
    require_gateway();
    inputs = load_stage(*this, "reverse");
    plan.items = inputs.size();
    plan.process = [&](std::size_t i) {
      DatasetRecord r = inputs[i];
      try {
        r.solution = solve_one(ctx_, *r.problem, ordinal_of(r.program));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::backend_unavailable) throw;
        return reject(Rejection{"completion-failed", e.what()}, record_to_json(r));
      }
      stamp(r);
      return accept(std::move(r));
    };
  } else {
    require_gateway();
    inputs = load_stage(*this, "solve");
    plan.items = inputs.size();
    plan.process = [&](std::size_t i) {
      DatasetRecord r = inputs[i];
      VerifyOutcome v = verify_one(ctx_, *r.problem, *r.solution, r.program, ordinal_of(r.program));
      r.verdict = v.verdict;
      stamp(r);
      if (!v.reason.empty()) return reject(Rejection{v.reason, v.detail}, record_to_json(r));
      return accept(std::move(r));
    };
  }

  int chunks_done = 0;
  while (cp.cursor < plan.items) {
    std::size_t end = std::min(plan.items, cp.cursor + config_.chunk_size);
    std::vector<ItemResult> results = run_chunk(plan, cp.cursor, end, config_.workers);

    std::vector<std::string> out_lines;
    std::vector<std::string> reject_lines;
    for (auto& res : results) {
      ++cp.counts.in;
      std::string key;
      if (res.out) {
        key = res.out->key();
        if (!seen.insert(key).second) {
          res.rejection = Rejection{"duplicate", key};
          res.rejected_record = record_to_json(*res.out);
          res.out.reset();
        }
      }
      if (res.out) {
        ++cp.counts.out;
        out_lines.push_back(serialize_record(*res.out));
        cp.out_bytes += out_lines.back().size() + 1;
        cp.processed_digest = sha256_hex(cp.processed_digest + "+" + key);
      } else {
        ++cp.counts.rejected[res.rejection.reason];
        json line{{"reason", res.rejection.reason}, {"detail", res.rejection.detail},
                  {"record", res.rejected_record}};
        reject_lines.push_back(line.dump());
        cp.rejects_bytes += reject_lines.back().size() + 1;
        cp.processed_digest = sha256_hex(cp.processed_digest + "-" + res.rejection.reason);
      }
    }
    store::append_lines(out_path, out_lines);
    store::append_lines(rejects_path, reject_lines);
    cp.cursor = end;
    store::write_checkpoint(cp_path, cp);

    ++chunks_done;
    if (config_.stop_after_chunks && chunks_done >= *config_.stop_after_chunks && cp.cursor < plan.items) {
      return StageReport{name, cp.counts, false, false};
    }
  }

  finalize_files(out_path, rejects_path);
  cp.out_bytes = fs::file_size(out_path);
  cp.rejects_bytes = fs::file_size(rejects_path);
  cp.complete = true;
  store::write_checkpoint(cp_path, cp);
  return StageReport{name, cp.counts, true, false};
}

RunReport Runner::run_all() {
  RunReport report;
  for (std::string_view stage : store::kStages) {
    StageReport s = run_stage(stage);
    report.stages.push_back(s);
    bool last = stage == store::kStages[std::size(store::kStages) - 1];
    if (!s.complete || (!last && config_.stop_after_stage == stage)) {
      report.interrupted = true;
      return report;
    }
  }
  report.accepted = report.stages.back().counts.out;
  return report;
}

AuditReport Runner::audit(std::size_t sample_size, unsigned long long seed) {
  if (!ctx_.gateway) throw Error(ErrorCode::config_error, "audit needs a model backend");
  auto cp = store::read_checkpoint((fs::path(stage_path("verify")) / "checkpoint").string());
  if (!cp || !cp->complete) throw Error(ErrorCode::missing_checkpoint, "verify");
  return stage_audit(ctx_, load_stage(*this, "verify"), sample_size, seed);
}

std::vector<std::string> expand_stage_command(const Runner& runner, std::string_view command) {
  if (command != "filter") return {std::string(command)};
  std::vector<std::string> stages;
  for (std::string_view up : {"unify", "sample"}) {
    auto cp = store::read_checkpoint((fs::path(runner.stage_path(up)) / "checkpoint").string());
    if (cp && cp->complete) stages.push_back(up == "unify" ? "filter-seed" : "filter-sampled");
  }
  if (stages.empty()) throw Error(ErrorCode::missing_checkpoint, "unify or sample");
  return stages;
}

}  // namespace caco::pipeline
