#include "caco/store/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "caco/core/error.hpp"
#include "caco/core/record_io.hpp"

namespace caco::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void io_failure(const std::string& what, const std::string& path) {
  throw Error(ErrorCode::storage_io, what + " " + path + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::string& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

bool is_known_reason(std::string_view reason) {
  return std::find(std::begin(kRejectReasons), std::end(kRejectReasons), reason) != std::end(kRejectReasons);
}

long long StageCounts::rejected_total() const {
  long long total = 0;
  for (const auto& [reason, n] : rejected) total += n;
  return total;
}

json checkpoint_to_json(const Checkpoint& cp) {
  json rejected = json::object();
  for (const auto& [reason, n] : cp.counts.rejected) rejected[reason] = n;
  return json{{"stage", cp.stage},
              {"complete", cp.complete},
              {"cursor", cp.cursor},
              {"counts", {{"in", cp.counts.in}, {"out", cp.counts.out}, {"rejected", rejected}}},
              {"processed_digest", cp.processed_digest},
              {"input_digest", cp.input_digest},
              {"out_bytes", cp.out_bytes},
              {"rejects_bytes", cp.rejects_bytes}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint cp;
    cp.stage = j.at("stage").get<std::string>();
    cp.complete = j.at("complete").get<bool>();
    cp.cursor = j.at("cursor").get<std::size_t>();
    const json& counts = j.at("counts");
    cp.counts.in = counts.at("in").get<long long>();
    cp.counts.out = counts.at("out").get<long long>();
    for (const auto& [reason, n] : counts.at("rejected").items()) cp.counts.rejected[reason] = n.get<long long>();
    cp.processed_digest = j.at("processed_digest").get<std::string>();
    cp.input_digest = j.at("input_digest").get<std::string>();
    cp.out_bytes = j.at("out_bytes").get<std::size_t>();
    cp.rejects_bytes = j.at("rejects_bytes").get<std::size_t>();
    return cp;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  rewrite_lines(path, {checkpoint_to_json(cp).dump(2)});
}

std::optional<Checkpoint> read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::parse_error, "checkpoint " + path + " is not JSON");
  return checkpoint_from_json(j);
}

void append_lines(const std::string& path, const std::vector<std::string>& lines) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("open", path);
  try {
    for (const auto& line : lines) write_all(fd, line + "\n", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::close(fd) != 0) io_failure("close", path);
}

void append(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(serialize_record(r));
  append_lines(path, lines);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

LoadResult load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure("open", path);
  LoadResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(parse_record(line));
    } catch (const Error&) {
      ++result.malformed;
    } catch (const nlohmann::json::exception&) {
      ++result.malformed;
    }
  }
  return result;
}

std::vector<DatasetRecord> dedup(const std::vector<DatasetRecord>& records) {
  std::set<std::string> seen;
  std::vector<DatasetRecord> out;
  for (const auto& r : records) {
    if (seen.insert(r.program.id).second) out.push_back(r);
  }
  return out;
}

std::vector<FunnelRow> funnel_report(const std::string& run_dir) {
  std::vector<FunnelRow> rows;
  for (std::string_view stage : kStages) {
    fs::path dir = fs::path(run_dir) / stage;
    if (!fs::is_directory(dir)) continue;
    auto cp = read_checkpoint((dir / "checkpoint").string());
    if (!cp) throw Error(ErrorCode::missing_checkpoint, std::string(stage));
    FunnelRow row{std::string(stage), cp->counts, std::nullopt};
    if (cp->counts.in > 0) row.retention = static_cast<double>(cp->counts.out) / static_cast<double>(cp->counts.in);
    rows.push_back(std::move(row));
  }
  return rows;
}

void rewrite_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string tmp = path + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("open", tmp);
  std::string data;
  for (const auto& line : lines) {
    data += line;
    data += '\n';
  }
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) io_failure("sync", tmp);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_failure("rename", path);
}

}  // namespace caco::store
