#include <gtest/gtest.h>

#include <filesystem>

#include "caco/core/error.hpp"
#include "caco/core/record_io.hpp"
#include "caco/store/store.hpp"
#include "test_support.hpp"

namespace caco::store {
namespace {

DatasetRecord record_for(const std::string& source) {
  DatasetRecord r;
  r.program = CandidateProgram::make(source, Origin::sampled);
  return r;
}

TEST(Store, AppendThenLoad) {
  test::TempDir dir;
  std::string path = dir.file("out.jsonl");
  std::vector<DatasetRecord> records = {record_for("print(1)\n"), record_for("print(2)\n"),
                                        record_for("print(3)\n")};
  records[1].problem = Problem{"What is 2?"};
  records[2].verdict = Verdict(true, false);
  append(path, {records[0]});
  append(path, {records[1], records[2]});
  LoadResult loaded = load(path);
  EXPECT_EQ(loaded.malformed, 0u);
  EXPECT_EQ(loaded.records, records);
}

TEST(Store, CorruptLineSkipped) {
  test::TempDir dir;
  std::string path = dir.file("out.jsonl");
  append(path, {record_for("print(1)\n")});
  append_lines(path, {"{not json"});
  append(path, {record_for("print(2)\n")});
  LoadResult loaded = load(path);
  EXPECT_EQ(loaded.records.size(), 2u);
  EXPECT_EQ(loaded.malformed, 1u);
}

TEST(Store, EmptyFile) {
  test::TempDir dir;
  test::write_file(dir.file("empty.jsonl"), "");
  LoadResult loaded = load(dir.file("empty.jsonl"));
  EXPECT_TRUE(loaded.records.empty());
  EXPECT_EQ(loaded.malformed, 0u);
}

TEST(Store, MissingFile) {
  try {
    load("/nonexistent/caco/out.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::storage_io);
  }
  EXPECT_TRUE(read_lines("/nonexistent/caco/out.jsonl").empty());
}

TEST(Dedup, FirstOccurrenceWins) {
  DatasetRecord a = record_for("print('a')\n");
  DatasetRecord a2 = a;
  a2.program.meta.source = "second";
  DatasetRecord b = record_for("print('b')\n");
  auto out = dedup({a, a2, b});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], a);
  EXPECT_EQ(out[1], b);
  EXPECT_TRUE(dedup({}).empty());
}

TEST(Dedup, LineEndingsDoNotMatter) {
  auto out = dedup({record_for("x = 1\nprint(x)\n"), record_for("x = 1\r\nprint(x)\r\n")});
  EXPECT_EQ(out.size(), 1u);
}

TEST(Dedup, Idempotent) {
  std::vector<DatasetRecord> records;
  for (int i = 0; i < 30; ++i) records.push_back(record_for("print(" + std::to_string(i % 7) + ")\n"));
  auto once = dedup(records);
  EXPECT_EQ(once.size(), 7u);
  EXPECT_EQ(dedup(once), once);
}

TEST(Checkpoint, Roundtrip) {
  test::TempDir dir;
  Checkpoint cp;
  cp.stage = "verify";
  cp.complete = true;
  cp.cursor = 42;
  cp.counts.in = 42;
  cp.counts.out = 40;
  cp.counts.rejected["answer-mismatch"] = 2;
  cp.processed_digest = "abc";
  cp.input_digest = "def";
  cp.out_bytes = 1234;
  cp.rejects_bytes = 56;
  write_checkpoint(dir.file("checkpoint"), cp);
  EXPECT_EQ(read_checkpoint(dir.file("checkpoint")), cp);
  EXPECT_EQ(checkpoint_from_json(checkpoint_to_json(cp)), cp);
  EXPECT_FALSE(read_checkpoint(dir.file("absent")).has_value());
  EXPECT_FALSE(std::filesystem::exists(dir.file("checkpoint.tmp")));
}

TEST(Checkpoint, CorruptIsParseError) {
  test::TempDir dir;
  test::write_file(dir.file("checkpoint"), "{\"stage\":");
  try {
    read_checkpoint(dir.file("checkpoint"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
  }
}

void write_stage(const std::string& run, const std::string& stage, long long in, long long out,
                 std::map<std::string, long long> rejected) {
  std::filesystem::create_directories(run + "/" + stage);
  Checkpoint cp;
  cp.stage = stage;
  cp.complete = true;
  cp.counts.in = in;
  cp.counts.out = out;
  cp.counts.rejected = std::move(rejected);
  write_checkpoint(run + "/" + stage + "/checkpoint", cp);
}

TEST(Funnel, RetentionPerStage) {
  test::TempDir dir;
  write_stage(dir.path(), "reverse", 8, 5, {{"empty-problem", 3}});
  write_stage(dir.path(), "unify", 10, 8, {{"timeout", 1}, {"min-lines", 1}});
  write_stage(dir.path(), "sample", 0, 0, {});
  auto rows = funnel_report(dir.path());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].stage, "unify");
  EXPECT_DOUBLE_EQ(*rows[0].retention, 0.8);
  EXPECT_EQ(rows[1].stage, "sample");
  EXPECT_FALSE(rows[1].retention.has_value());
  EXPECT_EQ(rows[2].stage, "reverse");
  EXPECT_DOUBLE_EQ(*rows[2].retention, 0.625);
  for (const auto& row : rows) EXPECT_TRUE(row.counts.conserved());
}

TEST(Funnel, MissingCheckpointNamesStage) {
  test::TempDir dir;
  std::filesystem::create_directories(dir.file("solve"));
  try {
    funnel_report(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_checkpoint);
    EXPECT_NE(std::string(e.what()).find("solve"), std::string::npos);
  }
}

TEST(Reasons, Vocabulary) {
  for (std::string_view r : kRejectReasons) EXPECT_TRUE(is_known_reason(r));
  for (CheckId id : kAllChecks) EXPECT_TRUE(is_known_reason(to_string(id)));
  EXPECT_FALSE(is_known_reason("exploded"));
}

TEST(RewriteLines, ReplacesContent) {
  test::TempDir dir;
  std::string path = dir.file("f");
  rewrite_lines(path, {"b", "a"});
  EXPECT_EQ(test::read_file(path), "b\na\n");
  EXPECT_EQ(read_lines(path), (std::vector<std::string>{"b", "a"}));
}

}  // namespace
}  // namespace caco::store
