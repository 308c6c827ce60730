#include <gtest/gtest.h>

#include <random>

#include "caco/core/error.hpp"
#include "caco/core/hash.hpp"
#include "caco/core/record_io.hpp"
#include "caco/core/types.hpp"
#include "caco/answer/answer_engine.hpp"

namespace caco {
namespace {

// Reference digests from sha256sum over the normalized bytes.
constexpr const char* kEmptyDigest = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
constexpr const char* kPrintOneDigest = "cc42155088fca5730758db72b2a5bca33112a941dfaa2d43098ec422ce4ea213";

TEST(ProgramId, EmptySource) { EXPECT_EQ(program_id(""), kEmptyDigest); }

TEST(ProgramId, LineEndingsNormalized) {
  EXPECT_EQ(program_id("print(1)\n"), kPrintOneDigest);
  EXPECT_EQ(program_id("print(1)\r\n"), kPrintOneDigest);
  EXPECT_EQ(program_id("print(1)"), kPrintOneDigest);
  EXPECT_EQ(program_id("print(1)\n\n   \n"), kPrintOneDigest);
}

TEST(ProgramId, Deterministic) { EXPECT_EQ(program_id("x = 1\ny = 2\n"), program_id("x = 1\ny = 2\n")); }

TEST(ProgramId, DistinctSourcesDistinctIds) {
  std::set<std::string> ids;
  for (int i = 0; i < 500; ++i) ids.insert(program_id("x = " + std::to_string(i) + "\n"));
  EXPECT_EQ(ids.size(), 500u);
  EXPECT_NE(program_id("x = 1\n"), program_id(" x = 1\n"));
}

TEST(Verdict, AcceptedIsConjunction) {
  for (bool a : {false, true}) {
    for (bool c : {false, true}) EXPECT_EQ(Verdict(a, c).accepted(), a && c);
  }
}

TEST(Origin, StringsRoundTrip) {
  for (Origin o : {Origin::seed_math, Origin::seed_algo, Origin::sampled}) {
    EXPECT_EQ(origin_from_string(to_string(o)), o);
  }
  EXPECT_EQ(to_string(Origin::seed_math), "seed-math");
  EXPECT_FALSE(origin_from_string("seed"));
}

TEST(ExecStatus, Names) {
  EXPECT_EQ(to_string(ExecStatus::runtime_error), "runtime-error");
  EXPECT_EQ(to_string(ExecStatus::output_overflow), "output-overflow");
}

TEST(SamplingParams, Validity) {
  SamplingParams p;
  EXPECT_TRUE(p.valid());
  p.top_p = 0;
  EXPECT_FALSE(p.valid());
  p = {};
  p.min_p = 1.0;
  EXPECT_FALSE(p.valid());
}

DatasetRecord full_record() {
  ProgramMeta meta;
  meta.source = "unit";
  meta.solve_rate = 0.25;
  meta.ground_truth = "\\frac{1}{4}";
  meta.attrs["stdout"] = "1/4\n";
  DatasetRecord r;
  r.program = CandidateProgram::make("print('π')\n", Origin::seed_math, meta);
  r.problem = Problem{"Find a so the line is tangent; √3 and π appear."};
  Solution s;
  s.text = "so \\boxed{\\frac{1}{4}}";
  s.boxed_raw = "\\frac{1}{4}";
  s.answer = answer::parse_answer(*s.boxed_raw);
  r.solution = s;
  r.verdict = Verdict(true, false);
  r.lineage = {{"unify", "1970-01-01T00:00:00Z"}, {"filter-seed", "1970-01-01T00:00:00Z"}};
  return r;
}

TEST(Roundtrip, MinimalRecord) {
  DatasetRecord r;
  r.program = CandidateProgram::make("x = 1\n", Origin::sampled);
  EXPECT_EQ(roundtrip(r), r);
}

TEST(Roundtrip, NonAsciiRecord) {
  DatasetRecord r = full_record();
  EXPECT_EQ(roundtrip(r), r);
}

TEST(Roundtrip, LongSource) {
  std::string source;
  std::mt19937 rng(3);
  while (source.size() < 10000) source += "x" + std::to_string(rng() % 1000) + " = " + std::to_string(rng()) + "\n";
  DatasetRecord r;
  r.program = CandidateProgram::make(source, Origin::sampled);
  EXPECT_EQ(roundtrip(r), r);
}

TEST(Roundtrip, FieldNames) {
  nlohmann::json j = record_to_json(full_record());
  for (const char* key : {"id", "problem", "solution", "code", "origin", "meta", "verdict", "lineage"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["verdict"]["accepted"], false);
  EXPECT_EQ(j["verdict"]["answer_match"], true);
}

TEST(Roundtrip, GeneratedRecords) {
  std::mt19937 rng(19);
  const char* answers[] = {"14", "-3", "\\frac{1}{4}", "4.5", "3\\sqrt{3}", "[1, 2]"};
  for (int i = 0; i < 200; ++i) {
    DatasetRecord r;
    ProgramMeta meta;
    if (rng() % 2) meta.solve_rate = (rng() % 101) / 100.0;
    if (rng() % 2) meta.ground_truth = answers[rng() % 6];
    if (rng() % 3 == 0) meta.attrs["variant"] = std::to_string(rng() % 4);
    r.program = CandidateProgram::make("y = " + std::to_string(rng()) + "\n", static_cast<Origin>(rng() % 3), meta);
    if (rng() % 2) r.problem = Problem{"problem \"" + std::to_string(i) + "\"\n\ttab"};
    if (rng() % 2) {
      Solution s;
      s.text = "text";
      if (rng() % 2) {
        s.boxed_raw = answers[rng() % 6];
        s.answer = answer::parse_answer(*s.boxed_raw);
      }
      r.solution = s;
    }
    if (rng() % 2) r.verdict = Verdict(rng() % 2, rng() % 2);
    for (unsigned k = 0; k < rng() % 4; ++k) r.lineage.push_back({"stage" + std::to_string(k), "t"});
    ASSERT_EQ(roundtrip(r), r) << serialize_record(r);
  }
}

TEST(RecordIo, MismatchedIdIsParseError) {
  nlohmann::json j = record_to_json(full_record());
  j["code"] = "changed\n";
  try {
    record_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
  }
}

TEST(RecordIo, GarbageLineIsParseError) {
  EXPECT_THROW(parse_record("{not json"), Error);
  EXPECT_THROW(parse_record("{\"id\": 3}"), Error);
}

TEST(DatasetRecord, KeyIncludesVariant) {
  DatasetRecord r = full_record();
  EXPECT_EQ(r.key(), r.program.id);
  r.program.meta.attrs["variant"] = "0";
  EXPECT_EQ(r.key(), r.program.id);
  r.program.meta.attrs["variant"] = "2";
  EXPECT_EQ(r.key(), r.program.id + "#000002");
}

}  // namespace
}  // namespace caco
