#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "caco/answer/answer_engine.hpp"
#include "caco/core/error.hpp"

namespace caco::answer {
namespace {

TEST(ExtractBoxed, FourDigitCaseFinalBox) {
  std::string text = "= 16 - 2 = \\boxed{14}\n$$\n\n### Final Answer:\n\n$$\n\\boxed{14}\n$$\n";
  EXPECT_EQ(extract_boxed(text), "14");
}

TEST(ExtractBoxed, KeepsNestedBraces) {
  EXPECT_EQ(extract_boxed("so $$\\boxed{3\\sqrt{3}}$$"), "3\\sqrt{3}");
  EXPECT_EQ(extract_boxed("...\\boxed{\\frac{1}{4}} end"), "\\frac{1}{4}");
}

TEST(ExtractBoxed, LastOccurrenceWins) {
  EXPECT_EQ(extract_boxed("first \\boxed{8} then \\boxed{-3}"), "-3");
}

TEST(ExtractBoxed, MissingBoxThrows) {
  try {
    extract_boxed("the answer is 14");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_boxed_answer);
  }
}

TEST(ParseAnswer, Integer) {
  AnswerForm f = parse_answer("14");
  ASSERT_EQ(f.kind(), AnswerKind::integer);
  EXPECT_EQ(std::get<IntegerAnswer>(f.value).digits, "14");
}

TEST(ParseAnswer, FracIsRational) {
  AnswerForm f = parse_answer("\\frac{1}{4}");
  ASSERT_EQ(f.kind(), AnswerKind::rational);
  EXPECT_EQ(std::get<RationalAnswer>(f.value), (RationalAnswer{1, 4}));
  EXPECT_EQ(parse_answer("2/8").value, f.value);
}

TEST(ParseAnswer, SqrtIsSymbolic) {
  AnswerForm f = parse_answer("3\\sqrt{3}");
  ASSERT_EQ(f.kind(), AnswerKind::symbolic);
  EXPECT_NEAR(static_cast<double>(*f.to_real()), 3.0 * std::sqrt(3.0), 1e-12);
}

TEST(ParseAnswer, StripsMarkup) {
  EXPECT_EQ(parse_answer("$1,234$").kind(), AnswerKind::integer);
  EXPECT_EQ(std::get<IntegerAnswer>(parse_answer("$1,234$").value).digits, "1234");
  EXPECT_EQ(parse_answer("\\left(1+1\\right)").raw, "(1+1)");
  EXPECT_TRUE(answers_match(parse_answer("\\left(1+1\\right)"), parse_answer("2")));
}

TEST(ParseAnswer, LiteralFallback) {
  EXPECT_EQ(parse_answer("[1, 2]").kind(), AnswerKind::literal);
  EXPECT_EQ(parse_answer("x + y").kind(), AnswerKind::literal);
}

TEST(NormalizeStdout, LastNonEmptyLine) {
  EXPECT_EQ(normalize_stdout("4.5\n").kind(), AnswerKind::decimal);
  EXPECT_DOUBLE_EQ(std::get<DecimalAnswer>(normalize_stdout("4.5\n").value).value, 4.5);
  EXPECT_EQ(std::get<IntegerAnswer>(normalize_stdout("-3\n").value).digits, "-3");
  EXPECT_EQ(std::get<IntegerAnswer>(normalize_stdout("debug\n8\n\n").value).digits, "8");
}

TEST(NormalizeStdout, BlankOutputThrows) {
  try {
    normalize_stdout(" \n\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_output);
  }
}

TEST(AnswersMatch, SymbolicAgainstFloat) {
  EXPECT_TRUE(answers_match(parse_answer("5.196152422706632"), parse_answer("3\\sqrt{3}")));
  EXPECT_TRUE(answers_match(parse_answer("\\frac{1}{4}"), normalize_stdout("1/4\n")));
  EXPECT_TRUE(answers_match(parse_answer("\\frac{1}{4}"), parse_answer("0.25")));
}

TEST(AnswersMatch, DistinctIntegers) {
  EXPECT_TRUE(answers_match(parse_answer("14"), parse_answer("14")));
  EXPECT_FALSE(answers_match(parse_answer("8"), parse_answer("14")));
}

TEST(AnswersMatch, Literals) {
  EXPECT_TRUE(answers_match(parse_answer("[1,  2]"), parse_answer("[1, 2]")));
  EXPECT_TRUE(answers_match(parse_answer("Yes"), parse_answer("yes")));
  EXPECT_FALSE(answers_match(parse_answer("abc"), parse_answer("14")));
}

TEST(AnswersMatch, ToleranceFloorOfOne) {
  EXPECT_TRUE(answers_match(parse_answer("0"), parse_answer("0.0000005")));
  EXPECT_FALSE(answers_match(parse_answer("0"), parse_answer("0.000002")));
  EXPECT_TRUE(answers_match(parse_answer("1000000"), parse_answer("1000000.9")));
  EXPECT_FALSE(answers_match(parse_answer("1000000"), parse_answer("1000001.1")));
}

TEST(Render, NumericRoundTrip) {
  for (const char* raw : {"14", "-3", "\\frac{1}{4}", "4.5", "3\\sqrt{3}", "2\\pi/3", "1e-7"}) {
    AnswerForm f = parse_answer(raw);
    AnswerForm back = parse_answer(render(f));
    EXPECT_TRUE(back.same_value(f)) << raw << " -> " << render(f);
  }
}

TEST(AnswerProperties, RationalsMatchTheirDecimals) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> dist(-1000000, 1000000);
  for (int i = 0; i < 2000; ++i) {
    long long p = dist(rng);
    long long q = dist(rng);
    if (q == 0) continue;
    AnswerForm rational = parse_answer(std::to_string(p) + "/" + std::to_string(q));
    AnswerForm decimal = parse_answer(format_decimal(static_cast<double>(p) / static_cast<double>(q)));
    ASSERT_TRUE(answers_match(rational, decimal)) << p << "/" << q;
  }
}

TEST(AnswerProperties, ReflexiveAndSymmetric) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(-50, 50);
  std::vector<AnswerForm> forms;
  for (int i = 0; i < 60; ++i) {
    int a = small(rng);
    int b = small(rng);
    forms.push_back(parse_answer(std::to_string(a)));
    if (b != 0) forms.push_back(parse_answer("\\frac{" + std::to_string(a) + "}{" + std::to_string(b) + "}"));
    forms.push_back(parse_answer(format_decimal(a / 7.0)));
    forms.push_back(parse_answer(std::to_string(std::abs(a)) + "\\sqrt{" + std::to_string(std::abs(b) + 1) + "}"));
    forms.push_back(parse_answer("word" + std::to_string(a)));
  }
  for (const auto& x : forms) {
    ASSERT_TRUE(answers_match(x, x)) << x.raw;
    for (const auto& y : forms) ASSERT_EQ(answers_match(x, y), answers_match(y, x)) << x.raw << " / " << y.raw;
  }
}

}  // namespace
}  // namespace caco::answer
