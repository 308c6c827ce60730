#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "caco/core/error.hpp"
#include "caco/validator/python_ast.hpp"
#include "caco/validator/validator.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace caco::validator {
namespace {

using test::kDieListing;

const char* kAddExample =
    "def add(a, b):\n"
    "    return a + b\n"
    "\n"
    "# Represent the input as a dictionary named 'input'\n"
    "input = {\"a\": 3, \"b\": 5}\n"
    "# Call the function with the input dictionary, assign the result to 'output'\n"
    "output = add(**input)\n"
    "# Print the output\n"
    "print(output)\n";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

const CheckResult& check(const ValidationReport& r, CheckId id) {
  for (const auto& c : r.checks) {
    if (c.id == id) return c;
  }
  throw std::logic_error("check missing");
}

TEST(ParseStructure, DieListingFacts) {
  StructuralFacts f = parse_structure(kDieListing);
  EXPECT_EQ(f.input_keys, (std::vector<std::string>{"probabilities", "values"}));
  EXPECT_EQ(f.called_function, "expected_value");
  EXPECT_TRUE(f.has_output_print);
  EXPECT_EQ(f.noncomment_lines, 7);
}

TEST(ParseStructure, NoTemplate) {
  StructuralFacts f = parse_structure("def f():\n pass");
  EXPECT_TRUE(f.input_keys.empty());
  EXPECT_FALSE(f.called_function);
  EXPECT_FALSE(f.has_output_print);
}

TEST(ParseStructure, CallWithoutSpread) {
  StructuralFacts f = parse_structure("def g(x):\n    return x\ninput = {\"a\": 1}\noutput = g(5)\nprint(output)\n");
  EXPECT_EQ(f.input_keys, std::vector<std::string>{"a"});
  EXPECT_FALSE(f.called_function);
}

TEST(ParseStructure, SyntaxErrorThrows) {
  try {
    parse_structure("def f(:\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::syntax_error);
  }
}

TEST(ParseStructure, DuplicateKeysCollapse) {
  StructuralFacts f = parse_structure("input = {\"a\": 1, \"a\": 2, \"b\": 3}\n");
  EXPECT_EQ(f.input_keys, (std::vector<std::string>{"a", "b"}));
}

TEST(CountLines, Examples) {
  EXPECT_EQ(count_noncomment_lines(""), 0);
  EXPECT_EQ(count_noncomment_lines("# c\n\nx=1\n"), 1);
  EXPECT_EQ(count_noncomment_lines(kDieListing), 7);
  EXPECT_EQ(count_noncomment_lines(kAddExample), 5);
}

TEST(CountLines, StringsAndDocstrings) {
  EXPECT_EQ(count_noncomment_lines("x = '# not a comment'\n"), 1);
  EXPECT_EQ(count_noncomment_lines("def f():\n    \"\"\"Doc\n\n    # inside\n    \"\"\"\n"), 4);
  EXPECT_EQ(count_noncomment_lines("x = 1  # trailing\n   # indented comment\n"), 1);
}

TEST(UnusedKeys, Examples) {
  EXPECT_TRUE(unused_input_keys(kDieListing).empty());
  std::string mutant = replace(kDieListing, "def expected_value(probabilities, values):",
                               "def expected_value(probabilities, values, unused_extra):");
  mutant = replace(mutant, "\"values\": values}", "\"values\": values, \"unused_extra\": 0}");
  EXPECT_EQ(unused_input_keys(mutant), std::vector<std::string>{"unused_extra"});
  EXPECT_TRUE(unused_input_keys("def f():\n    return 1\ninput = {}\noutput = f(**input)\nprint(output)\n").empty());
}

TEST(UnusedKeys, KwargsAndMappingReads) {
  std::string kwargs =
      "def f(**kw):\n    return kw['a']\ninput = {'a': 1, 'b': 2}\noutput = f(**input)\nprint(output)\n";
  EXPECT_TRUE(unused_input_keys(kwargs).empty());
  std::string dead_kwargs = "def f(**kw):\n    return 1\ninput = {'a': 1}\noutput = f(**input)\nprint(output)\n";
  EXPECT_EQ(unused_input_keys(dead_kwargs), std::vector<std::string>{"a"});
  std::string read = "def f(a, b):\n    return a\ninput = {'a': 1, 'b': 2}\nprint(input['b'])\n"
                     "output = f(**input)\nprint(output)\n";
  EXPECT_TRUE(unused_input_keys(read).empty());
}

TEST(UnusedKeys, MethodCallee) {
  std::string src =
      "class Solver:\n"
      "    def run(self, n, k):\n"
      "        return n\n"
      "s = Solver()\n"
      "input = {'n': 3, 'k': 4}\n"
      "output = s.run(**input)\n"
      "print(output)\n";
  EXPECT_EQ(unused_input_keys(src), std::vector<std::string>{"k"});
}

TEST(Validate, DieListingPasses) {
  ValidationReport r = validate(kDieListing);
  EXPECT_TRUE(r.passed);
  ASSERT_EQ(r.checks.size(), std::size(kAllChecks));
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    EXPECT_EQ(r.checks[i].id, kAllChecks[i]);
    EXPECT_TRUE(r.checks[i].passed);
  }
}

TEST(Validate, AddExampleFailsOnlyMinLines) {
  ValidationReport r = validate(kAddExample);
  EXPECT_FALSE(r.passed);
  for (const auto& c : r.checks) EXPECT_EQ(c.passed, c.id != CheckId::min_lines) << to_string(c.id);
  EXPECT_TRUE(validate(kAddExample, 5).passed);
}

TEST(Validate, SyntaxFailureIsACheckNotAnError) {
  ValidationReport r = validate("def f(:\n");
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.first_failure(), CheckId::syntax_ok);
  EXPECT_EQ(r.checks.size(), std::size(kAllChecks));
}

TEST(Validate, PrintMustBeBareOutput) {
  std::string src = replace(kDieListing, "print(output)", "print(output, end='')");
  EXPECT_FALSE(check(validate(src), CheckId::prints_output).passed);
  src = replace(kDieListing, "print(output)", "print(output + 0)");
  EXPECT_FALSE(check(validate(src), CheckId::prints_output).passed);
}

TEST(ValidateProperties, PassedImpliesComponents) {
  for (const char* src : {kDieListing, kAddExample}) {
    ValidationReport r = validate(src);
    if (r.passed) {
      EXPECT_NO_THROW(parse_structure(src));
      EXPECT_GE(count_noncomment_lines(src), kDefaultMinLines);
      EXPECT_TRUE(unused_input_keys(src).empty());
    }
  }
}

TEST(ValidateProperties, CommentLinesNeverChangeOutcomes) {
  std::mt19937 rng(5);
  for (const std::string base : {std::string(kDieListing), std::string(kAddExample)}) {
    ValidationReport reference = validate(base);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::string> lines;
      std::size_t start = 0;
      while (start < base.size()) {
        std::size_t nl = base.find('\n', start);
        lines.push_back(base.substr(start, nl - start + 1));
        start = nl + 1;
      }
      // Comment lines go only where a new statement could begin at column 0.
      std::size_t at = rng() % (lines.size() + 1);
      while (at > 0 && at < lines.size() && lines[at].rfind("    ", 0) == 0) --at;
      lines.insert(lines.begin() + static_cast<long>(at), "# note " + std::to_string(trial) + "\n");
      std::string mutated;
      for (const auto& l : lines) mutated += l;
      ValidationReport r = validate(mutated);
      ASSERT_EQ(r.passed, reference.passed) << mutated;
      for (std::size_t i = 0; i < r.checks.size(); ++i) ASSERT_EQ(r.checks[i].passed, reference.checks[i].passed);
    }
  }
}

TEST(ValidateProperties, RenamingCalledFunction) {
  for (const std::string name : {"f", "compute_expected", "_helper2"}) {
    std::string src = kDieListing;
    for (std::size_t pos; (pos = src.find("expected_value")) != std::string::npos;) src.replace(pos, 14, name);
    ValidationReport r = validate(src);
    EXPECT_TRUE(r.passed) << name;
    EXPECT_EQ(r.facts.called_function, name);
  }
}

TEST(ValidateProperties, Deterministic) { EXPECT_EQ(validate(kDieListing), validate(kDieListing)); }

// Parity with the reference Python parser: every snippet and seeded mutant
// must be accepted or rejected exactly as ast.parse does.
class ParserParity : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!test::have_python()) GTEST_SKIP() << "python3 not available";
  }

  std::vector<bool> python_verdicts(const std::vector<std::string>& sources) {
    test::TempDir dir;
    for (std::size_t i = 0; i < sources.size(); ++i) test::write_file(dir.file(std::to_string(i) + ".py"), sources[i]);
    std::string script = dir.file("check.py");
    test::write_file(script,
                     "import ast, sys, warnings\n"
                     "warnings.simplefilter('ignore')\n"
                     "for i in range(int(sys.argv[2])):\n"
                     "    src = open(f'{sys.argv[1]}/{i}.py', 'rb').read()\n"
                     "    try:\n"
                     "        ast.parse(src)\n"
                     "        print('ok')\n"
                     "    except (SyntaxError, ValueError):\n"
                     "        print('err')\n");
    std::string cmd = "python3 " + script + " " + dir.path() + " " + std::to_string(sources.size());
    FILE* pipe = popen(cmd.c_str(), "r");
    std::vector<bool> verdicts;
    char buf[16];
    while (fgets(buf, sizeof buf, pipe)) verdicts.push_back(std::string(buf) == "ok\n");
    pclose(pipe);
    return verdicts;
  }

  void compare(const std::vector<std::string>& sources) {
    std::vector<bool> expected = python_verdicts(sources);
    ASSERT_EQ(expected.size(), sources.size());
    int mismatches = 0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      bool ours = true;
      try {
        py::parse_module(sources[i]);
      } catch (const Error&) {
        ours = false;
      }
      if (ours != expected[i]) {
        ++mismatches;
        ADD_FAILURE() << "python " << (expected[i] ? "accepts" : "rejects") << ":\n" << sources[i];
      }
    }
    EXPECT_EQ(mismatches, 0);
  }
};

TEST_F(ParserParity, Snippets) {
  auto snippets = nlohmann::json::parse(test::read_file(test::data_path("parity_snippets.json")));
  compare(snippets.get<std::vector<std::string>>());
}

TEST_F(ParserParity, GoldenCorpus) {
  std::vector<std::string> sources;
  for (const auto& entry : std::filesystem::directory_iterator(test::data_path("golden"))) {
    if (entry.path().extension() == ".py") sources.push_back(test::read_file(entry.path().string()));
  }
  compare(sources);
}

TEST_F(ParserParity, SeededMutants) {
  std::vector<std::string> bases;
  for (const auto& entry : std::filesystem::directory_iterator(test::data_path("golden"))) {
    if (entry.path().extension() == ".py") bases.push_back(test::read_file(entry.path().string()));
  }
  auto snippets = nlohmann::json::parse(test::read_file(test::data_path("parity_snippets.json")));
  for (const auto& s : snippets) bases.push_back(s.get<std::string>());

  const std::string alphabet = ":()[]{},.=*'\"\\#@ \n\tabx01";
  std::mt19937 rng(2024);
  std::vector<std::string> mutants;
  for (int i = 0; i < 1500; ++i) {
    std::string src = bases[rng() % bases.size()];
    int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits && !src.empty(); ++e) {
      std::size_t pos = rng() % src.size();
      switch (rng() % 3) {
        case 0: src.erase(pos, 1); break;
        case 1: src.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
        default: src[pos] = alphabet[rng() % alphabet.size()]; break;
      }
    }
    mutants.push_back(std::move(src));
  }
  compare(mutants);
}

}  // namespace
}  // namespace caco::validator
