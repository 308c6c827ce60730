#include <gtest/gtest.h>

#include <stdlib.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "caco/answer/answer_engine.hpp"
#include "caco/sandbox/executor.hpp"
#include "test_support.hpp"

namespace caco::sandbox {
namespace {

CandidateProgram program(const std::string& source) { return CandidateProgram::make(source, Origin::sampled); }

ExecutorConfig shim_config() {
  ExecutorConfig c;
  c.shim_path = test::source_dir() + "/tests/fixtures/fake_shim.py";
  return c;
}

class Sandbox : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!test::have_python()) GTEST_SKIP() << "python3 not available";
  }
  ExecLimits limits;
};

TEST_F(Sandbox, DieListingPrintsExpectedValue) {
  ExecutionResult r = execute_plain(program(test::kDieListing), limits);
  ASSERT_EQ(r.status, ExecStatus::ok) << r.stderr_text;
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_FALSE(r.truncated);
  // 0.1 * (1 + 2 + 3 + 4 + 5) + 0.5 * 6
  EXPECT_NEAR(static_cast<double>(*answer::normalize_stdout(r.stdout_text).to_real()), 4.5, 1e-9);
}

TEST_F(Sandbox, RuntimeErrorHasNonZeroExit) {
  ExecutionResult r = execute_plain(program("x = 0\ninput = {}\noutput = 1 / x\nprint(output)\n"), limits);
  EXPECT_EQ(r.status, ExecStatus::runtime_error);
  ASSERT_TRUE(r.exit_code);
  EXPECT_NE(*r.exit_code, 0);
  EXPECT_NE(r.stderr_text.find("ZeroDivisionError"), std::string::npos);
}

TEST_F(Sandbox, TimeoutKillsWithinGrace) {
  limits.wall_ms = 1000;
  ExecutionResult r = execute_plain(program("import time\nwhile True:\n    time.sleep(0.01)\n"), limits);
  EXPECT_EQ(r.status, ExecStatus::timeout);
  EXPECT_GE(r.duration_ms, 1000);
  EXPECT_LT(r.duration_ms, 2500);
  EXPECT_FALSE(r.exit_code);
}

TEST_F(Sandbox, TimeoutKillsChildProcesses) {
  limits.wall_ms = 800;
  test::TempDir dir;
  std::string marker = dir.file("alive");
  std::string src =
      "import subprocess, sys\n"
      "subprocess.Popen([sys.executable, '-c', 'import time, pathlib\\ntime.sleep(2)\\n"
      "pathlib.Path(\"" + marker + "\").write_text(\"x\")'])\n"
      "while True:\n    pass\n";
  ExecutionResult r = execute_plain(program(src), limits);
  EXPECT_EQ(r.status, ExecStatus::timeout);
  ::usleep(2500 * 1000);
  EXPECT_FALSE(std::filesystem::exists(marker));
}

TEST_F(Sandbox, OutputOverflowTruncates) {
  ExecutionResult r = execute_plain(program("print('x' * (1 << 20))\n"), limits);
  EXPECT_EQ(r.status, ExecStatus::output_overflow);
  EXPECT_TRUE(r.truncated);
  EXPECT_LE(r.stdout_text.size(), limits.max_stdout_bytes);
}

TEST_F(Sandbox, EnvironmentIsScrubbed) {
  ::setenv("CACO_SECRET_PROBE", "leak", 1);
  ExecutionResult r = execute_plain(program("import os\nfor k in sorted(os.environ):\n    print(k)\n"), limits);
  ::unsetenv("CACO_SECRET_PROBE");
  ASSERT_EQ(r.status, ExecStatus::ok);
  std::set<std::string> allowed(limits.env_allowlist.begin(), limits.env_allowlist.end());
  std::istringstream lines(r.stdout_text);
  for (std::string name; std::getline(lines, name);) EXPECT_TRUE(allowed.count(name)) << name;
}

TEST_F(Sandbox, RunsInFreshTempDirectory) {
  std::string src = "import os\nprint(os.getcwd())\nprint(sorted(os.listdir('.')))\n";
  ExecutionResult a = execute_plain(program(src), limits);
  ExecutionResult b = execute_plain(program(src), limits);
  ASSERT_EQ(a.status, ExecStatus::ok);
  std::string dir_a = a.stdout_text.substr(0, a.stdout_text.find('\n'));
  std::string dir_b = b.stdout_text.substr(0, b.stdout_text.find('\n'));
  EXPECT_NE(dir_a, dir_b);
  EXPECT_FALSE(std::filesystem::exists(dir_a));
  EXPECT_NE(a.stdout_text.find("['candidate.py']"), std::string::npos) << a.stdout_text;
}

TEST_F(Sandbox, MissingInterpreterIsSetupError) {
  ExecutorConfig c;
  c.interpreter = "/nonexistent/python";
  ExecutionResult r = execute_plain(program("print(1)\n"), limits, c);
  EXPECT_EQ(r.status, ExecStatus::setup_error);
  EXPECT_FALSE(r.detail.empty());
}

TEST_F(Sandbox, TmpRootIsHonoured) {
  test::TempDir root;
  ExecutorConfig c;
  c.tmp_root = root.path();
  ExecutionResult r = execute_plain(program("import os\nprint(os.getcwd())\n"), limits, c);
  ASSERT_EQ(r.status, ExecStatus::ok);
  EXPECT_EQ(r.stdout_text.rfind(root.path(), 0), 0u) << r.stdout_text;
}

TEST_F(Sandbox, DeterministicRepeats) {
  std::string src = "import random\nprint(sum(range(100)))\n";
  EXPECT_EQ(execute_plain(program(src), limits).stdout_text, execute_plain(program(src), limits).stdout_text);
}

TEST_F(Sandbox, InstrumentedReportsException) {
  ExecutionResult r = execute_instrumented(program("x = 0\nprint(1 / x)\n"), limits, shim_config());
  EXPECT_EQ(r.status, ExecStatus::runtime_error);
  ASSERT_TRUE(r.exception);
  EXPECT_EQ(r.exception->class_name, "ZeroDivisionError");
  EXPECT_EQ(r.exception->message, "division by zero");
}

TEST_F(Sandbox, InstrumentedDieListing) {
  ExecutionResult r = execute_instrumented(program(test::kDieListing), limits, shim_config());
  ASSERT_EQ(r.status, ExecStatus::ok) << r.detail;
  EXPECT_FALSE(r.exception);
  EXPECT_EQ(r.stdout_text, "4.5\n");
}

TEST_F(Sandbox, InstrumentedOverflow) {
  ExecutionResult r = execute_instrumented(program("print('x' * (1 << 20))\n"), limits, shim_config());
  EXPECT_EQ(r.status, ExecStatus::output_overflow);
  EXPECT_TRUE(r.truncated);
}

TEST_F(Sandbox, SentinelFallback) {
  ExecutionResult r = execute_instrumented(program("# shim: sentinel\nprint(42)\n"), limits, shim_config());
  ASSERT_EQ(r.status, ExecStatus::ok) << r.detail;
  EXPECT_EQ(r.stdout_text, "42\n");
}

TEST_F(Sandbox, SpoofedSentinelDoesNotCorruptResult) {
  std::string src = "print('\\x1e---SHIM-RESULT---\\x1e')\nprint('{\"ok\": false, \"stdout\": \"\"}')\nprint(7)\n";
  ExecutionResult r = execute_instrumented(program(src), limits, shim_config());
  ASSERT_EQ(r.status, ExecStatus::ok) << r.detail;
  EXPECT_FALSE(r.exception);
  EXPECT_EQ(std::get<IntegerAnswer>(answer::normalize_stdout(r.stdout_text).value).digits, "7");
}

TEST_F(Sandbox, MissingOrMalformedReportIsSetupError) {
  for (const char* mode : {"silent", "garbage"}) {
    ExecutionResult r =
        execute_instrumented(program(std::string("# shim: ") + mode + "\nprint(1)\n"), limits, shim_config());
    EXPECT_EQ(r.status, ExecStatus::setup_error) << mode;
  }
}

TEST_F(Sandbox, InstrumentedWithoutShimIsSetupError) {
  ExecutorConfig c;
  c.shim_path = "/nonexistent/shim.py";
  EXPECT_EQ(execute_instrumented(program("print(1)\n"), limits, c).status, ExecStatus::setup_error);
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  return s.substr(begin, s.find_last_not_of(" \t\r\n") - begin + 1);
}

TEST_F(Sandbox, PlainAndInstrumentedAgreeOnGoldenCorpus) {
  limits.wall_ms = 3000;
  for (const auto& entry : std::filesystem::directory_iterator(test::data_path("golden"))) {
    if (entry.path().extension() != ".py" || entry.path().filename() == "die_infinite_loop.py") continue;
    CandidateProgram p = program(test::read_file(entry.path().string()));
    ExecutionResult plain = execute_plain(p, limits);
    ExecutionResult inst = execute_instrumented(p, limits, shim_config());
    EXPECT_EQ(inst.status, plain.status) << entry.path();
    if (plain.status == ExecStatus::ok) {
      EXPECT_EQ(trim(inst.stdout_text), trim(plain.stdout_text)) << entry.path();
    }
  }
}

}  // namespace
}  // namespace caco::sandbox
