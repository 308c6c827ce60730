#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "caco/core/error.hpp"
#include "caco/core/hash.hpp"
#include "caco/llm/gateway.hpp"
#include "test_support.hpp"

namespace caco::llm {
namespace {

using nlohmann::json;

PromptLibrary library() { return PromptLibrary::load(test::prompts_dir()); }

GatewayOptions fast_options() {
  GatewayOptions o;
  o.backoff_ms = 1;
  return o;
}

TEST(Placeholders, BracesAndFields) {
  EXPECT_EQ(placeholders_of("{problem} and {{literal}} and {not a field} {x1}"),
            (std::set<std::string>{"problem", "x1"}));
  EXPECT_EQ(substitute("a {{b}} {c}", {{"c", "{x}"}}), "a {b} {x}");
}

TEST(Placeholders, MissingKeyNamed) {
  try {
    substitute("{problem}", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_placeholder);
    EXPECT_NE(std::string(e.what()).find("problem"), std::string::npos);
  }
}

TEST(Prompts, ReverserPutsCodeUnderHeading) {
  auto messages = library().render(Role::reverser, {{"code", "print(42)"}});
  ASSERT_EQ(messages.size(), 1u);
  EXPECT_EQ(messages[0].role, "user");
  auto heading = messages[0].content.find("### Code:");
  ASSERT_NE(heading, std::string::npos);
  EXPECT_NE(messages[0].content.find("print(42)", heading), std::string::npos);
  EXPECT_NE(messages[0].content.find("Please generate **Math Problem**"), std::string::npos);
}

TEST(Prompts, CodegenScaffold) {
  auto messages = library().render(Role::codegen, {});
  ASSERT_EQ(messages.size(), 2u);
  EXPECT_EQ(messages[0].role, "system");
  EXPECT_EQ(messages[0].content, "You are a helpful assistant.");
  EXPECT_EQ(messages[1].role, "user");
  EXPECT_EQ(messages[1].content, "");
}

TEST(Prompts, SolverNeedsProblem) {
  try {
    library().render(Role::solver, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_placeholder);
    EXPECT_NE(std::string(e.what()).find("problem"), std::string::npos);
  }
}

TEST(Prompts, SolverAsksForBoxedAnswer) {
  auto messages = library().render(Role::solver, {{"problem", "What is 2+2?"}});
  EXPECT_NE(messages[0].content.find(
                "What is 2+2?. Please reason step by step, and put your final answer within \\boxed{}."),
            std::string::npos);
}

TEST(Prompts, UnifierExampleHasSingleBraces) {
  auto messages = library().render(Role::unifier_math, {{"problem", "P"}, {"solution", "S"}});
  EXPECT_NE(messages[0].content.find("input = {\"well_height\": 20"), std::string::npos);
}

TEST(Prompts, EveryRoleHasATemplate) {
  PromptLibrary lib = library();
  for (Role role : kAllRoles) EXPECT_NO_THROW(lib.for_role(role)) << to_string(role);
}

TEST(Prompts, RenderIsInjectiveInBindings) {
  PromptLibrary lib = library();
  std::set<std::string> seen;
  for (int i = 0; i < 50; ++i) {
    auto m = lib.render(Role::judge_consistency, {{"solution", "s" + std::to_string(i)}, {"code", "c"}});
    EXPECT_TRUE(seen.insert(m[0].content).second);
  }
}

TEST(Prompts, ChecksumMismatchRejected) {
  test::TempDir dir;
  for (const auto& entry : std::filesystem::directory_iterator(test::prompts_dir())) {
    std::filesystem::copy(entry.path(), dir.file(entry.path().filename().string()));
  }
  test::write_file(dir.file("answer_generation.txt"), "tampered {problem}");
  try {
    PromptLibrary::load(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::prompt_checksum);
  }
}

TEST(Prompts, ManifestChecksumsMatchAssets) {
  json manifest = json::parse(test::read_file(test::prompts_dir() + "/manifest.json"));
  for (const auto& [file, digest] : manifest["sha256"].items()) {
    EXPECT_EQ(sha256_hex(test::read_file(test::prompts_dir() + "/" + file)), digest.get<std::string>()) << file;
  }
}

TEST(DefaultParams, PerRole) {
  SamplingParams codegen = default_params(Role::codegen);
  EXPECT_DOUBLE_EQ(codegen.temperature, 0.9);
  EXPECT_EQ(codegen.max_tokens, 1024);
  for (Role r : {Role::reverser, Role::solver}) {
    SamplingParams p = default_params(r);
    EXPECT_DOUBLE_EQ(p.temperature, 0.7);
    EXPECT_DOUBLE_EQ(p.top_p, 0.8);
    EXPECT_EQ(p.top_k, 20);
    EXPECT_DOUBLE_EQ(p.min_p, 0.0);
  }
  EXPECT_DOUBLE_EQ(default_params(Role::unifier_math).temperature, 0.6);
  EXPECT_DOUBLE_EQ(default_params(Role::judge_correct).temperature, 0.0);
}

TEST(ParseVerdict, Forms) {
  EXPECT_TRUE(parse_verdict("Yes"));
  EXPECT_FALSE(parse_verdict("no."));
  EXPECT_TRUE(parse_verdict("  **YES**, because"));
  try {
    parse_verdict("Maybe");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unparseable_verdict);
  }
  EXPECT_THROW(parse_verdict(""), Error);
}

TEST(MockGateway, ScriptedReply) {
  auto mock = std::make_shared<MockBackend>(json::parse(R"([{"role": "solver", "replies": ["A"]}])"));
  Gateway g(library(), mock, fast_options());
  Completion c = g.complete_role(Role::solver, {{"problem", "p"}});
  EXPECT_EQ(c.text, "A");
  EXPECT_EQ(c.attempts, 1);
}

TEST(MockGateway, RetriesThenSucceeds) {
  auto mock = std::make_shared<MockBackend>(
      json::parse(R"([{"role": "solver", "fail_first": 2, "replies": ["ok"]}])"));
  Gateway g(library(), mock, fast_options());
  Completion c = g.complete_role(Role::solver, {{"problem", "p"}});
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(c.attempts, 3);
}

TEST(MockGateway, ExhaustionIsBackendUnavailable) {
  auto mock = std::make_shared<MockBackend>(
      json::parse(R"([{"role": "solver", "fail_first": 10, "replies": ["ok"]}])"));
  Gateway g(library(), mock, fast_options());
  try {
    g.complete_role(Role::solver, {{"problem", "p"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
  }
  EXPECT_EQ(mock->calls(), 4);
}

TEST(MockGateway, LookupOrder) {
  Bindings exact{{"problem", "exact"}};
  json script = json::array({
      {{"role", "solver"}, {"replies", {"default"}}},
      {{"role", "solver"}, {"match", "needle"}, {"replies", {"by-match"}}},
      {{"role", "solver"}, {"bindings_digest", binding_digest(exact)}, {"replies", {"by-digest"}}},
  });
  Gateway g(library(), std::make_shared<MockBackend>(script), fast_options());
  EXPECT_EQ(g.complete_role(Role::solver, exact).text, "by-digest");
  EXPECT_EQ(g.complete_role(Role::solver, {{"problem", "a needle here"}}).text, "by-match");
  EXPECT_EQ(g.complete_role(Role::solver, {{"problem", "other"}}).text, "default");
}

TEST(MockGateway, RepliesPickedByOrdinal) {
  auto mock = std::make_shared<MockBackend>(json::parse(R"([{"role": "codegen", "replies": ["a", "b", "c"]}])"));
  Gateway g(library(), mock, fast_options());
  SamplingParams p = default_params(Role::codegen);
  EXPECT_EQ(g.complete(Role::codegen, g.render(Role::codegen, {}), p, "", 4).text, "b");
  EXPECT_EQ(g.complete(Role::codegen, g.render(Role::codegen, {}), p, "", 0).text, "a");
}

TEST(MockGateway, TruncationFlag) {
  auto mock = std::make_shared<MockBackend>(
      json::parse(R"([{"role": "solver", "replies": [{"text": "cut", "truncated": true}]}])"));
  Gateway g(library(), mock, fast_options());
  EXPECT_TRUE(g.complete_role(Role::solver, {{"problem", "p"}}).truncated);
}

TEST(MockGateway, JudgeParsesVerdicts) {
  auto mock = std::make_shared<MockBackend>(json::parse(R"([
    {"role": "judge-consistency", "match": "[yes]", "replies": ["Yes"]},
    {"role": "judge-consistency", "match": "[no]", "replies": ["no."]},
    {"role": "judge-consistency", "replies": ["Maybe"]}])"));
  Gateway g(library(), mock, fast_options());
  EXPECT_TRUE(g.judge(Role::judge_consistency, {{"solution", "[yes]"}, {"code", "c"}}));
  EXPECT_FALSE(g.judge(Role::judge_consistency, {{"solution", "[no]"}, {"code", "c"}}));
  EXPECT_THROW(g.judge(Role::judge_consistency, {{"solution", "?"}, {"code", "c"}}), Error);
  EXPECT_THROW(g.judge(Role::solver, {{"problem", "p"}}), Error);
}

TEST(MockGateway, InFlightBound) {
  auto mock = std::make_shared<MockBackend>(
      json::parse(R"([{"role": "solver", "delay_ms": 20, "replies": ["x"]}])"));
  GatewayOptions options = fast_options();
  options.max_in_flight = 3;
  Gateway g(library(), mock, options);
  std::vector<std::thread> threads;
  for (int t = 0; t < 12; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 3; ++i) g.complete_role(Role::solver, {{"problem", "p"}});
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mock->calls(), 36);
  EXPECT_LE(mock->max_in_flight(), 3);
  EXPECT_GE(mock->max_in_flight(), 2);
}

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpOptions options() {
    HttpOptions o;
    o.endpoint = "http://127.0.0.1:" + std::to_string(port_);
    o.api_key = "secret";
    o.models["solver"] = "solver-model";
    o.timeout_ms = 5000;
    return o;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpBackendTest, PostsChatCompletion) {
  json seen;
  std::string auth;
  server_.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices": [{"message": {"content": "\\boxed{14}"}, "finish_reason": "stop"}]})",
                    "application/json");
  });
  Gateway g(library(), std::make_shared<HttpBackend>(options()), fast_options());
  Completion c = g.complete_role(Role::solver, {{"problem", "p"}});
  EXPECT_EQ(c.text, "\\boxed{14}");
  EXPECT_FALSE(c.truncated);
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(seen["model"], "solver-model");
  EXPECT_DOUBLE_EQ(seen["temperature"].get<double>(), 0.7);
  EXPECT_DOUBLE_EQ(seen["top_p"].get<double>(), 0.8);
  EXPECT_EQ(seen["top_k"], 20);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
}

TEST_F(HttpBackendTest, RetriesServerErrorsAndFlagsLength) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices": [{"message": {"content": "partial"}, "finish_reason": "length"}]})",
                    "application/json");
  });
  Gateway g(library(), std::make_shared<HttpBackend>(options()), fast_options());
  Completion c = g.complete_role(Role::reverser, {{"code", "x"}});
  EXPECT_EQ(c.attempts, 3);
  EXPECT_TRUE(c.truncated);
}

TEST_F(HttpBackendTest, ClientErrorIsNotRetried) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  Gateway g(library(), std::make_shared<HttpBackend>(options()), fast_options());
  EXPECT_THROW(g.complete_role(Role::solver, {{"problem", "p"}}), Error);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, UnreachableEndpointExhaustsRetries) {
  HttpOptions o;
  o.endpoint = "http://127.0.0.1:1";
  o.timeout_ms = 500;
  GatewayOptions options = fast_options();
  options.max_attempts = 2;
  Gateway g(library(), std::make_shared<HttpBackend>(o), options);
  try {
    g.complete_role(Role::solver, {{"problem", "p"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
  }
}

}  // namespace
}  // namespace caco::llm
