#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pb/llm.hpp"

using namespace pb;

TEST_CASE("truncate_tokens counts whitespace-separated tokens") {
  CHECK(llm::truncate_tokens("one two three", 2) == "one two");
  CHECK(llm::truncate_tokens("one two three", 3) == "one two three");
  CHECK(llm::truncate_tokens("one two three", 10) == "one two three");
  CHECK(llm::truncate_tokens("  leading space", 1) == "  leading");
  CHECK(llm::truncate_tokens("a\nb\tc d", 3) == "a\nb\tc");
  // Internal spacing inside the kept region is untouched.
  CHECK(llm::truncate_tokens("a  b   c", 2) == "a  b");
  // 0 means unlimited.
  CHECK(llm::truncate_tokens("x y z", 0) == "x y z");
  CHECK(llm::truncate_tokens("", 5) == "");
}

TEST_CASE("count_tokens matches the truncation notion of a token") {
  CHECK(llm::count_tokens("") == 0);
  CHECK(llm::count_tokens("   ") == 0);
  CHECK(llm::count_tokens("one") == 1);
  CHECK(llm::count_tokens(" one  two\nthree ") == 3);
}

TEST_CASE("apply_stop cuts at the earliest stop sequence") {
  const std::vector<std::string> stop{"\nQ.", "\n\n\n"};
  CHECK(llm::apply_stop("keep this\nQ. drop this", stop) == "keep this");
  CHECK(llm::apply_stop("keep\n\n\ndrop\nQ. more", stop) == "keep");
  CHECK(llm::apply_stop("nothing to cut", stop) == "nothing to cut");
  CHECK(llm::apply_stop("text", {}) == "text");
  CHECK(llm::apply_stop("abc", {""}) == "abc");  // empty stop is ignored
}

TEST_CASE("default stops are the question marker and the triple newline") {
  const auto stop = llm::default_stop_sequences();
  REQUIRE(stop.size() == 2);
  CHECK(stop[0] == "\nQ.");
  CHECK(stop[1] == "\n\n\n");
}

TEST_CASE("role factories carry the configured budgets") {
  core::EvolutionConfig cfg;
  const auto r = llm::Role::redescriber(cfg, 1.8);
  CHECK(r.max_tokens == 50);
  CHECK(r.temperature == 1.8);
  CHECK(r.stop.empty());

  const auto i = llm::Role::inducer(cfg);
  CHECK(i.max_tokens == 30);
  CHECK(i.temperature == 0.0);
  CHECK(i.stop == llm::default_stop_sequences());

  const auto e = llm::Role::evaluator(cfg);
  CHECK(e.max_tokens == 5);
  CHECK(e.temperature == 0.0);
  CHECK(e.stop == llm::default_stop_sequences());
}

TEST_CASE("generate applies stop sequences before token truncation") {
  // The raw completion has 8 tokens before the stop; limit 3 keeps 3.
  llm::EchoProvider provider;
  llm::Role role{"test", 3, 0.0, {"\nQ."}};
  const auto out =
      llm::generate(provider, role, "alpha beta gamma delta\nQ. epsilon");
  CHECK(out == "alpha beta gamma");
}

TEST_CASE("echo provider echoes and records a transcript") {
  llm::EchoProvider provider;
  CHECK(provider.call_count() == 0);

  llm::Role role{"test", 0, 0.7, {}};
  CHECK(llm::generate(provider, role, "repeat me") == "repeat me");
  CHECK(provider.call_count() == 1);

  const auto transcript = provider.transcript();
  REQUIRE(transcript.size() == 1);
  CHECK(transcript[0].request.prompt == "repeat me");
  CHECK(transcript[0].request.temperature == 0.7);
  CHECK(transcript[0].completion == "repeat me");

  const auto drained = provider.drain_transcript();
  CHECK(drained.size() == 1);
  CHECK(provider.transcript().empty());
  CHECK(provider.call_count() == 1);  // draining does not reset the counter
}

TEST_CASE("table provider looks up exact prompts and falls back") {
  llm::TableProvider provider({{"ping", "pong"}}, "default");
  llm::Role role{"test", 0, 0.0, {}};
  CHECK(llm::generate(provider, role, "ping") == "pong");
  CHECK(llm::generate(provider, role, "anything else") == "default");
}

TEST_CASE("table provider without fallback reports a miss") {
  llm::TableProvider provider(std::map<std::string, std::string>{{"ping", "pong"}});
  llm::Role role{"test", 0, 0.0, {}};
  try {
    llm::generate(provider, role, "unknown");
    FAIL("expected ProviderError");
  } catch (const llm::ProviderError& e) {
    CHECK(e.kind() == llm::ErrorKind::table_miss);
  }
}

TEST_CASE("table provider loads from a json file") {
  const std::string path = "/tmp/pb_test_table.json";
  {
    std::ofstream out(path);
    out << nlohmann::json{{"a", "1"}, {"*", "fallback"}}.dump();
  }
  auto provider = llm::TableProvider::from_file(path);
  llm::Role role{"test", 0, 0.0, {}};
  CHECK(llm::generate(*provider, role, "a") == "1");
  CHECK(llm::generate(*provider, role, "b") == "fallback");

  {
    std::ofstream out(path);
    out << "not json";
  }
  CHECK_THROWS_AS(llm::TableProvider::from_file(path), llm::ProviderError);
  CHECK_THROWS_AS(llm::TableProvider::from_file("/nonexistent/table.json"),
                  llm::ProviderError);

  {
    std::ofstream out(path);
    out << nlohmann::json{{"a", 3}}.dump();  // non-string value
  }
  CHECK_THROWS_AS(llm::TableProvider::from_file(path), llm::ProviderError);
}

TEST_CASE("arithmetic mock grades answer prompts by the marker phrase") {
  llm::ArithmeticProvider provider;
  llm::Role evaluator{"evaluator", 5, 0.0, llm::default_stop_sequences()};

  const std::string with_marker =
      "Let's think step by step.\nQ. What is 12 + 7?\nA. working\n"
      "Therefore, the answer (arabic numerals) is";
  CHECK(llm::generate(provider, evaluator, with_marker) == " 19");

  const std::string without_marker =
      "Compute the result.\nQ. What is 12 + 7?\nA. working\n"
      "Therefore, the answer (arabic numerals) is";
  CHECK(llm::generate(provider, evaluator, without_marker) == " 20");

  // The sum is taken from the last question line only.
  const std::string two_questions =
      "Let's think step by step.\nQ. What is 1 + 1?\nA. done\n"
      "Q. Add 3, 4 and 5.\nA. working\n"
      "Therefore, the answer (arabic numerals) is";
  CHECK(llm::generate(provider, evaluator, two_questions) == " 12");

  const std::string choice =
      "prompt\nQ. pick one\nA. working\nTherefore, the correct answer is (";
  CHECK(llm::generate(provider, evaluator, choice) == " A");
}

TEST_CASE("arithmetic mock answers reasoning calls neutrally") {
  llm::ArithmeticProvider provider;
  llm::Role inducer{"inducer", 30, 0.0, llm::default_stop_sequences()};
  const auto reasoning =
      llm::generate(provider, inducer, "Q. What is 2 + 3?\nA. Compute the result.");
  CHECK(reasoning == " I compute the arithmetic result.");
  CHECK(reasoning.find(llm::ArithmeticProvider::kTargetToken) == std::string::npos);
}

TEST_CASE("arithmetic mock rewrite ladder climbs toward the marker") {
  llm::ArithmeticProvider provider;
  llm::Role redescriber{"redescriber", 50, 1.0, {}};

  // Unrelated instruction: start of the ladder.
  CHECK(llm::generate(provider, redescriber, "Improve: Solve the problem.") ==
        std::string(llm::ArithmeticProvider::kLevel0));
  // Level 0 text present: step to level 1.
  CHECK(llm::generate(provider, redescriber,
                      "Improve: Compute the result.") ==
        std::string(llm::ArithmeticProvider::kLevel1));
  // Level 1 text present: step to the optimum.
  CHECK(llm::generate(provider, redescriber,
                      "Improve: Compute the result carefully.") ==
        std::string(llm::ArithmeticProvider::kLevel2));
  // Already optimal: stays there.
  CHECK(llm::generate(provider, redescriber,
                      "Improve: Let's think step by step.") ==
        std::string(llm::ArithmeticProvider::kLevel2));
}

TEST_CASE("arithmetic mock treats instruction induction as a rewrite") {
  llm::ArithmeticProvider provider;
  llm::Role redescriber{"redescriber", 50, 1.0, {}};
  // Contains a transcript but ends with the induction cue, so the ladder
  // applies rather than the neutral reasoning reply.
  const std::string induction =
      "Here are the correct examples of his workings out:\n"
      "Q. What is 1 + 2?\nA. correct working\nThe instruction was:";
  CHECK(llm::generate(provider, redescriber, induction) ==
        std::string(llm::ArithmeticProvider::kLevel0));
}

namespace {

/// Minimal completion endpoint stub with a scriptable failure budget.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/completions", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (fail_first_ > 0) {
        --fail_first_;
        res.status = 500;
        res.set_content("overloaded", "text/plain");
        return;
      }
      if (status_ != 200) {
        res.status = status_;
        res.set_content("denied", "text/plain");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json reply;
      if (use_choices_)
        reply = {{"choices", {{{"text", completion_}}}}};
      else
        reply = {{"text", completion_}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  std::atomic<int> hits_{0};
  std::atomic<int> fail_first_{0};
  std::atomic<int> status_{200};
  bool use_choices_ = false;
  std::string completion_ = " stub completion";
  std::string last_body_;
  std::string last_auth_;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

llm::HttpProviderConfig stub_config(const StubServer& server) {
  llm::HttpProviderConfig cfg;
  cfg.base_url = server.base_url();
  cfg.model = "test-model";
  cfg.auth_env = "PB_TEST_KEY";
  cfg.timeout_ms = 2000;
  cfg.retry.attempts = 3;
  cfg.retry.initial_delay_ms = 5;
  cfg.retry.jitter = false;
  return cfg;
}

}  // namespace

TEST_CASE("http provider round-trips a completion request") {
  StubServer server;
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(stub_config(server));

  llm::Role role{"inducer", 30, 0.0, llm::default_stop_sequences()};
  const auto out = llm::generate(provider, role, "Q. test?\nA. think");
  CHECK(out == " stub completion");
  CHECK(server.hits_ == 1);
  CHECK(server.last_auth_ == "Bearer sekrit");

  const auto body = nlohmann::json::parse(server.last_body_);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("prompt") == "Q. test?\nA. think");
  CHECK(body.at("max_tokens") == 30);
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("stop").size() == 2);
}

TEST_CASE("http provider accepts the choices response shape") {
  StubServer server;
  server.use_choices_ = true;
  server.completion_ = " from choices";
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(stub_config(server));
  llm::Role role{"inducer", 30, 0.0, {}};
  CHECK(llm::generate(provider, role, "x") == " from choices");
}

TEST_CASE("http provider retries 5xx with backoff then succeeds") {
  StubServer server;
  server.fail_first_ = 2;
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(stub_config(server));
  llm::Role role{"inducer", 30, 0.0, {}};
  CHECK(llm::generate(provider, role, "x") == " stub completion");
  CHECK(server.hits_ == 3);  // two failures burned, third attempt landed
}

TEST_CASE("http provider gives up after the retry budget") {
  StubServer server;
  server.fail_first_ = 99;
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(stub_config(server));
  llm::Role role{"inducer", 30, 0.0, {}};
  try {
    llm::generate(provider, role, "x");
    FAIL("expected ProviderError");
  } catch (const llm::ProviderError& e) {
    CHECK(e.kind() == llm::ErrorKind::transport);
  }
  CHECK(server.hits_ == 3);  // attempts exhausted, no more
}

TEST_CASE("http provider treats 4xx as a refusal and does not retry") {
  StubServer server;
  server.status_ = 401;
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(stub_config(server));
  llm::Role role{"inducer", 30, 0.0, {}};
  try {
    llm::generate(provider, role, "x");
    FAIL("expected ProviderError");
  } catch (const llm::ProviderError& e) {
    CHECK(e.kind() == llm::ErrorKind::refusal);
  }
  CHECK(server.hits_ == 1);
}

TEST_CASE("http provider requires the auth env var") {
  StubServer server;
  unsetenv("PB_TEST_KEY");
  llm::HttpCompletionProvider provider(stub_config(server));
  llm::Role role{"inducer", 30, 0.0, {}};
  try {
    llm::generate(provider, role, "x");
    FAIL("expected ProviderError");
  } catch (const llm::ProviderError& e) {
    CHECK(e.kind() == llm::ErrorKind::config);
  }
  CHECK(server.hits_ == 0);  // failed before any request went out
}

TEST_CASE("http provider maps connection failure to transport error") {
  llm::HttpProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";  // nothing listens here
  cfg.model = "test-model";
  cfg.auth_env = "PB_TEST_KEY";
  cfg.timeout_ms = 200;
  cfg.retry.attempts = 2;
  cfg.retry.initial_delay_ms = 1;
  setenv("PB_TEST_KEY", "sekrit", 1);
  llm::HttpCompletionProvider provider(cfg);
  llm::Role role{"inducer", 30, 0.0, {}};
  try {
    llm::generate(provider, role, "x");
    FAIL("expected ProviderError");
  } catch (const llm::ProviderError& e) {
    CHECK(e.kind() == llm::ErrorKind::transport);
  }
}
