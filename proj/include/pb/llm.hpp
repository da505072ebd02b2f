#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pb/core.hpp"

namespace pb::llm {

enum class ErrorKind {
  transport,   // connection failures, 5xx, timeouts; retried with backoff
  refusal,     // 4xx or malformed response body; not retried
  table_miss,  // table mock had no entry and no fallback
  config,      // provider misconfiguration, e.g. missing auth env var
};

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct GenerationRequest {
  std::string prompt;
  int max_tokens = 0;
  double temperature = 0.0;
  std::vector<std::string> stop;

  bool operator==(const GenerationRequest&) const = default;
};

struct TranscriptEntry {
  GenerationRequest request;
  std::string completion;
};

/// The three calling conventions used against the model. A role fixes the
/// token budget, temperature, and stop sequences for a request.
struct Role {
  std::string label;
  int max_tokens = 0;
  double temperature = 0.0;
  std::vector<std::string> stop;

  /// Rewrites prompts and mutation-prompts; temperature comes from the unit.
  static Role redescriber(const core::EvolutionConfig& cfg, double unit_temperature);
  /// Produces the reasoning continuation for a question.
  static Role inducer(const core::EvolutionConfig& cfg);
  /// Produces the short final answer.
  static Role evaluator(const core::EvolutionConfig& cfg);
};

std::vector<std::string> default_stop_sequences();

/// Truncates to the first max_tokens whitespace-delimited tokens, preserving
/// the original spacing between them. max_tokens <= 0 means no limit.
std::string truncate_tokens(std::string_view text, int max_tokens);

/// Cuts the text at the earliest occurrence of any stop sequence.
std::string apply_stop(std::string_view text, const std::vector<std::string>& stop);

int count_tokens(std::string_view text);

/// Completion backend. Subclasses implement complete(); every generate() call
/// is recorded in an internal transcript so runs can be replayed and audited.
/// Safe for concurrent generate() calls.
class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual std::string name() const = 0;

  std::string generate(const GenerationRequest& req);

  std::vector<TranscriptEntry> transcript() const;
  /// Returns and clears the recorded entries; total call count is preserved.
  std::vector<TranscriptEntry> drain_transcript();
  std::size_t call_count() const;

 protected:
  virtual std::string complete(const GenerationRequest& req) = 0;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> transcript_;
  std::size_t calls_ = 0;
};

std::string generate(ModelProvider& provider, const Role& role, const std::string& prompt);

/// Returns the prompt verbatim (subject to stop/token limits).
class EchoProvider : public ModelProvider {
 public:
  std::string name() const override { return "mock:echo"; }

 protected:
  std::string complete(const GenerationRequest& req) override;
};

/// Exact prompt → completion lookup with an optional fallback completion.
class TableProvider : public ModelProvider {
 public:
  explicit TableProvider(std::map<std::string, std::string> table,
                         std::optional<std::string> fallback = std::nullopt);
  /// Loads a JSON object file mapping prompt → completion. A "*" key, if
  /// present, becomes the fallback completion. Pointer because the provider
  /// owns a mutex and cannot be moved.
  static std::unique_ptr<TableProvider> from_file(const std::string& path);

  std::string name() const override { return "mock:table"; }

 protected:
  std::string complete(const GenerationRequest& req) override;

 private:
  std::map<std::string, std::string> table_;
  std::optional<std::string> fallback_;
};

/// Deterministic arithmetic world for offline optimization runs.
///
/// Answer calls sum the integers in the question and reply correctly iff the
/// prompt carries the phrase "step by step". Rewrite calls walk a fixed
/// ladder of instruction strings that reaches that phrase, so evolution has
/// a short but non-trivial path to the optimum.
class ArithmeticProvider : public ModelProvider {
 public:
  std::string name() const override { return "mock:arith"; }

  static constexpr std::string_view kTargetToken = "step by step";
  static constexpr std::string_view kLevel0 = "Compute the result.";
  static constexpr std::string_view kLevel1 = "Compute the result carefully.";
  static constexpr std::string_view kLevel2 = "Let's think step by step.";

 protected:
  std::string complete(const GenerationRequest& req) override;
};

struct RetryPolicy {
  int attempts = 3;
  int initial_delay_ms = 100;
  double backoff_factor = 2.0;
  bool jitter = true;
};

struct HttpProviderConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string model;
  std::string path = "/v1/completions";
  std::string auth_env = "PB_API_KEY";
  int timeout_ms = 30000;
  RetryPolicy retry;
};

/// Completion-endpoint client. Sends {model, prompt, max_tokens, temperature,
/// stop} as JSON with a bearer token read from the environment at call time.
/// Accepts either {"text": ...} or {"choices": [{"text": ...}]} replies.
class HttpCompletionProvider : public ModelProvider {
 public:
  explicit HttpCompletionProvider(HttpProviderConfig cfg);

  std::string name() const override { return "http:" + cfg_.model; }
  const HttpProviderConfig& config() const { return cfg_; }

 protected:
  std::string complete(const GenerationRequest& req) override;

 private:
  HttpProviderConfig cfg_;
};

}  // namespace pb::llm
