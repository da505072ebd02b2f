#include "pb/llm.hpp"

#include <cctype>
#include <fstream>

#include "json.hpp"
#include "pb/http_client.hpp"

namespace pb::llm {

Role Role::redescriber(const core::EvolutionConfig& cfg, double unit_temperature) {
  return Role{"redescriber", cfg.redescriber_max_tokens, unit_temperature, {}};
}

Role Role::inducer(const core::EvolutionConfig& cfg) {
  return Role{"inducer", cfg.inducer_max_tokens, cfg.inducer_temperature,
              default_stop_sequences()};
}

Role Role::evaluator(const core::EvolutionConfig& cfg) {
  return Role{"evaluator", cfg.evaluator_max_tokens, cfg.evaluator_temperature,
              default_stop_sequences()};
}

std::vector<std::string> default_stop_sequences() {
  return {"\nQ.", "\n\n\n"};
}

std::string truncate_tokens(std::string_view text, int max_tokens) {
  if (max_tokens <= 0) return std::string(text);
  int seen = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!ws && !in_token) {
      in_token = true;
      ++seen;
    } else if (ws && in_token) {
      in_token = false;
      if (seen == max_tokens) return std::string(text.substr(0, i));
    }
  }
  return std::string(text);
}

std::string apply_stop(std::string_view text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    if (auto pos = text.find(s); pos != std::string_view::npos && pos < cut)
      cut = pos;
  }
  return std::string(text.substr(0, cut));
}

int count_tokens(std::string_view text) {
  int n = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

std::string ModelProvider::generate(const GenerationRequest& req) {
  std::string out = complete(req);
  out = apply_stop(out, req.stop);
  out = truncate_tokens(out, req.max_tokens);
  {
    std::lock_guard<std::mutex> lock(mu_);
    transcript_.push_back(TranscriptEntry{req, out});
    ++calls_;
  }
  return out;
}

std::vector<TranscriptEntry> ModelProvider::transcript() const {
  std::lock_guard<std::mutex> lock(mu_);
  return transcript_;
}

std::vector<TranscriptEntry> ModelProvider::drain_transcript() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<TranscriptEntry> out;
  out.swap(transcript_);
  return out;
}

std::size_t ModelProvider::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::string generate(ModelProvider& provider, const Role& role,
                     const std::string& prompt) {
  return provider.generate(
      GenerationRequest{prompt, role.max_tokens, role.temperature, role.stop});
}

std::string EchoProvider::complete(const GenerationRequest& req) {
  return req.prompt;
}

TableProvider::TableProvider(std::map<std::string, std::string> table,
                             std::optional<std::string> fallback)
    : table_(std::move(table)), fallback_(std::move(fallback)) {}

std::unique_ptr<TableProvider> TableProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ProviderError(ErrorKind::config, "table file not readable: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(ErrorKind::config,
                        "table file is not valid JSON: " + path + ": " + e.what());
  }
  if (!j.is_object())
    throw ProviderError(ErrorKind::config,
                        "table file must hold a JSON object: " + path);
  std::map<std::string, std::string> table;
  std::optional<std::string> fallback;
  for (auto& [key, value] : j.items()) {
    if (!value.is_string())
      throw ProviderError(ErrorKind::config,
                          "table values must be strings: " + path);
    if (key == "*")
      fallback = value.get<std::string>();
    else
      table[key] = value.get<std::string>();
  }
  return std::make_unique<TableProvider>(std::move(table), std::move(fallback));
}

std::string TableProvider::complete(const GenerationRequest& req) {
  if (auto it = table_.find(req.prompt); it != table_.end()) return it->second;
  if (fallback_) return *fallback_;
  throw ProviderError(ErrorKind::table_miss,
                      "no table entry for prompt of length " +
                          std::to_string(req.prompt.size()));
}

namespace {

constexpr std::string_view kNumeralSuffix = "Therefore, the answer (arabic numerals) is";
constexpr std::string_view kChoiceSuffix = "Therefore, the correct answer is (";
constexpr std::string_view kLamarckSuffix = "The instruction was:";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Sum of all integers on the last "Q. " line of the prompt.
long long sum_last_question(std::string_view prompt) {
  auto q = prompt.rfind("Q. ");
  if (q == std::string_view::npos) return 0;
  auto line_end = prompt.find('\n', q);
  std::string_view line = prompt.substr(
      q, line_end == std::string_view::npos ? prompt.size() - q : line_end - q);
  long long total = 0;
  for (std::size_t i = 0; i < line.size();) {
    if (std::isdigit(static_cast<unsigned char>(line[i]))) {
      long long v = 0;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        v = v * 10 + (line[i] - '0');
        ++i;
      }
      total += v;
    } else {
      ++i;
    }
  }
  return total;
}

}  // namespace

std::string ArithmeticProvider::complete(const GenerationRequest& req) {
  const std::string& p = req.prompt;

  if (ends_with(p, kNumeralSuffix)) {
    long long sum = sum_last_question(p);
    bool solved = p.find(kTargetToken) != std::string::npos;
    return " " + std::to_string(solved ? sum : sum + 1);
  }
  if (ends_with(p, kChoiceSuffix)) return " A";

  // Reasoning continuation for an answer episode. Kept free of the ladder
  // markers so only task-prompts can carry the target phrase into an
  // answer call.
  bool is_answer_episode =
      p.find("Q. ") != std::string::npos && !ends_with(p, kLamarckSuffix);
  if (is_answer_episode) return " I compute the arithmetic result.";

  // Rewrite call: climb the ladder based on the best marker present.
  if (p.find(kTargetToken) != std::string::npos) return std::string(kLevel2);
  if (p.find("carefully") != std::string::npos) return std::string(kLevel2);
  if (p.find("Compute the result") != std::string::npos) return std::string(kLevel1);
  return std::string(kLevel0);
}

HttpCompletionProvider::HttpCompletionProvider(HttpProviderConfig cfg)
    : cfg_(std::move(cfg)) {}

std::string HttpCompletionProvider::complete(const GenerationRequest& req) {
  nlohmann::json body{{"model", cfg_.model},
                      {"prompt", req.prompt},
                      {"max_tokens", req.max_tokens},
                      {"temperature", req.temperature}};
  if (!req.stop.empty()) body["stop"] = req.stop;

  nlohmann::json reply = net::post_json(cfg_.base_url, cfg_.path, cfg_.auth_env,
                                        cfg_.timeout_ms, cfg_.retry, body);

  if (auto it = reply.find("text"); it != reply.end() && it->is_string())
    return it->get<std::string>();
  if (auto it = reply.find("choices");
      it != reply.end() && it->is_array() && !it->empty()) {
    const auto& first = (*it)[0];
    if (auto t = first.find("text"); t != first.end() && t->is_string())
      return t->get<std::string>();
  }
  throw ProviderError(ErrorKind::refusal, "completion reply has no text field");
}

}  // namespace pb::llm
