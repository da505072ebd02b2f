#include "pb/http_client.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"

namespace pb::net {

namespace {

double jitter_factor() {
  // Timing noise only; independent of the evolution rng streams.
  thread_local std::mt19937 gen{std::random_device{}()};
  return 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

}  // namespace

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const std::string& auth_env, int timeout_ms,
                         const llm::RetryPolicy& retry,
                         const nlohmann::json& body) {
  const char* token = std::getenv(auth_env.c_str());
  if (token == nullptr || *token == '\0')
    throw llm::ProviderError(llm::ErrorKind::config,
                             "auth env var not set: " + auth_env);

  httplib::Headers headers{{"Authorization", std::string("Bearer ") + token}};
  const std::string payload = body.dump();

  std::string last_error;
  const int attempts = retry.attempts < 1 ? 1 : retry.attempts;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(base_url);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

    auto res = client.Post(path, headers, payload, "application/json");
    if (res) {
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw llm::ProviderError(llm::ErrorKind::refusal,
                                   std::string("unparseable reply body: ") + e.what());
        }
      }
      if (res->status >= 400 && res->status < 500)
        throw llm::ProviderError(llm::ErrorKind::refusal,
                                 "server refused request: HTTP " +
                                     std::to_string(res->status));
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      last_error = "connection failed: " + httplib::to_string(res.error());
    }

    if (attempt < attempts) {
      double delay = retry.initial_delay_ms;
      for (int i = 1; i < attempt; ++i) delay *= retry.backoff_factor;
      if (retry.jitter) delay *= jitter_factor();
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(delay)));
    }
  }
  throw llm::ProviderError(llm::ErrorKind::transport,
                           "request failed after " + std::to_string(attempts) +
                               " attempts: " + last_error);
}

}  // namespace pb::net
