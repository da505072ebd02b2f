#pragma once

#include <string>

#include "json.hpp"
#include "pb/llm.hpp"

namespace pb::net {

/// POSTs a JSON body and returns the parsed JSON reply.
///
/// Bearer token is read from auth_env at call time; an unset or empty
/// variable raises ErrorKind::config. Connection failures, timeouts, and 5xx
/// replies are retried per the policy and surface as ErrorKind::transport
/// once attempts are exhausted; 4xx replies and unparseable bodies surface
/// immediately as ErrorKind::refusal.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const std::string& auth_env, int timeout_ms,
                         const llm::RetryPolicy& retry,
                         const nlohmann::json& body);

}  // namespace pb::net
