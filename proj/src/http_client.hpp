#pragma once

// Thin JSON-over-HTTP helpers shared by the remote embedder and the remote
// chat backend. Internal to the library.

#include <chrono>
#include <string>

namespace trad::detail {

inline constexpr const char* kApiKeyEnv = "TRAD_API_KEY";

struct HttpResult {
    int status = 0;
    std::string body;
};

// Throws BackendError(Auth) when the variable is unset or empty.
std::string api_key_from_env();

// Throws BackendError(Transport) when no response arrives.
HttpResult post_json(const std::string& url, const std::string& body, const std::string& bearer,
                     std::chrono::milliseconds timeout);

bool is_transient(int status);

}  // namespace trad::detail
