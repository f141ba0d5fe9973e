#pragma once

// LLM completion backends: a chat-completion wire client and a deterministic
// oracle that stands in for the model in offline runs.

#include "trad/prompt.hpp"

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace trad::backend {

struct BackendSpec {
    enum class Kind { Oracle, Remote };

    Kind kind = Kind::Oracle;
    std::string endpoint;
    std::string model;
    double temperature = 0.0;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::size_t max_in_flight = 4;
    // Oracle: minimum fraction of current tokens a demo step must match.
    double oracle_threshold = 0.5;

    void validate() const;
};

std::string to_string(BackendSpec::Kind kind);
BackendSpec::Kind backend_kind_from_string(std::string_view s);

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    int attempts = 0;
};

struct CompletionResponse {
    std::string content;
    Usage usage;
    std::chrono::milliseconds latency{0};
};

class Backend {
public:
    virtual ~Backend() = default;
    // Safe to call concurrently.
    virtual CompletionResponse complete(const std::vector<prompt::ChatMessage>& messages) const = 0;
    virtual const BackendSpec& spec() const = 0;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);
CompletionResponse complete(const BackendSpec& spec, const std::vector<prompt::ChatMessage>& messages);

// The oracle's decision procedure, a pure function of the prompt text.
// Thought prompts: the GridHouse belief/expert rule (or the web reason
// template) applied to the transcript in the query. Action prompts: copy the
// action of the demo step whose text overlaps the current step most, with
// entity ids substituted; "look" (GridHouse) or an empty reply (web) when
// nothing overlaps at least `threshold`. Throws BackendError(UnrecognizedPrompt).
std::string oracle_policy(const std::vector<prompt::ChatMessage>& messages, double threshold = 0.5);

}  // namespace trad::backend
