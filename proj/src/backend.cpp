#include "trad/backend.hpp"

#include "trad/error.hpp"

namespace trad::backend {

std::unique_ptr<Backend> make_remote_backend(const BackendSpec& spec);  // remote_backend.cpp

namespace {

class OracleBackend final : public Backend {
public:
    explicit OracleBackend(BackendSpec spec) : spec_(std::move(spec)) {}

    CompletionResponse complete(const std::vector<prompt::ChatMessage>& messages) const override {
        CompletionResponse r;
        r.content = oracle_policy(messages, spec_.oracle_threshold);
        r.usage.attempts = 1;
        for (const auto& m : messages) r.usage.prompt_tokens += static_cast<long>(m.content.size() / 4);
        r.usage.completion_tokens = static_cast<long>(r.content.size() / 4);
        return r;
    }

    const BackendSpec& spec() const override { return spec_; }

private:
    BackendSpec spec_;
};

}  // namespace

void BackendSpec::validate() const {
    if (temperature < 0) throw ValidationError("temperature must be >= 0");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (oracle_threshold < 0 || oracle_threshold > 1) throw ValidationError("oracle threshold must lie in [0, 1]");
    if (kind == Kind::Remote) {
        if (endpoint.empty()) throw ValidationError("remote backend needs an endpoint");
        if (model.empty()) throw ValidationError("remote backend needs a model");
        if (max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
    }
}

std::string to_string(BackendSpec::Kind kind) { return kind == BackendSpec::Kind::Remote ? "remote" : "oracle"; }

BackendSpec::Kind backend_kind_from_string(std::string_view s) {
    if (s == "oracle") return BackendSpec::Kind::Oracle;
    if (s == "remote") return BackendSpec::Kind::Remote;
    throw ValidationError("unknown backend '" + std::string(s) + "' (expected oracle or remote)");
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    spec.validate();
    if (spec.kind == BackendSpec::Kind::Remote) return make_remote_backend(spec);
    return std::make_unique<OracleBackend>(spec);
}

CompletionResponse complete(const BackendSpec& spec, const std::vector<prompt::ChatMessage>& messages) {
    return make_backend(spec)->complete(messages);
}

}  // namespace trad::backend
