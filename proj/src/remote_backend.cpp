#include "http_client.hpp"

#include "trad/backend.hpp"
#include "trad/error.hpp"

#include "json.hpp"

#include <semaphore>
#include <thread>

namespace trad::backend {

namespace {

using json = nlohmann::json;

// POST {model, messages, temperature}; reads choices[0].message.content.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(BackendSpec spec)
        : spec_(std::move(spec)),
          in_flight_(std::make_unique<std::counting_semaphore<1024>>(
              static_cast<std::ptrdiff_t>(std::min<std::size_t>(spec_.max_in_flight, 1024)))) {}

    const BackendSpec& spec() const override { return spec_; }

    CompletionResponse complete(const std::vector<prompt::ChatMessage>& messages) const override {
        // Fails before any network traffic when the key is missing.
        const std::string key = detail::api_key_from_env();
        json req{{"model", spec_.model}, {"temperature", spec_.temperature}, {"messages", json::array()}};
        for (const auto& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});
        const std::string body = req.dump();

        const auto start = std::chrono::steady_clock::now();
        CompletionResponse out;
        for (int attempt = 0;; ++attempt) {
            out.usage.attempts = attempt + 1;
            detail::HttpResult res;
            bool transport_failed = false;
            std::string transport_error;
            in_flight_->acquire();
            try {
                res = detail::post_json(spec_.endpoint, body, key, spec_.timeout);
            } catch (const BackendError& e) {
                transport_failed = true;
                transport_error = e.what();
            }
            in_flight_->release();

            const bool retryable = transport_failed || detail::is_transient(res.status);
            if (retryable && attempt < spec_.max_retries) {
                std::this_thread::sleep_for(std::chrono::milliseconds(200LL << attempt));
                continue;
            }
            if (transport_failed) throw BackendError(BackendError::Kind::Transport, transport_error);
            if (res.status == 401 || res.status == 403)
                throw BackendError(BackendError::Kind::Auth, "completion endpoint rejected credentials");
            if (res.status == 429)
                throw BackendError(BackendError::Kind::RateLimited,
                                   "rate limited after " + std::to_string(out.usage.attempts) + " attempts");
            if (res.status != 200)
                throw BackendError(BackendError::Kind::Transport,
                                   "completion endpoint returned HTTP " + std::to_string(res.status));
            parse(res.body, out);
            break;
        }
        out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        return out;
    }

private:
    static void parse(const std::string& body, CompletionResponse& out) {
        try {
            json j = json::parse(body);
            out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
                out.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
            }
        } catch (const json::exception& e) {
            throw BackendError(BackendError::Kind::MalformedResponse, std::string("bad completion payload: ") + e.what());
        }
        if (out.content.empty()) throw BackendError(BackendError::Kind::MalformedResponse, "empty completion");
    }

    BackendSpec spec_;
    std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

}  // namespace

std::unique_ptr<Backend> make_remote_backend(const BackendSpec& spec) { return std::make_unique<RemoteBackend>(spec); }

}  // namespace trad::backend
