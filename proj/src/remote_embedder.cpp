#include "http_client.hpp"

#include "trad/embed.hpp"
#include "trad/error.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

namespace trad::detail {

std::string api_key_from_env() {
    const char* key = std::getenv(kApiKeyEnv);
    if (!key || !*key)
        throw BackendError(BackendError::Kind::Auth,
                           std::string("environment variable ") + kApiKeyEnv + " is not set");
    return key;
}

HttpResult post_json(const std::string& url, const std::string& body, const std::string& bearer,
                     std::chrono::milliseconds timeout) {
    // Split "scheme://host[:port]/path" for httplib.
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw BackendError(BackendError::Kind::Transport, "endpoint must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers{{"Authorization", "Bearer " + bearer}};
    auto res = client.Post(path, headers, body, "application/json");
    if (!res)
        throw BackendError(BackendError::Kind::Transport,
                           "request to " + base + path + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace trad::detail

namespace trad::embed {

namespace {

using json = nlohmann::json;

class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(EmbedderSpec spec)
        : spec_(std::move(spec)),
          in_flight_(std::make_unique<std::counting_semaphore<1024>>(
              static_cast<std::ptrdiff_t>(std::min<std::size_t>(spec_.max_in_flight, 1024)))) {}

    std::size_t dimension() const override { return spec_.dimension; }

    std::string fingerprint() const override {
        return "remote/" + spec_.model + "/" + std::to_string(spec_.dimension);
    }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override {
        if (texts.empty()) return {};
        const std::string key = detail::api_key_from_env();
        json req{{"model", spec_.model}, {"input", texts}};
        in_flight_->acquire();
        detail::HttpResult res;
        try {
            res = send(req.dump(), key);
        } catch (...) {
            in_flight_->release();
            throw;
        }
        in_flight_->release();
        if (res.status == 401 || res.status == 403)
            throw BackendError(BackendError::Kind::Auth, "embedding endpoint rejected credentials");
        if (res.status == 429)
            throw BackendError(BackendError::Kind::RateLimited, "embedding endpoint rate limited");
        if (res.status != 200)
            throw BackendError(BackendError::Kind::Transport,
                               "embedding endpoint returned HTTP " + std::to_string(res.status));
        return parse(res.body, texts.size());
    }

private:
    detail::HttpResult send(const std::string& body, const std::string& key) const {
        constexpr int kAttempts = 3;
        for (int attempt = 0;; ++attempt) {
            auto res = detail::post_json(spec_.endpoint, body, key, spec_.timeout);
            if (!detail::is_transient(res.status) || attempt + 1 == kAttempts) return res;
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
        }
    }

    // Accepts {"data":[{"embedding":[...]}, ...]} or {"embeddings":[[...], ...]}.
    std::vector<EmbeddingVector> parse(const std::string& body, std::size_t expected) const {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::parse_error&) {
            throw BackendError(BackendError::Kind::MalformedResponse, "embedding response is not JSON");
        }
        std::vector<std::vector<double>> rows;
        try {
            if (j.contains("data")) {
                for (const auto& item : j.at("data")) rows.push_back(item.at("embedding").get<std::vector<double>>());
            } else if (j.contains("embeddings")) {
                rows = j.at("embeddings").get<std::vector<std::vector<double>>>();
            } else {
                throw BackendError(BackendError::Kind::MalformedResponse,
                                   "embedding response has neither 'data' nor 'embeddings'");
            }
        } catch (const json::exception& e) {
            throw BackendError(BackendError::Kind::MalformedResponse,
                               std::string("bad embedding payload: ") + e.what());
        }
        if (rows.size() != expected)
            throw BackendError(BackendError::Kind::MalformedResponse,
                               "embedding count " + std::to_string(rows.size()) + " != " +
                                   std::to_string(expected));
        std::vector<EmbeddingVector> out;
        out.reserve(rows.size());
        for (auto& r : rows) {
            if (r.size() != spec_.dimension)
                throw BackendError(BackendError::Kind::MalformedResponse,
                                   "dimension mismatch: got " + std::to_string(r.size()) +
                                       ", configured " + std::to_string(spec_.dimension));
            EmbeddingVector v{std::move(r)};
            const double n = v.norm();
            if (n > 0.0)
                for (double& x : v.values) x /= n;
            out.push_back(std::move(v));
        }
        return out;
    }

    EmbedderSpec spec_;
    std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

}  // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    spec.validate();
    if (spec.kind == EmbedderSpec::Kind::HashLocal) return std::make_unique<HashEmbedder>(spec.dimension);
    return std::make_unique<RemoteEmbedder>(spec);
}

}  // namespace trad::embed
