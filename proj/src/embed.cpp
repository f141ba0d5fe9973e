#include "trad/embed.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"

#include <algorithm>
#include <cmath>

namespace trad::embed {

bool EmbeddingVector::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

void EmbedderSpec::validate() const {
    if (kind == Kind::HashLocal && dimension < 8)
        throw ValidationError("hash-local embedder needs dimension >= 8");
    if (dimension == 0) throw ValidationError("embedder dimension must be positive");
    if (kind == Kind::Remote && endpoint.empty())
        throw ValidationError("remote embedder needs an endpoint");
    if (max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
}

std::string to_string(EmbedderSpec::Kind kind) {
    return kind == EmbedderSpec::Kind::HashLocal ? "hash-local" : "remote";
}

EmbedderSpec::Kind embedder_kind_from_string(std::string_view s) {
    if (s == "hash-local") return EmbedderSpec::Kind::HashLocal;
    if (s == "remote") return EmbedderSpec::Kind::Remote;
    throw UsageError("unknown embedder kind '" + std::string(s) + "' (hash-local|remote)");
}

EmbeddingVector Embedder::embed(std::string_view text) const {
    auto out = embed_batch({std::string(text)});
    return std::move(out.front());
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ < 8) throw ValidationError("hash-local embedder needs dimension >= 8");
}

EmbeddingVector HashEmbedder::embed_one(std::string_view text) const {
    EmbeddingVector v{std::vector<double>(dimension_, 0.0)};
    for (const auto& tok : util::tokenize(text))
        v.values[util::fnv1a64(tok) % dimension_] += 1.0;
    const double n = v.norm();
    if (n > 0.0)
        for (double& x : v.values) x /= n;
    return v;
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::string HashEmbedder::fingerprint() const { return "hash-local/" + std::to_string(dimension_); }

EmbeddingVector embed(const EmbedderSpec& spec, std::string_view text) {
    return make_embedder(spec)->embed(text);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw ValidationError("cosine: dimension mismatch " + std::to_string(a.dimension()) +
                              " vs " + std::to_string(b.dimension()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void VectorIndex::add(std::string key_id, EmbeddingVector vector) {
    if (entries_.empty() && dimension_ == 0) dimension_ = vector.dimension();
    if (vector.dimension() != dimension_)
        throw ValidationError("index dimension mismatch for key " + key_id);
    if (by_key_.count(key_id)) throw ValidationError("duplicate key_id " + key_id);
    by_key_.emplace(key_id, entries_.size());
    entries_.push_back({std::move(key_id), std::move(vector)});
}

const EmbeddingVector* VectorIndex::lookup(const std::string& key_id) const {
    auto it = by_key_.find(key_id);
    return it == by_key_.end() ? nullptr : &entries_[it->second].vector;
}

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& items,
                        const Embedder& embedder) {
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& [_, text] : items) texts.push_back(text);
    auto vectors = embedder.embed_batch(texts);
    VectorIndex index(embedder.dimension());
    for (std::size_t i = 0; i < items.size(); ++i) index.add(items[i].first, std::move(vectors[i]));
    return index;
}

std::vector<SearchHit> search(const VectorIndex& index, const EmbeddingVector& query, std::size_t k) {
    if (!index.empty() && query.dimension() != index.dimension())
        throw ValidationError("search: query dimension " + std::to_string(query.dimension()) +
                              " does not match index dimension " +
                              std::to_string(index.dimension()));
    std::vector<SearchHit> hits;
    hits.reserve(index.size());
    for (const auto& e : index.entries()) hits.push_back({e.key_id, cosine(query, e.vector)});
    auto better = [](const SearchHit& a, const SearchHit& b) {
        if (!same_score(a.score, b.score)) return a.score > b.score;
        return a.key_id < b.key_id;
    };
    const std::size_t take = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);
    hits.resize(take);
    return hits;
}

}  // namespace trad::embed
