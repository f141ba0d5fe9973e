#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trad::embed {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool is_zero() const;
    double norm() const;
    bool operator==(const EmbeddingVector&) const = default;
};

struct EmbedderSpec {
    enum class Kind { HashLocal, Remote };

    Kind kind = Kind::HashLocal;
    std::size_t dimension = 256;
    // Remote only.
    std::string endpoint;
    std::string model;
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};

    void validate() const;
};

std::string to_string(EmbedderSpec::Kind kind);
EmbedderSpec::Kind embedder_kind_from_string(std::string_view s);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const = 0;
    // Identifies the vector space; indexes built by different embedders never mix.
    virtual std::string fingerprint() const = 0;

    EmbeddingVector embed(std::string_view text) const;
};

// Feature-hashing bag of words: FNV-1a 64 per token, bucket = hash mod D,
// counts per bucket, L2-normalised. Empty token list gives the zero vector.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension);

    std::size_t dimension() const override { return dimension_; }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;
    std::string fingerprint() const override;

    EmbeddingVector embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);
EmbeddingVector embed(const EmbedderSpec& spec, std::string_view text);

// dot(a,b) / (|a||b|), or 0 when either vector is all-zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexEntry {
    std::string key_id;
    EmbeddingVector vector;
};

class VectorIndex {
public:
    explicit VectorIndex(std::size_t dimension = 0) : dimension_(dimension) {}

    void add(std::string key_id, EmbeddingVector vector);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }
    const EmbeddingVector* lookup(const std::string& key_id) const;

private:
    std::size_t dimension_;
    std::vector<IndexEntry> entries_;
    std::map<std::string, std::size_t> by_key_;
};

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& items,
                        const Embedder& embedder);

struct SearchHit {
    std::string key_id;
    double score = 0.0;
    bool operator==(const SearchHit&) const = default;
};

// Scores closer than this are ties. Equal cosines reached through different
// vectors can differ in the last bits; genuinely different ones never get this close.
inline constexpr double kScoreTieTolerance = 1e-12;
inline bool same_score(double a, double b) { return std::fabs(a - b) <= kScoreTieTolerance; }

// Exact top-k by cosine; ties broken by ascending key_id.
std::vector<SearchHit> search(const VectorIndex& index, const EmbeddingVector& query, std::size_t k);

}  // namespace trad::embed
