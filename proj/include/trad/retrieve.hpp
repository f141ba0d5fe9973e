#pragma once

#include "trad/corpus.hpp"
#include "trad/embed.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace trad::retrieve {

struct TrajHit {
    std::string trajectory_id;
    double score = 0.0;
    bool operator==(const TrajHit&) const = default;
};

struct RetrievalHit {
    std::string trajectory_id;
    int step_index = 0;
    double score = 0.0;
    std::string thought;
    bool operator==(const RetrievalHit&) const = default;
};

// Key text for trajectory-wise retrieval: the instruction followed by the
// meta pairs in key order.
std::string trajectory_key_text(const corpus::TaskSpec& task);

// Embedding indexes over a memory: one entry per trajectory (task meta-data)
// and one per annotated step (thought). Immutable once built.
class MemoryIndex {
public:
    // Records the index ids on `memory` so stale indexes are detected later.
    static MemoryIndex build(corpus::Memory& memory, std::shared_ptr<const embed::Embedder> embedder);

    const embed::Embedder& embedder() const { return *embedder_; }
    const embed::VectorIndex& trajectories() const { return traj_index_; }
    const embed::VectorIndex& steps() const { return step_index_; }
    const std::vector<corpus::StepKey>& step_keys() const { return step_keys_; }
    const std::string& traj_id() const { return traj_id_; }
    const std::string& step_id() const { return step_id_; }

private:
    std::shared_ptr<const embed::Embedder> embedder_;
    embed::VectorIndex traj_index_;
    embed::VectorIndex step_index_;
    std::vector<corpus::StepKey> step_keys_;
    std::string traj_id_;
    std::string step_id_;
};

// Top-k trajectories by cosine between task key texts.
std::vector<TrajHit> retrieve_trajectories(const corpus::Memory& memory, const MemoryIndex& index,
                                           const corpus::TaskSpec& task, std::size_t k);

// Thought retrieval: best step per trajectory (ties to the lower step index),
// then the k best trajectories (ties to the lower trajectory id).
std::vector<RetrievalHit> retrieve_steps(const corpus::Memory& memory, const MemoryIndex& index,
                                         std::string_view query_thought, std::size_t k);

}  // namespace trad::retrieve
