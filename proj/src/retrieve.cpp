#include "trad/retrieve.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"

#include <algorithm>
#include <map>

namespace trad::retrieve {

std::string trajectory_key_text(const corpus::TaskSpec& task) {
    std::string text = task.instruction;
    for (const auto& [k, v] : task.meta) {
        text += "\n";
        text += k;
        text += ": ";
        text += v;
    }
    return text;
}

MemoryIndex MemoryIndex::build(corpus::Memory& memory, std::shared_ptr<const embed::Embedder> embedder) {
    if (!embedder) throw ValidationError("MemoryIndex::build needs an embedder");
    MemoryIndex idx;
    idx.embedder_ = std::move(embedder);

    std::vector<std::pair<std::string, std::string>> traj_items;
    std::uint64_t traj_hash = util::kFnvOffset;
    for (const auto& [id, t] : memory.trajectories()) {
        traj_items.emplace_back(id, trajectory_key_text(t.task));
        traj_hash = util::fnv1a64(id, traj_hash);
        traj_hash = util::fnv1a64(traj_items.back().second, traj_hash);
    }
    idx.traj_index_ = embed::build_index(traj_items, *idx.embedder_);

    std::vector<std::pair<std::string, std::string>> step_items;
    std::uint64_t step_hash = util::kFnvOffset;
    for (const auto& [key, ann] : memory.annotations()) {
        step_items.emplace_back(key.first + "#" + std::to_string(key.second), ann.thought);
        idx.step_keys_.push_back(key);
        step_hash = util::fnv1a64(step_items.back().first, step_hash);
        step_hash = util::fnv1a64(ann.thought, step_hash);
    }
    idx.step_index_ = embed::build_index(step_items, *idx.embedder_);

    const std::string fp = idx.embedder_->fingerprint();
    idx.traj_id_ = fp + ":traj:" + util::hex64(traj_hash);
    idx.step_id_ = fp + ":step:" + util::hex64(step_hash);
    memory.traj_index_id = idx.traj_id_;
    memory.step_index_id = idx.step_id_;
    return idx;
}

std::vector<TrajHit> retrieve_trajectories(const corpus::Memory& memory, const MemoryIndex& index,
                                           const corpus::TaskSpec& task, std::size_t k) {
    if (memory.traj_index_id != index.traj_id())
        throw ValidationError("trajectory index not built for this memory");
    if (k == 0 || index.trajectories().empty()) return {};
    const auto query = index.embedder().embed(trajectory_key_text(task));
    std::vector<TrajHit> out;
    for (auto& h : embed::search(index.trajectories(), query, k)) out.push_back({h.key_id, h.score});
    return out;
}

std::vector<RetrievalHit> retrieve_steps(const corpus::Memory& memory, const MemoryIndex& index,
                                         std::string_view query_thought, std::size_t k) {
    if (memory.step_index_id != index.step_id())
        throw ValidationError("step index not built for this memory");
    if (!memory.fully_annotated()) throw ValidationError("memory has unannotated steps");
    if (k == 0) return {};

    const auto query = index.embedder().embed(query_thought);
    const auto& entries = index.steps().entries();
    const auto& keys = index.step_keys();

    // Phase 1: best-scoring step within each trajectory.
    struct Best {
        int step;
        double score;
    };
    std::map<std::string, Best> best;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double s = embed::cosine(query, entries[i].vector);
        const auto& [traj, step] = keys[i];
        auto it = best.find(traj);
        if (it == best.end()) {
            best.emplace(traj, Best{step, s});
        } else if (embed::same_score(s, it->second.score) ? step < it->second.step : s > it->second.score) {
            it->second = {step, s};
        }
    }

    // Phase 2: k best survivors across trajectories.
    std::vector<RetrievalHit> hits;
    hits.reserve(best.size());
    for (const auto& [traj, b] : best) {
        const auto* ann = memory.annotation(traj, b.step);
        hits.push_back({traj, b.step, b.score, ann ? ann->thought : std::string{}});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (!embed::same_score(a.score, b.score)) return a.score > b.score;
        return a.trajectory_id < b.trajectory_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace trad::retrieve
