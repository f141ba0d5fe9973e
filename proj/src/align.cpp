#include "trad/align.hpp"

#include "trad/error.hpp"

#include <algorithm>

namespace trad::align {

std::string to_string(HistoryMode mode) {
    return mode == HistoryMode::FullHistory ? "full-history" : "single-step";
}

HistoryMode history_mode_from_string(const std::string& s) {
    if (s == "full-history") return HistoryMode::FullHistory;
    if (s == "single-step") return HistoryMode::SingleStep;
    throw UsageError("unknown history mode '" + s + "' (full-history|single-step)");
}

void ExpansionConfig::validate() const {
    if (b < 0 || f < 0) throw ValidationError("B and F must be non-negative");
    if (b > kMaxExtent || f > kMaxExtent)
        throw ValidationError("B and F must be at most " + std::to_string(kMaxExtent));
    if (k < 1) throw ValidationError("K must be at least 1");
}

std::size_t AlignedContext::demo_step_count() const {
    std::size_t n = 0;
    for (const auto& d : demos) n += d.items.size();
    return n;
}

std::string order_mark(int offset) { return "[Step " + std::to_string(offset) + "]"; }

DemoSequence temporal_expand(const corpus::Memory& memory, const retrieve::RetrievalHit& hit,
                             const ExpansionConfig& cfg) {
    const auto* ann = memory.annotation(hit.trajectory_id, hit.step_index);
    if (!ann) {
        throw ValidationError("dangling hit (" + hit.trajectory_id + ", " +
                              std::to_string(hit.step_index) + ")");
    }
    const auto& traj = memory.trajectory(hit.trajectory_id);
    DemoSequence seq;
    seq.task = traj.task;
    seq.trajectory_id = hit.trajectory_id;
    seq.anchor_score = hit.score;
    for (const auto& w : corpus::window(traj, hit.step_index, cfg.b, cfg.f)) {
        DemoItem item{w.offset, order_mark(w.offset), *w.step, std::nullopt};
        if (cfg.include_demo_thoughts) {
            if (const auto* a = memory.annotation(hit.trajectory_id, w.step->index)) item.thought = a->thought;
        }
        seq.items.push_back(std::move(item));
    }
    return seq;
}

std::vector<HistoryEntry> align_history(const std::vector<std::string>& observations,
                                        const std::vector<std::string>& actions,
                                        const ExpansionConfig& cfg) {
    if (actions.size() + 1 != observations.size())
        throw ValidationError("align_history: expected |actions| == |observations| - 1, got " +
                              std::to_string(actions.size()) + " and " +
                              std::to_string(observations.size()));
    // Single-step prompting keeps every previous action and no observations.
    if (cfg.mode == HistoryMode::SingleStep) return full_history(observations, actions, cfg.mode);
    const std::size_t span = static_cast<std::size_t>(cfg.b + cfg.f);
    const std::size_t n = std::min(span, actions.size());
    std::vector<HistoryEntry> out;
    out.reserve(n);
    for (std::size_t i = actions.size() - n; i < actions.size(); ++i) {
        out.push_back({observations[i], actions[i]});
    }
    return out;
}

std::vector<HistoryEntry> full_history(const std::vector<std::string>& observations,
                                       const std::vector<std::string>& actions, HistoryMode mode) {
    if (actions.size() + 1 != observations.size())
        throw ValidationError("full_history: expected |actions| == |observations| - 1");
    std::vector<HistoryEntry> out;
    out.reserve(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        HistoryEntry e;
        if (mode == HistoryMode::FullHistory) e.observation = observations[i];
        e.action = actions[i];
        out.push_back(std::move(e));
    }
    return out;
}

void order_demos(std::vector<DemoSequence>& demos, DemoOrder order) {
    // Most similar demonstration ends up nearest the query by default.
    std::stable_sort(demos.begin(), demos.end(), [order](const DemoSequence& a, const DemoSequence& b) {
        return order == DemoOrder::AscendingScore ? a.anchor_score < b.anchor_score
                                                  : a.anchor_score > b.anchor_score;
    });
}

AlignedContext build_aligned_context(const corpus::Memory& memory,
                                     const std::vector<retrieve::RetrievalHit>& hits,
                                     const EpisodeSnapshot& episode, const ExpansionConfig& cfg) {
    cfg.validate();
    if (episode.observations.empty()) throw ValidationError("episode has no observation");
    AlignedContext ctx;
    ctx.task = episode.task;
    ctx.mode = cfg.mode;
    ctx.show_marks = cfg.order_marks;
    ctx.current_observation = episode.observations.back();
    ctx.current_thought = episode.current_thought;
    for (const auto& h : hits) ctx.demos.push_back(temporal_expand(memory, h, cfg));
    order_demos(ctx.demos, cfg.demo_order);
    if (cfg.history_alignment) ctx.history = align_history(episode.observations, episode.actions, cfg);
    return ctx;
}

}  // namespace trad::align
