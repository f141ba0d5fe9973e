#pragma once

#include "trad/corpus.hpp"
#include "trad/retrieve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trad::align {

enum class HistoryMode { FullHistory, SingleStep };

// Placement of demonstrations in the prompt, by anchor similarity.
enum class DemoOrder { AscendingScore, DescendingScore };

std::string to_string(HistoryMode mode);
HistoryMode history_mode_from_string(const std::string& s);

struct ExpansionConfig {
    int b = 0;
    int f = 2;
    int k = 2;
    bool include_demo_thoughts = true;
    HistoryMode mode = HistoryMode::FullHistory;
    // Ablation switches: relative order marks and history alignment.
    bool order_marks = true;
    bool history_alignment = true;
    DemoOrder demo_order = DemoOrder::AscendingScore;

    static constexpr int kMaxExtent = 16;
    void validate() const;
};

struct DemoItem {
    int offset = 0;
    std::string mark;
    corpus::Step step;
    std::optional<std::string> thought;
};

struct DemoSequence {
    corpus::TaskSpec task;
    std::string trajectory_id;
    std::vector<DemoItem> items;
    double anchor_score = 0.0;
};

struct HistoryEntry {
    std::optional<std::string> observation;
    std::string action;
};

struct AlignedContext {
    corpus::TaskSpec task;
    std::vector<DemoSequence> demos;
    std::vector<HistoryEntry> history;
    std::string current_observation;
    std::optional<std::string> current_thought;
    HistoryMode mode = HistoryMode::FullHistory;
    bool show_marks = true;

    std::size_t demo_step_count() const;
};

// What the aligned-decision transform needs to know about a running episode.
struct EpisodeSnapshot {
    corpus::TaskSpec task;
    std::vector<std::string> observations;  // o_0 .. o_t
    std::vector<std::string> actions;       // a_0 .. a_{t-1}
    std::optional<std::string> current_thought;
};

// "[Step i]" with no padding.
std::string order_mark(int offset);

DemoSequence temporal_expand(const corpus::Memory& memory, const retrieve::RetrievalHit& hit,
                             const ExpansionConfig& cfg);

// Full-history mode: the last min(b+f, |actions|) (observation, action) pairs
// in chronological order. Single-step mode: every previous action, no
// observations.
std::vector<HistoryEntry> align_history(const std::vector<std::string>& observations,
                                        const std::vector<std::string>& actions,
                                        const ExpansionConfig& cfg);

// Every previous pair, for trajectory-level baselines that prompt with the whole episode.
std::vector<HistoryEntry> full_history(const std::vector<std::string>& observations,
                                       const std::vector<std::string>& actions, HistoryMode mode);

void order_demos(std::vector<DemoSequence>& demos, DemoOrder order);

AlignedContext build_aligned_context(const corpus::Memory& memory,
                                     const std::vector<retrieve::RetrievalHit>& hits,
                                     const EpisodeSnapshot& episode, const ExpansionConfig& cfg);

}  // namespace trad::align
