#pragma once

// The TRAD agent loop, thought preparation, and the comparison baselines.

#include "trad/align.hpp"
#include "trad/backend.hpp"
#include "trad/corpus.hpp"
#include "trad/embed.hpp"
#include "trad/prompt.hpp"
#include "trad/retrieve.hpp"
#include "trad/world.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trad::agents {

enum class Algorithm { Trad, TrOnly, Synapse, SynapseReact, ReactRandom, ReactFixed, ReactRelevant, NoRetrieval };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::Trad,         Algorithm::TrOnly,      Algorithm::Synapse,
                                               Algorithm::SynapseReact, Algorithm::ReactRandom, Algorithm::ReactFixed,
                                               Algorithm::ReactRelevant, Algorithm::NoRetrieval};

std::string to_string(Algorithm a);
// Throws UsageError listing the valid names.
Algorithm algorithm_from_string(std::string_view s);

struct AgentConfig {
    Algorithm algorithm = Algorithm::Trad;
    align::ExpansionConfig expansion;
    backend::BackendSpec backend;
    // Optional separate backend for thought generation only.
    std::optional<backend::BackendSpec> thought_backend;
    embed::EmbedderSpec embedder;
    int max_episode_steps = 50;
    int retry_on_parse_error = 2;
    std::uint64_t seed = 0;
    // react-fixed demos (trajectory ids). Empty means the GridHouse default:
    // the first K memory trajectories of the task's kind.
    std::vector<std::string> fixed_demos;
    // Keep rendered action prompts in step logs (not serialized).
    bool keep_prompts = false;

    // tr-only is trad with B = F = 0.
    AgentConfig normalized() const;
    void validate() const;
    // Every field, defaults materialized, in a stable order.
    std::string snapshot_json() const;
};

// Inverse of snapshot_json; keys that are absent keep their defaults.
AgentConfig config_from_json(std::string_view text);

struct EpisodeState {
    corpus::TaskSpec task;
    std::vector<std::string> observations;  // o_0 .. o_t
    std::vector<std::string> actions;       // a_0 .. a_{t-1}
    std::vector<std::string> thoughts;      // tau_0 .. tau_{t-1}
    bool done = false;
    bool success = false;
};

struct StepLog {
    int step = 0;
    std::optional<std::string> thought;
    std::vector<retrieve::TrajHit> traj_hits;
    std::vector<retrieve::RetrievalHit> step_hits;
    std::string thought_prompt_hash;
    std::string prompt_hash;
    std::size_t demo_steps = 0;
    std::string raw_completion;
    std::string parsed_action;  // empty when abstaining
    int parse_retries = 0;
    bool fallback = false;
    std::string parse_error;
    std::vector<prompt::ChatMessage> action_prompt;  // only with keep_prompts
};

struct EpisodeRecord {
    std::string config;  // AgentConfig::snapshot_json
    corpus::TaskSpec task;
    std::vector<StepLog> steps;
    bool success = false;
    int steps_taken = 0;
    // False when the run stopped on a fault (backend exhaustion, bad data).
    bool completed = true;
    std::string error;

    // One line per step log followed by a summary line.
    std::string to_jsonl() const;
};

class Environment {
public:
    struct Outcome {
        std::string observation;
        bool done = false;
        bool success = false;
    };

    virtual ~Environment() = default;
    virtual const corpus::TaskSpec& task() const = 0;
    virtual prompt::Grammar grammar() const = 0;
    virtual std::string reset() = 0;
    virtual Outcome step(const std::string& action) = 0;
};

class GridHouseEnv final : public Environment {
public:
    GridHouseEnv(std::uint64_t seed, world::TaskKind kind);

    const corpus::TaskSpec& task() const override { return spec_; }
    prompt::Grammar grammar() const override { return prompt::Grammar::GridHouse; }
    std::string reset() override;
    Outcome step(const std::string& action) override;

private:
    std::uint64_t seed_;
    world::TaskKind kind_;
    corpus::TaskSpec spec_;
    world::HouseState state_;
    world::GridTask task_;
};

// One configured agent over an annotated, indexed memory. Stateless between
// episodes and safe to share across threads.
class Agent {
public:
    Agent(const corpus::Memory& memory, const retrieve::MemoryIndex& index, AgentConfig cfg,
          const prompt::PromptTemplate& tpl);
    // For tests: inject backends instead of building them from the config.
    Agent(const corpus::Memory& memory, const retrieve::MemoryIndex& index, AgentConfig cfg,
          const prompt::PromptTemplate& tpl, std::shared_ptr<const backend::Backend> action_backend,
          std::shared_ptr<const backend::Backend> thought_backend);

    const AgentConfig& config() const { return cfg_; }

    // One decision for the current state: thought (if any) and action.
    StepLog decide(const EpisodeState& state) const;

    EpisodeRecord run_episode(Environment& env) const;
    // Teacher-forced: step t sees the gold observations and actions before t.
    EpisodeRecord replay_episode(const corpus::Trajectory& gold) const;

private:
    std::string generate_thought(const std::vector<corpus::AnnotatedTrajectory>& demos, const EpisodeState& state,
                                 StepLog& log) const;
    void predict_action(const align::AlignedContext& ctx, StepLog& log) const;
    std::vector<corpus::AnnotatedTrajectory> as_annotated(const std::vector<std::string>& ids) const;
    align::DemoSequence whole_trajectory(const std::string& id, bool with_thoughts) const;

    const corpus::Memory& memory_;
    const retrieve::MemoryIndex& index_;
    AgentConfig cfg_;
    const prompt::PromptTemplate& tpl_;
    std::shared_ptr<const backend::Backend> action_backend_;
    std::shared_ptr<const backend::Backend> thought_backend_;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

// Labels every unannotated step. On failure the memory keeps the thoughts
// produced so far (saved to save_path when given) and the error says how many.
void prepare_thoughts(corpus::Memory& memory, const std::vector<corpus::AnnotatedTrajectory>& exemplars,
                      const backend::Backend& backend, const prompt::PromptTemplate& tpl,
                      align::HistoryMode mode = align::HistoryMode::FullHistory,
                      const std::optional<std::string>& save_path = std::nullopt, const Progress& progress = {});

// Runs fn(i) for i in [0, n) on `workers` threads; results land by index.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace trad::agents
