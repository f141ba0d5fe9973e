#pragma once

// Replay metrics, GridHouse success rates, significance tests and sweeps.

#include "trad/agents.hpp"
#include "trad/corpus.hpp"
#include "trad/world.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace trad::evalkit {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(const std::vector<double>& xs);

struct TTest {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
    bool degenerate = false;  // both samples had zero variance
};

// Welch's two-sample t-test, two-sided. Throws ValidationError when either
// sample has fewer than two values.
TTest t_test(const std::vector<double>& a, const std::vector<double>& b);

struct StepScore {
    bool element = false;  // predicted element id == gold element id
    bool full = false;     // element, operation and value all match
};

// An empty prediction (abstention) scores false on both counts.
StepScore score_step(const std::string& predicted, const corpus::Step& gold);

struct SeedMetrics {
    std::uint64_t seed = 0;
    double ele_acc = 0.0;
    double step_sr = 0.0;
    double sr = 0.0;
};

struct MetricsReport {
    // Means over seeds.
    double ele_acc = 0.0;
    double step_sr = 0.0;
    double sr = 0.0;
    bool has_step_metrics = false;  // false for GridHouse (SR only)
    std::size_t n_steps = 0;
    std::size_t n_trajs = 0;
    std::vector<SeedMetrics> per_seed;
    MeanStd ele_acc_stats, step_sr_stats, sr_stats;
    // GridHouse: per task kind, successes and episodes pooled over seeds.
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_kind;

    std::string summary_json() const;
};

// Replay data checks: gold actions parse under the web grammar and every
// step names its gold element in meta.
void validate_dataset(const std::vector<corpus::Trajectory>& dataset);

// Metrics for one seed from predictions laid out like the dataset.
SeedMetrics score_predictions(const std::vector<corpus::Trajectory>& dataset,
                              const std::vector<std::vector<std::string>>& predictions);

struct EvalOptions {
    std::vector<std::uint64_t> seeds{0};
    std::size_t workers = 1;
    // Injected backend (tests); otherwise built from the agent config.
    std::shared_ptr<const backend::Backend> backend;
};

// Teacher-forced single-step replay. Throws ValidationError("no trajectories")
// on an empty dataset.
MetricsReport replay_eval(const std::vector<corpus::Trajectory>& dataset, const corpus::Memory& memory,
                          const retrieve::MemoryIndex& index, const agents::AgentConfig& cfg,
                          const prompt::PromptTemplate& tpl, const EvalOptions& opts = {},
                          std::vector<agents::EpisodeRecord>* records = nullptr);

// SR with per-kind breakdown from finished GridHouse episodes (one seed).
MetricsReport compute_sr(const std::vector<agents::EpisodeRecord>& records);

struct GridTaskRef {
    std::uint64_t seed = 0;
    world::TaskKind kind = world::TaskKind::Put;
};

// `per_kind` tasks of every kind with consecutive seeds from first_seed.
std::vector<GridTaskRef> held_out_tasks(std::uint64_t first_seed, int per_kind);

// Closed-loop GridHouse runs, one pass over the tasks per agent seed.
MetricsReport gridhouse_eval(const std::vector<GridTaskRef>& tasks, const corpus::Memory& memory,
                             const retrieve::MemoryIndex& index, const agents::AgentConfig& cfg,
                             const prompt::PromptTemplate& tpl, const EvalOptions& opts = {},
                             std::vector<agents::EpisodeRecord>* records = nullptr);

struct SweepSpec {
    enum class Parameter { F, B, K, Components };

    Parameter parameter = Parameter::F;
    std::vector<int> values;  // F, B, K
    std::vector<std::string> components{"full", "w/o-TE", "w/o-ROM", "w/o-HA"};
    agents::AgentConfig base;

    void validate() const;
};

// "F=0..4", "B=1,3", "K=1..5" or "components". Duplicate values are dropped
// and reported through `warnings`.
SweepSpec parse_sweep(const std::string& text, std::vector<std::string>* warnings = nullptr);

// The agent config for one sweep point ("F=2", "w/o-ROM", ...).
agents::AgentConfig sweep_point(const SweepSpec& spec, std::size_t i, std::string& label);

struct SweepRow {
    std::string algorithm;
    std::string split;
    std::string param;
    std::vector<std::uint64_t> seeds;
    MetricsReport metrics;
};

// Exactly one of `gridhouse` / `replay` is used (replay when non-empty).
struct SweepTarget {
    std::vector<GridTaskRef> gridhouse;
    std::vector<corpus::Trajectory> replay;
    std::string split;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepTarget& target, const corpus::Memory& memory,
                                const retrieve::MemoryIndex& index, const prompt::PromptTemplate& tpl,
                                const EvalOptions& opts = {});

// Header "algorithm,split,param,seed,ele_acc,step_sr,sr"; seeds joined by ';'.
// GridHouse rows leave ele_acc and step_sr empty.
std::string rows_to_csv(const std::vector<SweepRow>& rows);

}  // namespace trad::evalkit
