#pragma once

// GridHouse: a small deterministic household text world with six task kinds,
// a nine-verb action grammar and ALFWorld-style observations.

#include "trad/corpus.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace trad::world {

enum class TaskKind { Put, Examine, Clean, Heat, Cool, PutTwo };

inline constexpr std::array<TaskKind, 6> kAllKinds = {TaskKind::Put,  TaskKind::Examine,
                                                      TaskKind::Clean, TaskKind::Heat,
                                                      TaskKind::Cool, TaskKind::PutTwo};

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view s);

struct Receptacle {
    std::string name;  // "cabinet 1"
    std::string cls;   // "cabinet"
    bool openable = false;
    bool open = false;
    std::vector<std::string> contents;

    bool operator==(const Receptacle&) const = default;
};

struct HouseState {
    std::vector<Receptacle> receptacles;  // listing order
    std::string location;                 // empty: middle of the room
    std::optional<std::string> holding;
    std::set<std::string> cleaned, heated, cooled;
    std::set<std::string> visited;  // receptacles whose contents the agent has seen
    bool examined = false;

    const Receptacle* find(std::string_view name) const;
    Receptacle* find(std::string_view name);
    // Sorted multiset of every object, held or placed.
    std::vector<std::string> all_objects() const;

    bool operator==(const HouseState&) const = default;
};

struct GridTask {
    TaskKind kind = TaskKind::Put;
    std::string object_class;
    std::string target_class;  // empty for Examine
    std::string instruction;

    int required_count() const { return kind == TaskKind::PutTwo ? 2 : 1; }
};

// Parsed form of the instruction text; what an agent can know about its task.
struct TaskInfo {
    TaskKind kind = TaskKind::Put;
    std::string object_class;
    std::string target_class;

    bool operator==(const TaskInfo&) const = default;
};

std::string make_instruction(TaskKind kind, const std::string& object_class,
                             const std::string& target_class);
std::optional<TaskInfo> parse_instruction(std::string_view instruction);

enum class Verb { GoTo, Open, Take, Put, Clean, Heat, Cool, Use, Look };

struct GridAction {
    Verb verb = Verb::Look;
    std::string object;
    std::string receptacle;

    std::string str() const;
    bool operator==(const GridAction&) const = default;
};

// Canonical single-spaced parse of the nine verbs; nullopt if the text is not
// a grammatical action.
std::optional<GridAction> parse_grid_action(std::string_view text);

// "<lowercase word> <number>"
bool is_entity(std::string_view text);
std::string class_of(std::string_view entity);
// Every "<word> <number>" mention in order of appearance.
std::vector<std::string> find_entities(std::string_view text);
bool is_receptacle_class(std::string_view cls);

// Appliance receptacle class and verb for Clean/Heat/Cool.
std::string appliance_class(TaskKind kind);
std::string process_verb(TaskKind kind);
bool needs_processing(TaskKind kind);

// Receptacle classes in the order a searcher should try them.
const std::vector<std::string>& search_priority(const std::string& object_class);
const std::vector<std::string>& lamp_priority();

std::pair<HouseState, GridTask> generate_task(std::uint64_t seed, TaskKind kind);
std::string task_id(std::uint64_t seed, TaskKind kind);

std::string initial_observation(const HouseState& state);
bool task_satisfied(const HouseState& state, const GridTask& task);

struct StepOutcome {
    HouseState state;
    std::string observation;
    bool done = false;
    bool success = false;
};

// Throws ValidationError for text outside the grammar. Grammatical actions
// whose preconditions fail yield "Nothing happens." and an unchanged state.
StepOutcome env_step(const HouseState& state, const GridTask& task, std::string_view action);

// Deterministic searcher that explores receptacles in class priority order.
std::string expert_policy(const HouseState& state, const GridTask& task);

struct ExpertRun {
    corpus::Trajectory trajectory;
    std::vector<std::string> thoughts;  // expert-written, one per step
    bool success = false;
};

ExpertRun run_expert(std::uint64_t seed, TaskKind kind, int max_steps = 200);

// One expert trajectory per (seed, kind), unannotated.
corpus::Memory build_memory(const std::vector<std::uint64_t>& seeds, const std::vector<TaskKind>& kinds);

}  // namespace trad::world
