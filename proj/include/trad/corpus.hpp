#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trad::corpus {

using MetaMap = std::map<std::string, std::string>;

struct TaskSpec {
    std::string task_id;
    std::string instruction;
    std::string domain_tag;
    MetaMap meta;

    bool operator==(const TaskSpec&) const = default;
};

struct Step {
    int index = 0;
    std::string observation;
    std::string action;
    // Optional per-step data such as replay gold labels. Empty for most memories.
    MetaMap meta;

    bool operator==(const Step&) const = default;
};

struct Trajectory {
    TaskSpec task;
    std::vector<Step> steps;
    bool success = true;

    const std::string& id() const { return task.task_id; }
    bool operator==(const Trajectory&) const = default;
};

struct AnnotatedStep {
    std::string trajectory_id;
    int step_index = 0;
    std::string thought;
    Step step;

    bool operator==(const AnnotatedStep&) const = default;
};

// A trajectory together with one thought per step, e.g. the human-written
// exemplars used to bootstrap thought labelling.
struct AnnotatedTrajectory {
    Trajectory trajectory;
    std::vector<std::string> thoughts;
};

using StepKey = std::pair<std::string, int>;

// The thought-enhanced memory. Trajectories are keyed by task_id.
class Memory {
public:
    // Throws ValidationError on duplicate ids or malformed trajectories.
    void add_trajectory(Trajectory trajectory);
    // Throws ValidationError if the referenced step does not exist.
    void annotate(const std::string& trajectory_id, int step_index, std::string thought);

    const std::map<std::string, Trajectory>& trajectories() const { return trajectories_; }
    const std::map<StepKey, AnnotatedStep>& annotations() const { return annotations_; }

    const Trajectory& trajectory(const std::string& id) const;
    const AnnotatedStep* annotation(const std::string& trajectory_id, int step_index) const;
    bool has_annotation(const std::string& trajectory_id, int step_index) const;

    std::size_t step_count() const;
    bool fully_annotated() const;
    bool empty() const { return trajectories_.empty(); }

    // Trajectories with every step annotated, as exemplars for prompting.
    std::vector<AnnotatedTrajectory> annotated_trajectories() const;

    // Identifiers of embedding indexes built over this memory; cleared on mutation.
    std::optional<std::string> traj_index_id;
    std::optional<std::string> step_index_id;

    bool operator==(const Memory& other) const {
        return trajectories_ == other.trajectories_ && annotations_ == other.annotations_;
    }

private:
    std::map<std::string, Trajectory> trajectories_;
    std::map<StepKey, AnnotatedStep> annotations_;
};

Memory parse_memory(std::string_view text);
std::string serialize_memory(const Memory& memory);

Memory load_memory(const std::string& path);
void save_memory(const Memory& memory, const std::string& path);

struct WindowItem {
    int offset = 0;
    const Step* step = nullptr;
};

// Steps max(0, anchor-b) .. min(n-1, anchor+f) paired with offset = index - anchor.
std::vector<WindowItem> window(const Trajectory& trajectory, int anchor, int b, int f);

}  // namespace trad::corpus
