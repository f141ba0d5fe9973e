#include "trad/corpus.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace trad::corpus {

using json = nlohmann::json;

namespace {

void validate(const Trajectory& t) {
    if (t.task.task_id.empty()) throw ValidationError("trajectory with empty task_id");
    if (t.task.instruction.empty())
        throw ValidationError("trajectory " + t.task.task_id + " has an empty instruction");
    if (t.steps.empty()) throw ValidationError("trajectory " + t.task.task_id + " has no steps");
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].index != static_cast<int>(i))
            throw ValidationError("trajectory " + t.task.task_id + ": step-index gap at position " +
                                  std::to_string(i));
        if (t.success && t.steps[i].action.empty())
            throw ValidationError("trajectory " + t.task.task_id + ": expert step " +
                                  std::to_string(i) + " has no action");
    }
}

MetaMap meta_from(const json& j, std::size_t line) {
    MetaMap m;
    if (j.is_null()) return m;
    if (!j.is_object()) throw ParseError(line, "meta must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw ParseError(line, "meta value for '" + k + "' must be a string");
        m[k] = v.get<std::string>();
    }
    return m;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ParseError(line, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

}  // namespace

void Memory::add_trajectory(Trajectory trajectory) {
    validate(trajectory);
    const std::string id = trajectory.task.task_id;
    if (trajectories_.count(id)) throw ValidationError("duplicate trajectory_id " + id);
    trajectories_.emplace(id, std::move(trajectory));
    traj_index_id.reset();
    step_index_id.reset();
}

void Memory::annotate(const std::string& trajectory_id, int step_index, std::string thought) {
    auto it = trajectories_.find(trajectory_id);
    if (it == trajectories_.end() || step_index < 0 ||
        step_index >= static_cast<int>(it->second.steps.size()))
        throw ValidationError("dangling annotation (" + trajectory_id + ", " +
                              std::to_string(step_index) + ")");
    if (util::trim(thought).empty())
        throw ValidationError("empty thought for (" + trajectory_id + ", " +
                              std::to_string(step_index) + ")");
    AnnotatedStep ann{trajectory_id, step_index, std::move(thought),
                      it->second.steps[static_cast<std::size_t>(step_index)]};
    annotations_[{trajectory_id, step_index}] = std::move(ann);
    step_index_id.reset();
}

const Trajectory& Memory::trajectory(const std::string& id) const {
    auto it = trajectories_.find(id);
    if (it == trajectories_.end()) throw ValidationError("unknown trajectory " + id);
    return it->second;
}

const AnnotatedStep* Memory::annotation(const std::string& trajectory_id, int step_index) const {
    auto it = annotations_.find({trajectory_id, step_index});
    return it == annotations_.end() ? nullptr : &it->second;
}

bool Memory::has_annotation(const std::string& trajectory_id, int step_index) const {
    return annotations_.count({trajectory_id, step_index}) > 0;
}

std::size_t Memory::step_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : trajectories_) n += t.steps.size();
    return n;
}

bool Memory::fully_annotated() const { return annotations_.size() == step_count(); }

std::vector<AnnotatedTrajectory> Memory::annotated_trajectories() const {
    std::vector<AnnotatedTrajectory> out;
    for (const auto& [id, t] : trajectories_) {
        AnnotatedTrajectory at{t, {}};
        bool complete = true;
        for (const auto& s : t.steps) {
            const auto* a = annotation(id, s.index);
            if (!a) {
                complete = false;
                break;
            }
            at.thoughts.push_back(a->thought);
        }
        if (complete) out.push_back(std::move(at));
    }
    return out;
}

Memory parse_memory(std::string_view text) {
    struct PendingAnn {
        std::string traj;
        int step;
        std::string thought;
        std::size_t line;
    };
    Memory memory;
    std::vector<PendingAnn> pending;
    std::size_t line_no = 0;
    for (const auto& raw : util::split_lines(text)) {
        ++line_no;
        if (util::trim(raw).empty()) continue;
        json j;
        try {
            j = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not an object");
        const std::string kind = require_string(j, "kind", line_no);
        if (kind == "traj") {
            Trajectory t;
            t.task.task_id = require_string(j, "task_id", line_no);
            t.task.instruction = require_string(j, "instruction", line_no);
            t.task.domain_tag = j.value("domain_tag", std::string{});
            t.task.meta = meta_from(j.value("meta", json()), line_no);
            t.success = j.value("success", true);
            auto steps = j.find("steps");
            if (steps == j.end() || !steps->is_array())
                throw ParseError(line_no, "missing array field 'steps'");
            int position = 0;
            for (const auto& sj : *steps) {
                Step s;
                s.index = sj.contains("index") ? sj.at("index").get<int>() : position;
                s.observation = require_string(sj, "observation", line_no);
                s.action = require_string(sj, "action", line_no);
                s.meta = meta_from(sj.value("meta", json()), line_no);
                t.steps.push_back(std::move(s));
                ++position;
            }
            try {
                memory.add_trajectory(std::move(t));
            } catch (const ValidationError& e) {
                throw ParseError(line_no, e.what());
            }
        } else if (kind == "ann") {
            auto idx = j.find("step_index");
            if (idx == j.end() || !idx->is_number_integer())
                throw ParseError(line_no, "missing integer field 'step_index'");
            pending.push_back({require_string(j, "trajectory_id", line_no), idx->get<int>(),
                               require_string(j, "thought", line_no), line_no});
        } else {
            throw ParseError(line_no, "unknown record kind '" + kind + "'");
        }
    }
    // Annotations may precede their trajectory in the file.
    for (auto& p : pending) {
        if (memory.has_annotation(p.traj, p.step))
            throw ParseError(p.line, "duplicate annotation (" + p.traj + ", " +
                                         std::to_string(p.step) + ")");
        try {
            memory.annotate(p.traj, p.step, std::move(p.thought));
        } catch (const ValidationError& e) {
            throw ParseError(p.line, e.what());
        }
    }
    return memory;
}

std::string serialize_memory(const Memory& memory) {
    std::string out;
    for (const auto& [id, t] : memory.trajectories()) {
        json j;
        j["kind"] = "traj";
        j["task_id"] = t.task.task_id;
        j["instruction"] = t.task.instruction;
        j["domain_tag"] = t.task.domain_tag;
        j["meta"] = t.task.meta;
        j["success"] = t.success;
        json steps = json::array();
        for (const auto& s : t.steps) {
            json sj{{"observation", s.observation}, {"action", s.action}};
            if (!s.meta.empty()) sj["meta"] = s.meta;
            steps.push_back(std::move(sj));
        }
        j["steps"] = std::move(steps);
        out += j.dump();
        out += '\n';
        for (const auto& s : t.steps) {
            if (const auto* a = memory.annotation(id, s.index)) {
                json aj{{"kind", "ann"},
                        {"trajectory_id", id},
                        {"step_index", s.index},
                        {"thought", a->thought}};
                out += aj.dump();
                out += '\n';
            }
        }
    }
    return out;
}

Memory load_memory(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
    return parse_memory(util::read_file(path));
}

void save_memory(const Memory& memory, const std::string& path) {
    // Write-then-rename so an interrupted save never truncates an existing memory.
    const std::string tmp = path + ".tmp";
    util::write_file(tmp, serialize_memory(memory));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot write " + path);
    }
}

std::vector<WindowItem> window(const Trajectory& trajectory, int anchor, int b, int f) {
    const int n = static_cast<int>(trajectory.steps.size());
    if (anchor < 0 || anchor >= n)
        throw ValidationError("window anchor " + std::to_string(anchor) + " out of range [0, " +
                              std::to_string(n) + ")");
    if (b < 0 || f < 0) throw ValidationError("window extents must be non-negative");
    const int lo = std::max(0, anchor - b);
    const int hi = std::min(n - 1, anchor + f);
    std::vector<WindowItem> items;
    items.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i)
        items.push_back({i - anchor, &trajectory.steps[static_cast<std::size_t>(i)]});
    return items;
}

}  // namespace trad::corpus
