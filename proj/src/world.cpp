#include "trad/world.hpp"

#include "trad/belief.hpp"
#include "trad/error.hpp"
#include "trad/util.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>

namespace trad::world {

namespace {

struct ReceptacleClass {
    const char* name;
    int max_count;
    bool openable;
};

// Alphabetical, which is also the room listing order.
constexpr ReceptacleClass kReceptacleClasses[] = {
    {"bed", 1, false},       {"cabinet", 4, true},    {"coffeetable", 1, false}, {"countertop", 2, false},
    {"desk", 1, false},      {"diningtable", 1, false}, {"drawer", 4, true},     {"dresser", 1, false},
    {"fridge", 1, true},     {"garbagecan", 1, false}, {"microwave", 1, true},   {"safe", 1, true},
    {"shelf", 3, false},     {"sidetable", 2, false},  {"sinkbasin", 1, false},  {"sofa", 1, false},
    {"toilet", 1, false},
};

struct ObjectClass {
    std::string name;
    std::vector<std::string> priority;
    std::vector<TaskKind> kinds;
    std::vector<std::string> targets;
};

using K = TaskKind;

const std::vector<ObjectClass>& object_classes() {
    static const std::vector<ObjectClass> kObjects = {
        {"alarmclock", {"desk", "sidetable", "dresser", "shelf"}, {K::Examine, K::Put}, {"desk", "dresser", "shelf"}},
        {"apple", {"countertop", "diningtable", "fridge", "garbagecan"}, {K::Clean, K::Heat, K::Cool, K::Put},
         {"countertop", "diningtable", "garbagecan"}},
        {"book", {"desk", "shelf", "sidetable", "bed", "sofa"}, {K::Examine, K::Put, K::PutTwo},
         {"shelf", "desk", "sidetable", "dresser", "bed"}},
        {"bowl", {"cabinet", "countertop", "diningtable", "shelf"}, {K::Clean, K::Heat, K::Cool, K::Put},
         {"cabinet", "diningtable", "shelf"}},
        {"candle", {"toilet", "cabinet", "countertop", "shelf"}, {K::Put, K::PutTwo},
         {"toilet", "cabinet", "shelf", "countertop"}},
        {"cd", {"desk", "drawer", "shelf", "safe", "sidetable"}, {K::Examine, K::Put, K::PutTwo},
         {"safe", "drawer", "shelf", "desk"}},
        {"cellphone", {"desk", "bed", "sidetable", "dresser", "drawer"}, {K::Examine, K::Put, K::PutTwo},
         {"bed", "desk", "sidetable", "dresser", "drawer"}},
        {"cup", {"cabinet", "countertop", "diningtable", "shelf"}, {K::Clean, K::Heat, K::Cool, K::PutTwo},
         {"cabinet", "countertop", "shelf"}},
        {"egg", {"fridge", "countertop", "diningtable", "garbagecan"}, {K::Clean, K::Heat, K::Cool},
         {"countertop", "diningtable", "garbagecan"}},
        {"keychain", {"drawer", "sidetable", "dresser", "safe", "sofa"}, {K::Examine, K::Put, K::PutTwo},
         {"safe", "drawer", "dresser", "sidetable"}},
        {"knife", {"drawer", "countertop", "diningtable"}, {K::Clean, K::Put}, {"drawer", "countertop", "diningtable"}},
        {"lettuce", {"fridge", "countertop", "diningtable"}, {K::Clean, K::Heat, K::Cool},
         {"countertop", "diningtable"}},
        {"mug", {"cabinet", "countertop", "coffeetable", "shelf", "sinkbasin"},
         {K::Clean, K::Heat, K::Cool, K::Put, K::PutTwo}, {"cabinet", "coffeetable", "shelf", "countertop"}},
        {"pen", {"desk", "drawer", "sidetable", "dresser", "shelf"}, {K::Examine, K::Put, K::PutTwo},
         {"drawer", "desk", "shelf"}},
        {"pillow", {"sofa", "bed"}, {K::Examine, K::Put, K::PutTwo}, {"sofa", "bed"}},
        {"plate", {"cabinet", "countertop", "diningtable", "shelf"}, {K::Clean, K::Heat, K::Cool, K::Put},
         {"cabinet", "countertop", "diningtable", "shelf"}},
        {"potato", {"fridge", "countertop", "diningtable", "garbagecan"}, {K::Clean, K::Heat, K::Cool},
         {"countertop", "diningtable"}},
        {"remotecontrol", {"coffeetable", "sofa", "sidetable", "dresser"}, {K::Examine, K::Put, K::PutTwo},
         {"coffeetable", "sofa", "dresser"}},
        {"soapbottle", {"toilet", "countertop", "cabinet", "garbagecan", "sinkbasin"}, {K::Put, K::PutTwo},
         {"toilet", "cabinet", "countertop", "shelf"}},
        {"spoon", {"drawer", "countertop", "diningtable", "sinkbasin"}, {K::Clean, K::Put, K::PutTwo},
         {"drawer", "diningtable", "countertop"}},
        {"spraybottle", {"cabinet", "toilet", "countertop", "garbagecan"}, {K::Put, K::PutTwo},
         {"toilet", "cabinet", "shelf", "countertop"}},
        {"tomato", {"countertop", "diningtable", "fridge"}, {K::Clean, K::Heat, K::Cool, K::Put},
         {"countertop", "diningtable"}},
    };
    return kObjects;
}

const ReceptacleClass* receptacle_class(std::string_view cls) {
    for (const auto& rc : kReceptacleClasses)
        if (cls == rc.name) return &rc;
    return nullptr;
}

const std::regex& entity_re() {
    static const std::regex re("([a-z]+) ([0-9]+)");
    return re;
}

std::string listing(const std::vector<std::string>& items) {
    if (items.empty()) return "nothing";
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += (i + 1 == items.size()) ? ", and " : ", ";
        out += "a " + items[i];
    }
    return out;
}

std::string describe_contents(const Receptacle& r) {
    if (r.openable) return "The " + r.name + " is open. In it, you see " + listing(r.contents) + ".";
    return "On the " + r.name + ", you see " + listing(r.contents) + ".";
}

}  // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::Put: return "put";
        case TaskKind::Examine: return "examine";
        case TaskKind::Clean: return "clean";
        case TaskKind::Heat: return "heat";
        case TaskKind::Cool: return "cool";
        case TaskKind::PutTwo: return "puttwo";
    }
    return "put";
}

TaskKind task_kind_from_string(std::string_view s) {
    for (TaskKind k : kAllKinds)
        if (to_string(k) == s) return k;
    throw ValidationError("unknown task kind '" + std::string(s) + "'");
}

const Receptacle* HouseState::find(std::string_view name) const {
    for (const auto& r : receptacles)
        if (r.name == name) return &r;
    return nullptr;
}

Receptacle* HouseState::find(std::string_view name) {
    for (auto& r : receptacles)
        if (r.name == name) return &r;
    return nullptr;
}

std::vector<std::string> HouseState::all_objects() const {
    std::vector<std::string> out;
    for (const auto& r : receptacles) out.insert(out.end(), r.contents.begin(), r.contents.end());
    if (holding) out.push_back(*holding);
    std::sort(out.begin(), out.end());
    return out;
}

std::string make_instruction(TaskKind kind, const std::string& object_class, const std::string& target_class) {
    switch (kind) {
        case TaskKind::Put: return "put some " + object_class + " on " + target_class + ".";
        case TaskKind::PutTwo: return "put two " + object_class + " in " + target_class + ".";
        case TaskKind::Clean: return "put a clean " + object_class + " in " + target_class + ".";
        case TaskKind::Heat: return "heat some " + object_class + " and put it in " + target_class + ".";
        case TaskKind::Cool: return "cool some " + object_class + " and put it in " + target_class + ".";
        case TaskKind::Examine: return "look at " + object_class + " under the desklamp.";
    }
    return {};
}

std::optional<TaskInfo> parse_instruction(std::string_view instruction) {
    static const std::pair<TaskKind, std::regex> kPatterns[] = {
        {TaskKind::Put, std::regex(R"(^put some ([a-z]+) on ([a-z]+)\.?$)")},
        {TaskKind::PutTwo, std::regex(R"(^put two ([a-z]+) in ([a-z]+)\.?$)")},
        {TaskKind::Clean, std::regex(R"(^put a clean ([a-z]+) in ([a-z]+)\.?$)")},
        {TaskKind::Heat, std::regex(R"(^heat some ([a-z]+) and put it in ([a-z]+)\.?$)")},
        {TaskKind::Cool, std::regex(R"(^cool some ([a-z]+) and put it in ([a-z]+)\.?$)")},
        {TaskKind::Examine, std::regex(R"(^look at ([a-z]+) under the desklamp\.?$)")},
    };
    std::string text = util::trim(instruction);
    std::smatch m;
    for (const auto& [kind, re] : kPatterns) {
        if (std::regex_match(text, m, re)) {
            TaskInfo info{kind, m[1].str(), kind == TaskKind::Examine ? "" : m[2].str()};
            return info;
        }
    }
    return std::nullopt;
}

std::string GridAction::str() const {
    switch (verb) {
        case Verb::GoTo: return "go to " + receptacle;
        case Verb::Open: return "open " + receptacle;
        case Verb::Take: return "take " + object + " from " + receptacle;
        case Verb::Put: return "put " + object + " in/on " + receptacle;
        case Verb::Clean: return "clean " + object + " with " + receptacle;
        case Verb::Heat: return "heat " + object + " with " + receptacle;
        case Verb::Cool: return "cool " + object + " with " + receptacle;
        case Verb::Use: return "use " + object;
        case Verb::Look: return "look";
    }
    return "look";
}

std::optional<GridAction> parse_grid_action(std::string_view text) {
    static const std::regex kGo(R"(^go to ([a-z]+ [0-9]+)$)");
    static const std::regex kOpen(R"(^open ([a-z]+ [0-9]+)$)");
    static const std::regex kTake(R"(^take ([a-z]+ [0-9]+) from ([a-z]+ [0-9]+)$)");
    static const std::regex kPut(R"(^put ([a-z]+ [0-9]+) (?:in/on|in|on) ([a-z]+ [0-9]+)$)");
    static const std::regex kProcess(R"(^(clean|heat|cool) ([a-z]+ [0-9]+) with ([a-z]+ [0-9]+)$)");
    static const std::regex kUse(R"(^use ([a-z]+ [0-9]+)$)");

    std::string s = util::collapse_spaces(util::trim(text));
    while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    std::smatch m;
    if (s == "look") return GridAction{Verb::Look, "", ""};
    if (std::regex_match(s, m, kGo)) return GridAction{Verb::GoTo, "", m[1].str()};
    if (std::regex_match(s, m, kOpen)) return GridAction{Verb::Open, "", m[1].str()};
    if (std::regex_match(s, m, kTake)) return GridAction{Verb::Take, m[1].str(), m[2].str()};
    if (std::regex_match(s, m, kPut)) return GridAction{Verb::Put, m[1].str(), m[2].str()};
    if (std::regex_match(s, m, kProcess)) {
        Verb v = m[1] == "clean" ? Verb::Clean : m[1] == "heat" ? Verb::Heat : Verb::Cool;
        return GridAction{v, m[2].str(), m[3].str()};
    }
    if (std::regex_match(s, m, kUse)) return GridAction{Verb::Use, m[1].str(), ""};
    return std::nullopt;
}

bool is_entity(std::string_view text) {
    return std::regex_match(text.begin(), text.end(), entity_re());
}

std::string class_of(std::string_view entity) {
    auto sp = entity.find(' ');
    return std::string(entity.substr(0, sp));
}

std::vector<std::string> find_entities(std::string_view text) {
    std::vector<std::string> out;
    std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), entity_re()); it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    return out;
}

bool is_receptacle_class(std::string_view cls) { return receptacle_class(cls) != nullptr; }

std::string appliance_class(TaskKind kind) {
    switch (kind) {
        case TaskKind::Clean: return "sinkbasin";
        case TaskKind::Heat: return "microwave";
        case TaskKind::Cool: return "fridge";
        default: return {};
    }
}

std::string process_verb(TaskKind kind) {
    switch (kind) {
        case TaskKind::Clean: return "clean";
        case TaskKind::Heat: return "heat";
        case TaskKind::Cool: return "cool";
        default: return {};
    }
}

bool needs_processing(TaskKind kind) {
    return kind == TaskKind::Clean || kind == TaskKind::Heat || kind == TaskKind::Cool;
}

const std::vector<std::string>& search_priority(const std::string& object_class) {
    static const std::vector<std::string> kNone;
    for (const auto& oc : object_classes())
        if (oc.name == object_class) return oc.priority;
    return kNone;
}

const std::vector<std::string>& lamp_priority() {
    static const std::vector<std::string> kLamp = {"desk", "sidetable", "dresser", "shelf"};
    return kLamp;
}

std::string task_id(std::uint64_t seed, TaskKind kind) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(seed));
    return "gh-" + to_string(kind) + "-" + buf;
}

std::pair<HouseState, GridTask> generate_task(std::uint64_t seed, TaskKind kind) {
    util::SplitMix64 rng(util::mix_seed(seed, static_cast<std::uint64_t>(kind) + 1));
    auto pick = [&](const auto& v) -> const auto& { return v[rng.below(v.size())]; };

    std::vector<const ObjectClass*> eligible;
    for (const auto& oc : object_classes())
        if (std::find(oc.kinds.begin(), oc.kinds.end(), kind) != oc.kinds.end()) eligible.push_back(&oc);
    const ObjectClass& oc = *pick(eligible);
    std::string target = kind == TaskKind::Examine ? "" : pick(oc.targets);

    std::map<std::string, int> counts;
    auto add_class = [&](const std::string& cls) {
        const ReceptacleClass* rc = receptacle_class(cls);
        if (!rc || counts[cls] >= rc->max_count) return false;
        ++counts[cls];
        return true;
    };
    int total = 0;
    auto add = [&](const std::string& cls) {
        if (add_class(cls)) ++total;
    };

    if (!target.empty()) add(target);
    if (needs_processing(kind)) add(appliance_class(kind));
    std::string lamp_host;
    if (kind == TaskKind::Examine) {
        lamp_host = rng.below(2) ? "sidetable" : "desk";
        add(lamp_host);
    }
    std::vector<std::string> pri;
    for (const auto& c : oc.priority)
        if (c != target) pri.push_back(c);
    for (int i = 0; i < 2 && !pri.empty(); ++i) {
        std::size_t j = rng.below(pri.size());
        add(pri[j]);
        pri.erase(pri.begin() + static_cast<std::ptrdiff_t>(j));
    }
    const int n_receptacles = rng.range(6, 12);
    while (total < n_receptacles) {
        const auto& rc = kReceptacleClasses[rng.below(std::size(kReceptacleClasses))];
        add(rc.name);
    }

    HouseState state;
    for (const auto& rc : kReceptacleClasses) {
        for (int i = 1; i <= counts[rc.name]; ++i) {
            Receptacle r;
            r.cls = rc.name;
            r.name = r.cls + " " + std::to_string(i);
            r.openable = rc.openable;
            r.open = false;
            state.receptacles.push_back(std::move(r));
        }
    }

    std::map<std::string, int> next_number;
    auto fresh = [&](const std::string& cls) { return cls + " " + std::to_string(++next_number[cls]); };
    int n_objects = 0;

    next_number[oc.name] = rng.range(0, 2);
    for (int i = 0; i < (kind == TaskKind::PutTwo ? 2 : 1); ++i) {
        std::vector<Receptacle*> preferred, allowed;
        for (auto& r : state.receptacles) {
            if (r.cls == target) continue;
            allowed.push_back(&r);
            if (std::find(oc.priority.begin(), oc.priority.end(), r.cls) != oc.priority.end())
                preferred.push_back(&r);
        }
        Receptacle* where = (!preferred.empty() && rng.unit() < 0.7) ? pick(preferred) : pick(allowed);
        where->contents.push_back(fresh(oc.name));
        ++n_objects;
    }
    if (kind == TaskKind::Examine) {
        state.find(lamp_host + " 1")->contents.push_back("desklamp 1");
        ++n_objects;
    }
    const int n_target_objects = rng.range(8, 20);
    while (n_objects < n_target_objects) {
        const auto& other = pick(object_classes());
        if (other.name == oc.name) continue;
        state.receptacles[rng.below(state.receptacles.size())].contents.push_back(fresh(other.name));
        ++n_objects;
    }
    for (auto& r : state.receptacles) {
        for (std::size_t i = r.contents.size(); i > 1; --i)
            std::swap(r.contents[i - 1], r.contents[rng.below(i)]);
    }

    GridTask task{kind, oc.name, target, make_instruction(kind, oc.name, target)};
    return {std::move(state), std::move(task)};
}

std::string initial_observation(const HouseState& state) {
    std::vector<std::string> names;
    for (const auto& r : state.receptacles) names.push_back(r.name);
    return "You are in the middle of a room. Looking quickly around you, you see " + listing(names) + ".";
}

bool task_satisfied(const HouseState& state, const GridTask& task) {
    if (task.kind == TaskKind::Examine) return state.examined;
    const std::set<std::string>* processed = task.kind == TaskKind::Clean  ? &state.cleaned
                                             : task.kind == TaskKind::Heat ? &state.heated
                                             : task.kind == TaskKind::Cool ? &state.cooled
                                                                           : nullptr;
    int delivered = 0;
    for (const auto& r : state.receptacles) {
        if (r.cls != task.target_class) continue;
        for (const auto& o : r.contents)
            if (class_of(o) == task.object_class && (!processed || processed->count(o))) ++delivered;
    }
    return delivered >= task.required_count();
}

StepOutcome env_step(const HouseState& state, const GridTask& task, std::string_view action) {
    auto parsed = parse_grid_action(action);
    if (!parsed) throw ValidationError("unparseable action '" + std::string(action) + "'");
    const GridAction& a = *parsed;

    StepOutcome out{state, "Nothing happens.", false, false};
    HouseState& s = out.state;
    auto finish = [&] {
        out.success = task_satisfied(s, task);
        out.done = out.success;
        return out;
    };
    if (task_satisfied(state, task)) {
        out.done = out.success = true;
        return out;
    }

    Receptacle* here = s.location.empty() ? nullptr : s.find(s.location);
    auto accessible = [](const Receptacle* r) { return r && (!r->openable || r->open); };

    switch (a.verb) {
        case Verb::Look:
            if (!here) {
                out.observation = initial_observation(s);
            } else {
                out.observation = "You are facing the " + here->name + ". Next to it, you see nothing.";
            }
            break;
        case Verb::GoTo: {
            Receptacle* r = s.find(a.receptacle);
            if (!r) break;
            s.location = r->name;
            if (r->openable && !r->open) {
                out.observation = "The " + r->name + " is closed.";
            } else {
                s.visited.insert(r->name);
                out.observation = describe_contents(*r);
            }
            break;
        }
        case Verb::Open:
            if (!here || here->name != a.receptacle || !here->openable || here->open) break;
            here->open = true;
            s.visited.insert(here->name);
            out.observation = "You open the " + here->name + ". " + describe_contents(*here);
            break;
        case Verb::Take: {
            if (s.holding || !accessible(here) || here->name != a.receptacle) break;
            auto it = std::find(here->contents.begin(), here->contents.end(), a.object);
            if (it == here->contents.end() || class_of(a.object) == "desklamp") break;
            here->contents.erase(it);
            s.holding = a.object;
            out.observation = "You pick up the " + a.object + " from the " + here->name + ".";
            break;
        }
        case Verb::Put:
            if (s.holding != a.object || !accessible(here) || here->name != a.receptacle) break;
            here->contents.push_back(a.object);
            s.holding.reset();
            out.observation = "You put the " + a.object + " in/on the " + here->name + ".";
            break;
        case Verb::Clean:
        case Verb::Heat:
        case Verb::Cool: {
            const char* need = a.verb == Verb::Clean ? "sinkbasin" : a.verb == Verb::Heat ? "microwave" : "fridge";
            const char* verb = a.verb == Verb::Clean ? "clean" : a.verb == Verb::Heat ? "heat" : "cool";
            if (s.holding != a.object || !here || here->name != a.receptacle || here->cls != need) break;
            auto& set = a.verb == Verb::Clean ? s.cleaned : a.verb == Verb::Heat ? s.heated : s.cooled;
            set.insert(a.object);
            out.observation = std::string("You ") + verb + " the " + a.object + " using the " + here->name + ".";
            break;
        }
        case Verb::Use: {
            if (!here || class_of(a.object) != "desklamp") break;
            if (std::find(here->contents.begin(), here->contents.end(), a.object) == here->contents.end()) break;
            if (task.kind == TaskKind::Examine && s.holding && class_of(*s.holding) == task.object_class)
                s.examined = true;
            out.observation = "You turn on the " + a.object + ".";
            break;
        }
    }
    return finish();
}

std::string expert_policy(const HouseState& state, const GridTask& task) {
    return plan_next(belief_from_state(state, task)).action.str();
}

ExpertRun run_expert(std::uint64_t seed, TaskKind kind, int max_steps) {
    auto [state, task] = generate_task(seed, kind);
    ExpertRun run;
    auto& traj = run.trajectory;
    traj.task.task_id = task_id(seed, kind);
    traj.task.instruction = task.instruction;
    traj.task.domain_tag = "gridhouse";
    traj.task.meta = {{"kind", to_string(kind)}};

    std::string obs = initial_observation(state);
    for (int t = 0; t < max_steps; ++t) {
        Belief belief = belief_from_state(state, task);
        Plan plan = plan_next(belief);
        corpus::Step step;
        step.index = t;
        step.observation = obs;
        step.action = plan.action.str();
        run.thoughts.push_back(compose_thought(belief, plan.action));
        traj.steps.push_back(step);
        StepOutcome next = env_step(state, task, step.action);
        state = std::move(next.state);
        obs = std::move(next.observation);
        if (next.success) {
            run.success = true;
            break;
        }
    }
    traj.success = run.success;
    return run;
}

corpus::Memory build_memory(const std::vector<std::uint64_t>& seeds, const std::vector<TaskKind>& kinds) {
    corpus::Memory memory;
    for (std::uint64_t seed : seeds) {
        for (TaskKind kind : kinds) {
            ExpertRun run = run_expert(seed, kind);
            if (!run.success)
                throw ValidationError("expert failed on " + run.trajectory.task.task_id);
            memory.add_trajectory(std::move(run.trajectory));
        }
    }
    return memory;
}

}  // namespace trad::world
