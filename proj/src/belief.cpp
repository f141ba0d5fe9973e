#include "trad/belief.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"

#include <algorithm>
#include <regex>

namespace trad::world {

namespace {

std::vector<std::string> parse_listing(std::string text) {
    std::vector<std::string> out;
    text = util::trim(text);
    if (text == "nothing") return out;
    for (std::string item : util::split(text, ", ")) {
        item = util::trim(item);
        if (util::starts_with(item, "and ")) item = item.substr(4);
        if (util::starts_with(item, "a ")) item = item.substr(2);
        out.push_back(item);
    }
    return out;
}

const std::set<std::string>* processed_set(const Belief& b) {
    switch (b.task.kind) {
        case TaskKind::Clean: return &b.cleaned;
        case TaskKind::Heat: return &b.heated;
        case TaskKind::Cool: return &b.cooled;
        default: return nullptr;
    }
}

std::string first_instance(const Belief& b, const std::string& cls) {
    for (const auto& r : b.receptacles)
        if (class_of(r) == cls) return r;
    return {};
}

// Unseen receptacles, priority classes first, then the rest in listing order.
// Receptacles of the target class are never searched.
std::vector<std::string> candidates(const Belief& b, const std::vector<std::string>& priority) {
    std::vector<std::string> out;
    auto eligible = [&](const std::string& r) {
        return !b.contents.count(r) && class_of(r) != b.task.target_class &&
               std::find(out.begin(), out.end(), r) == out.end();
    };
    for (const auto& cls : priority)
        for (const auto& r : b.receptacles)
            if (class_of(r) == cls && eligible(r)) out.push_back(r);
    for (const auto& r : b.receptacles)
        if (eligible(r)) out.push_back(r);
    return out;
}

std::string present_classes(const Belief& b, const std::vector<std::string>& priority) {
    std::vector<std::string> out;
    for (const auto& cls : priority) {
        if (cls == b.task.target_class) continue;
        if (!first_instance(b, cls).empty()) out.push_back(cls);
    }
    return out.empty() ? "any receptacle" : util::join(out, ", ");
}

std::string past_participle(TaskKind kind) {
    switch (kind) {
        case TaskKind::Clean: return "cleaned";
        case TaskKind::Heat: return "heated";
        case TaskKind::Cool: return "cooled";
        default: return "taken";
    }
}

std::string plan_phrase(const Belief& b) {
    const std::string target = first_instance(b, b.task.target_class);
    switch (b.task.kind) {
        case TaskKind::Put: return "put it in/on " + target;
        case TaskKind::PutTwo:
            return "put it in/on " + target + ", then find and take another " + b.task.object_class +
                   ", then put it in/on " + target;
        case TaskKind::Examine: return "find and use a desklamp";
        default:
            return process_verb(b.task.kind) + " it with " + first_instance(b, appliance_class(b.task.kind)) +
                   ", then put it in/on " + target;
    }
}

Plan make(Phase phase, GridAction action, std::string goal) {
    return Plan{phase, std::move(action), std::move(goal)};
}

}  // namespace

bool Belief::processed(const std::string& object) const {
    const auto* set = processed_set(*this);
    return set && set->count(object);
}

std::optional<std::string> Belief::lamp() const {
    for (const auto& r : receptacles) {
        auto it = contents.find(r);
        if (it == contents.end()) continue;
        for (const auto& o : it->second)
            if (class_of(o) == "desklamp") return o;
    }
    return std::nullopt;
}

std::optional<std::string> Belief::where(const std::string& object) const {
    for (const auto& [r, items] : contents)
        if (std::find(items.begin(), items.end(), object) != items.end()) return r;
    return std::nullopt;
}

Belief belief_from_state(const HouseState& state, const GridTask& task) {
    Belief b;
    b.task = TaskInfo{task.kind, task.object_class, task.target_class};
    for (const auto& r : state.receptacles) {
        b.receptacles.push_back(r.name);
        if (state.visited.count(r.name)) b.contents[r.name] = r.contents;
        if (r.cls == task.target_class)
            for (const auto& o : r.contents)
                if (class_of(o) == task.object_class) ++b.delivered;
    }
    b.location = state.location;
    if (const Receptacle* here = state.find(state.location)) b.location_closed = here->openable && !here->open;
    b.held = state.holding;
    b.cleaned = state.cleaned;
    b.heated = state.heated;
    b.cooled = state.cooled;
    return b;
}

Belief belief_from_transcript(std::string_view instruction, const std::vector<std::string>& observations,
                              const std::vector<std::string>& actions) {
    static const std::string kRoom = "You are in the middle of a room. Looking quickly around you, you see ";
    static const std::regex kOn(R"(^On the ([a-z]+ [0-9]+), you see (.*)\.$)");
    static const std::regex kClosed(R"(^The ([a-z]+ [0-9]+) is closed\.$)");
    static const std::regex kOpenIn(R"(^(?:You open the [a-z]+ [0-9]+\. )?The ([a-z]+ [0-9]+) is open\. In it, you see (.*)\.$)");
    static const std::regex kPick(R"(^You pick up the ([a-z]+ [0-9]+) from the ([a-z]+ [0-9]+)\.$)");
    static const std::regex kPut(R"(^You put the ([a-z]+ [0-9]+) in/on the ([a-z]+ [0-9]+)\.$)");
    static const std::regex kProcess(R"(^You (clean|heat|cool) the ([a-z]+ [0-9]+) using the ([a-z]+ [0-9]+)\.$)");

    auto info = parse_instruction(instruction);
    if (!info) throw ValidationError("unrecognised GridHouse instruction '" + std::string(instruction) + "'");
    if (observations.empty() || !util::starts_with(observations.front(), kRoom))
        throw ValidationError("transcript does not open with a room description");
    if (actions.size() + 1 != observations.size())
        throw ValidationError("transcript needs one action fewer than observations");

    Belief b;
    b.task = *info;
    std::string first = observations.front().substr(kRoom.size());
    if (!first.empty() && first.back() == '.') first.pop_back();
    b.receptacles = parse_listing(first);

    std::smatch m;
    for (std::size_t i = 1; i < observations.size(); ++i) {
        const std::string& o = observations[i];
        if (util::starts_with(o, "You are in the middle of a room.")) {
            b.location.clear();
            b.location_closed = false;
        } else if (std::regex_match(o, m, kOn) || std::regex_match(o, m, kOpenIn)) {
            b.location = m[1].str();
            b.location_closed = false;
            b.contents[b.location] = parse_listing(m[2].str());
        } else if (std::regex_match(o, m, kClosed)) {
            b.location = m[1].str();
            b.location_closed = true;
        } else if (std::regex_match(o, m, kPick)) {
            auto& items = b.contents[m[2].str()];
            auto it = std::find(items.begin(), items.end(), m[1].str());
            if (it != items.end()) items.erase(it);
            b.held = m[1].str();
            if (class_of(m[1].str()) == b.task.object_class && class_of(m[2].str()) == b.task.target_class)
                --b.delivered;
        } else if (std::regex_match(o, m, kPut)) {
            b.contents[m[2].str()].push_back(m[1].str());
            b.held.reset();
            if (class_of(m[1].str()) == b.task.object_class && class_of(m[2].str()) == b.task.target_class)
                ++b.delivered;
        } else if (std::regex_match(o, m, kProcess)) {
            auto& set = m[1] == "clean" ? b.cleaned : m[1] == "heat" ? b.heated : b.cooled;
            set.insert(m[2].str());
        }
        // "Nothing happens.", lamp and look messages leave the belief unchanged.
    }
    return b;
}

Plan plan_next(const Belief& b) {
    const std::string& cls = b.task.object_class;
    const std::string& loc = b.location;
    const std::string in_on = " in/on ";

    auto open_here = [&] {
        return make(Phase::Open, {Verb::Open, "", loc}, "It is closed. Next, I need to open it.");
    };
    auto idle = [&] {
        return make(Phase::Idle, {Verb::Look, "", ""}, "Nothing is left to check. Next, I need to look around.");
    };

    if (b.held) {
        const std::string& h = *b.held;
        if (class_of(h) != cls) {
            if (loc.empty() || b.location_closed) return idle();
            return make(Phase::Put, {Verb::Put, h, loc},
                        "Now I have " + h + ", which is not needed. Next, I need to put " + h + in_on + loc + ".");
        }
        if (b.task.kind == TaskKind::Examine) {
            auto lamp = b.lamp();
            if (!lamp) {
                if (b.location_closed) return open_here();
                auto cand = candidates(b, lamp_priority());
                if (cand.empty()) return idle();
                return make(Phase::FindLamp, {Verb::GoTo, "", cand.front()},
                            "Now I have taken " + h + ", but I have not found a desklamp. Next, I need to check " +
                                cand.front() + ".");
            }
            std::string lamp_at = *b.where(*lamp);
            if (loc != lamp_at)
                return make(Phase::GotoLamp, {Verb::GoTo, "", lamp_at},
                            "Now I have taken " + h + ". Next, I need to go to " + lamp_at + " and use " + *lamp + ".");
            return make(Phase::UseLamp, {Verb::Use, *lamp, ""},
                        "Now I am at " + lamp_at + " with " + h + ". Next, I need to use " + *lamp + ".");
        }
        if (needs_processing(b.task.kind) && !b.processed(h)) {
            std::string app = first_instance(b, appliance_class(b.task.kind));
            std::string verb = process_verb(b.task.kind);
            if (loc != app)
                return make(Phase::GotoAppliance, {Verb::GoTo, "", app},
                            "Now I have taken " + h + ". Next, I need to go to " + app + " and " + verb + " it.");
            Verb v = b.task.kind == TaskKind::Clean ? Verb::Clean : b.task.kind == TaskKind::Heat ? Verb::Heat : Verb::Cool;
            return make(Phase::Process, {v, h, app},
                        "Now I am at the " + appliance_class(b.task.kind) + ". Next, I need to " + verb + " it here.");
        }
        std::string target = first_instance(b, b.task.target_class);
        if (loc != target)
            return make(Phase::GotoTarget, {Verb::GoTo, "", target},
                        "Now I have " + past_participle(b.task.kind) + " " + h + ". Next, I need to go to " + target +
                            " and put it there.");
        if (b.location_closed) return open_here();
        return make(Phase::Put, {Verb::Put, h, target},
                    "Now I am at the " + b.task.target_class + ". Next, I need to put it here.");
    }

    if (b.location_closed) return open_here();

    // A known instance outside the target class, preferring the current location.
    std::optional<std::pair<std::string, std::string>> found;
    for (const auto& r : b.receptacles) {
        if (class_of(r) == b.task.target_class) continue;
        auto it = b.contents.find(r);
        if (it == b.contents.end()) continue;
        for (const auto& o : it->second) {
            if (class_of(o) != cls) continue;
            if (!found || r == loc) found = std::make_pair(o, r);
            break;
        }
        if (found && found->second == loc) break;
    }
    if (found && found->second == loc)
        return make(Phase::Take, {Verb::Take, found->first, loc},
                    "I have found " + found->first + " here. Next, I need to take it.");
    if (found)
        return make(Phase::GotoFound, {Verb::GoTo, "", found->second},
                    "I have found " + found->first + " in " + found->second + " before. Next, I need to go to " +
                        found->second + ".");

    const auto& priority = search_priority(cls);
    auto cand = candidates(b, priority);
    if (cand.empty()) return idle();
    const std::string& next = cand.front();
    if (loc.empty())
        return make(Phase::Start, {Verb::GoTo, "", next},
                    "To solve the task, I need to find and take a " + cls + ", then " + plan_phrase(b) +
                        ". First I need to find a " + cls + ". A " + cls + " is more likely to appear in " +
                        present_classes(b, priority) + ". I can check one by one, starting with " + next + ".");
    if (class_of(loc) == b.task.target_class && b.delivered > 0)
        return make(Phase::SearchAgain, {Verb::GoTo, "", next},
                    "Now I have put one " + cls + in_on + loc + ". Next, I need to find another " + cls +
                        " and check " + next + ".");
    return make(Phase::Search, {Verb::GoTo, "", next},
                "In " + loc + ", there is no " + cls + ". Next, I need to check " + next + ".");
}

std::string compose_thought(const Belief& b, const GridAction& next) {
    std::vector<std::string> found;
    for (const auto& r : b.receptacles) {
        auto it = b.contents.find(r);
        if (it == b.contents.end()) continue;
        for (const auto& o : it->second) {
            bool critical = class_of(o) == b.task.object_class && class_of(r) != b.task.target_class;
            if (b.task.kind == TaskKind::Examine && class_of(o) == "desklamp") critical = true;
            if (critical) found.push_back(o + " (" + r + ")");
        }
    }
    Plan plan = plan_next(b);
    std::string goal = plan.action == next ? plan.goal : "Next, I need to " + next.str() + ".";
    return "I am now in/on: " + (b.location.empty() ? std::string("the middle of the room") : b.location) +
           " / Critical objects I have found: " + (found.empty() ? std::string("None") : util::join(found, ", ")) +
           " / Objects I have taken: " + (b.held ? *b.held : std::string("None")) + " / " + goal;
}

std::string compose_thought(const Belief& b) { return compose_thought(b, plan_next(b).action); }

}  // namespace trad::world
