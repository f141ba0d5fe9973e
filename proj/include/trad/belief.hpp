#pragma once

// What a GridHouse agent knows, reconstructed either from the true state
// (restricted to what it has seen) or from the text transcript. The expert
// policy, its written thoughts, and the offline oracle backend all reason
// over this one structure, so they agree by construction.

#include "trad/world.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trad::world {

struct Belief {
    TaskInfo task;
    std::vector<std::string> receptacles;
    std::string location;  // empty: middle of the room
    bool location_closed = false;
    std::map<std::string, std::vector<std::string>> contents;  // only receptacles seen
    std::optional<std::string> held;
    std::set<std::string> cleaned, heated, cooled;
    int delivered = 0;

    bool processed(const std::string& object) const;
    std::optional<std::string> lamp() const;
    std::optional<std::string> where(const std::string& object) const;

    bool operator==(const Belief&) const = default;
};

Belief belief_from_state(const HouseState& state, const GridTask& task);

// observations = o_0..o_t, actions = a_0..a_{t-1}. Throws ValidationError when
// the instruction or the opening room description cannot be read.
Belief belief_from_transcript(std::string_view instruction, const std::vector<std::string>& observations,
                              const std::vector<std::string>& actions);

enum class Phase {
    Start,
    Search,
    SearchAgain,
    Open,
    GotoFound,
    Take,
    GotoAppliance,
    Process,
    FindLamp,
    GotoLamp,
    UseLamp,
    GotoTarget,
    Put,
    Idle
};

struct Plan {
    Phase phase = Phase::Idle;
    GridAction action;
    std::string goal;  // the next-goal sentence of the thought
};

Plan plan_next(const Belief& belief);

// "I am now in/on: X / Critical objects I have found: ... / Objects I have
// taken: ... / <goal>". When `next` differs from the planned action the goal
// sentence simply states `next`, so labels stay consistent with expert actions.
std::string compose_thought(const Belief& belief, const GridAction& next);
std::string compose_thought(const Belief& belief);

}  // namespace trad::world
