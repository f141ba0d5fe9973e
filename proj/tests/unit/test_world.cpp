#include "doctest.h"

#include "trad/belief.hpp"
#include "trad/error.hpp"
#include "trad/world.hpp"

using namespace trad;
using namespace trad::world;

namespace {

HouseState small_house(const std::string& first, bool with_object) {
    HouseState s;
    Receptacle a{first + " 1", first, false, false, {}};
    if (with_object) a.contents = {"spraybottle 2", "candle 1"};
    s.receptacles = {a, {"toilet 1", "toilet", false, false, {"cloth 1"}},
                     {"drawer 1", "drawer", true, false, {"soapbar 1"}},
                     {"desk 1", "desk", false, false, {"desklamp 1"}}};
    return s;
}

GridTask put_task() { return {TaskKind::Put, "spraybottle", "toilet", make_instruction(TaskKind::Put, "spraybottle", "toilet")}; }

}  // namespace

TEST_CASE("instructions round trip") {
    for (auto kind : kAllKinds) {
        const std::string target = kind == TaskKind::Examine ? "" : "shelf";
        auto info = parse_instruction(make_instruction(kind, "mug", target));
        REQUIRE(info);
        CHECK(info->kind == kind);
        CHECK(info->object_class == "mug");
        CHECK(info->target_class == target);
    }
    CHECK_FALSE(parse_instruction("dance with the mug"));
    CHECK(task_kind_from_string(to_string(TaskKind::PutTwo)) == TaskKind::PutTwo);
}

TEST_CASE("action grammar") {
    CHECK(parse_grid_action("go to cabinet 1")->str() == "go to cabinet 1");
    CHECK(parse_grid_action("  Put mug 1 in shelf 2. ")->str() == "put mug 1 in/on shelf 2");
    CHECK(parse_grid_action("heat egg 1 with microwave 1")->verb == Verb::Heat);
    CHECK(parse_grid_action("use desklamp 1")->object == "desklamp 1");
    CHECK(parse_grid_action("look")->verb == Verb::Look);
    CHECK_FALSE(parse_grid_action("go to cabinet"));
    CHECK_FALSE(parse_grid_action("jump"));
    CHECK(find_entities("On the cabinet 1, you see a mug 2.") == std::vector<std::string>{"cabinet 1", "mug 2"});
    CHECK(is_entity("desk 12"));
    CHECK_FALSE(is_entity("desk"));
    CHECK(class_of("desk 12") == "desk");
}

TEST_CASE("environment semantics") {
    auto s = small_house("countertop", true);
    auto task = put_task();
    auto closed = env_step(s, task, "go to drawer 1");
    CHECK(closed.observation == "The drawer 1 is closed.");
    auto opened = env_step(closed.state, task, "open drawer 1");
    CHECK(opened.observation == "You open the drawer 1. The drawer 1 is open. In it, you see a soapbar 1.");

    CHECK(env_step(s, task, "use desklamp 1").observation == "Nothing happens.");
    CHECK(env_step(s, task, "take spraybottle 2 from countertop 1").observation == "Nothing happens.");
    CHECK_THROWS_AS(env_step(s, task, "fly away"), ValidationError);

    auto at = env_step(s, task, "go to countertop 1");
    auto held = env_step(at.state, task, "take spraybottle 2 from countertop 1");
    CHECK(held.observation == "You pick up the spraybottle 2 from the countertop 1.");
    auto there = env_step(held.state, task, "go to toilet 1");
    auto done = env_step(there.state, task, "put spraybottle 2 in/on toilet 1");
    CHECK(done.observation == "You put the spraybottle 2 in/on the toilet 1.");
    CHECK(done.success);
    CHECK(done.done);
}

TEST_CASE("expert takes four steps when the object is in its first choice") {
    auto task = put_task();
    const std::string first = search_priority("spraybottle").front();
    HouseState s = small_house(first, true);
    std::vector<std::string> actions;
    for (int i = 0; i < 20; ++i) {
        actions.push_back(expert_policy(s, task));
        auto out = env_step(s, task, actions.back());
        s = out.state;
        if (out.success) break;
    }
    CHECK(actions == std::vector<std::string>{"go to " + first + " 1", "take spraybottle 2 from " + first + " 1",
                                              "go to toilet 1", "put spraybottle 2 in/on toilet 1"});
}

TEST_CASE("task generation") {
    for (auto kind : kAllKinds) {
        auto [a, ta] = generate_task(42, kind);
        auto [b, tb] = generate_task(42, kind);
        CHECK(a == b);
        CHECK(ta.instruction == tb.instruction);
    }
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto [s, t] = generate_task(seed, TaskKind::PutTwo);
        int n = 0;
        for (const auto& o : s.all_objects()) n += class_of(o) == t.object_class;
        CHECK(n >= 2);
    }
    CHECK(task_id(7, TaskKind::Heat) == "gh-heat-000007");
}

TEST_CASE("expert solves 1000 seeds of every kind") {
    int failures = 0;
    for (auto kind : kAllKinds)
        for (std::uint64_t seed = 0; seed < 1000; ++seed) failures += !run_expert(seed, kind).success;
    CHECK(failures == 0);
}

TEST_CASE("PutTwo expert delivers both instances") {
    auto run = run_expert(3, TaskKind::PutTwo);
    REQUIRE(run.success);
    int puts = 0;
    for (const auto& s : run.trajectory.steps) puts += parse_grid_action(s.action)->verb == Verb::Put;
    CHECK(puts >= 2);
}

TEST_CASE("memory of ten seeds by six kinds") {
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto m = build_memory(seeds, {kAllKinds.begin(), kAllKinds.end()});
    CHECK(m.trajectories().size() == 60);
    for (const auto& [id, t] : m.trajectories()) CHECK(t.success);
}

TEST_CASE("beliefs read from the transcript match the true state") {
    for (auto kind : kAllKinds) {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto [state, task] = generate_task(seed, kind);
            std::vector<std::string> obs{initial_observation(state)}, acts;
            for (int t = 0; t < 60; ++t) {
                CHECK(belief_from_transcript(task.instruction, obs, acts) == belief_from_state(state, task));
                acts.push_back(expert_policy(state, task));
                auto out = env_step(state, task, acts.back());
                state = out.state;
                obs.push_back(out.observation);
                if (out.success) break;
            }
        }
    }
}

TEST_CASE("thought format") {
    auto run = run_expert(1, TaskKind::Put);
    for (const auto& th : run.thoughts) {
        CHECK(th.rfind("I am now in/on: ", 0) == 0);
        CHECK(th.find(" / Critical objects I have found: ") != std::string::npos);
        CHECK(th.find(" / Objects I have taken: ") != std::string::npos);
    }
    CHECK_THROWS_AS(belief_from_transcript("dance", {"x"}, {}), ValidationError);
}
