#include "doctest.h"
#include "reference.hpp"

#include "trad/align.hpp"
#include "trad/error.hpp"

using namespace trad;
using align::ExpansionConfig;

namespace {

corpus::Memory five_step_memory() {
    corpus::Memory m;
    for (const char* id : {"a", "b"}) {
        corpus::Trajectory t;
        t.task = {id, std::string("task ") + id, "test", {}};
        for (int i = 0; i < 5; ++i) t.steps.push_back({i, "o" + std::to_string(i), "a" + std::to_string(i), {}});
        m.add_trajectory(t);
        for (int i = 0; i < 5; ++i) m.annotate(id, i, std::string(id) + " thought " + std::to_string(i));
    }
    return m;
}

ExpansionConfig cfg(int b, int f) {
    ExpansionConfig c;
    c.b = b;
    c.f = f;
    return c;
}

std::vector<std::string> marks(const align::DemoSequence& d) {
    std::vector<std::string> out;
    for (const auto& it : d.items) out.push_back(it.mark);
    return out;
}

align::EpisodeSnapshot episode(int t) {
    align::EpisodeSnapshot e;
    e.task = {"q", "query task", "test", {}};
    for (int i = 0; i <= t; ++i) e.observations.push_back("obs" + std::to_string(i));
    for (int i = 0; i < t; ++i) e.actions.push_back("act" + std::to_string(i));
    return e;
}

}  // namespace

TEST_CASE("order marks are bare offsets") {
    CHECK(align::order_mark(0) == "[Step 0]");
    CHECK(align::order_mark(-1) == "[Step -1]");
    CHECK(align::order_mark(3) == "[Step 3]");
}

TEST_CASE("temporal expansion windows") {
    auto m = five_step_memory();
    CHECK(marks(align::temporal_expand(m, {"a", 2, 0.5, ""}, cfg(0, 0))) == std::vector<std::string>{"[Step 0]"});
    CHECK(marks(align::temporal_expand(m, {"a", 2, 0.5, ""}, cfg(1, 1))) ==
          std::vector<std::string>{"[Step -1]", "[Step 0]", "[Step 1]"});
    CHECK(marks(align::temporal_expand(m, {"a", 4, 0.5, ""}, cfg(0, 2))) == std::vector<std::string>{"[Step 0]"});
    auto d = align::temporal_expand(m, {"b", 1, 0.25, ""}, cfg(2, 1));
    REQUIRE(d.items.size() == 3);
    CHECK(d.items[0].step.index == 0);
    CHECK(d.items[0].thought == std::optional<std::string>("b thought 0"));
    CHECK(d.anchor_score == 0.25);
    CHECK(d.task.task_id == "b");
    auto bare = cfg(1, 1);
    bare.include_demo_thoughts = false;
    CHECK_FALSE(align::temporal_expand(m, {"a", 2, 0.5, ""}, bare).items[1].thought.has_value());
    CHECK_THROWS_AS(align::temporal_expand(m, {"zz", 0, 0.5, ""}, cfg(0, 0)), ValidationError);
}

TEST_CASE("history alignment keeps the last B+F pairs") {
    auto e = episode(5);
    auto h = align::align_history(e.observations, e.actions, cfg(0, 2));
    REQUIRE(h.size() == 2);
    CHECK(h[0].observation == std::optional<std::string>("obs3"));
    CHECK(h[1].action == "act4");
    CHECK(align::align_history(e.observations, e.actions, cfg(0, 0)).empty());
    auto one = episode(1);
    CHECK(align::align_history(one.observations, one.actions, cfg(1, 2)).size() == 1);
    CHECK_THROWS_AS(align::align_history({"o"}, {"a"}, cfg(0, 1)), ValidationError);
}

TEST_CASE("single-step history keeps actions only") {
    auto e = episode(3);
    auto c = cfg(0, 1);
    c.mode = align::HistoryMode::SingleStep;
    auto h = align::align_history(e.observations, e.actions, c);
    REQUIRE(h.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK_FALSE(h[i].observation.has_value());
        CHECK(h[i].action == "act" + std::to_string(i));
    }
}

TEST_CASE("aligned context") {
    auto m = five_step_memory();
    auto e = episode(2);
    auto none = align::build_aligned_context(m, {}, e, cfg(0, 2));
    CHECK(none.demos.empty());
    CHECK(none.current_observation == "obs2");
    CHECK(none.history.size() == 2);

    auto ctx = align::build_aligned_context(m, {{"a", 1, 0.9, ""}, {"b", 3, 0.7, ""}}, e, cfg(0, 1));
    REQUIRE(ctx.demos.size() == 2);
    CHECK(ctx.demos[0].anchor_score == 0.7);
    CHECK(ctx.demos[1].anchor_score == 0.9);
    CHECK(ctx.demo_step_count() == 4);

    auto desc = cfg(0, 1);
    desc.demo_order = align::DemoOrder::DescendingScore;
    CHECK(align::build_aligned_context(m, {{"a", 1, 0.9, ""}, {"b", 3, 0.7, ""}}, e, desc).demos[0].anchor_score == 0.9);

    auto no_ha = cfg(0, 2);
    no_ha.history_alignment = false;
    CHECK(align::build_aligned_context(m, {}, e, no_ha).history.empty());
    auto no_rom = cfg(0, 2);
    no_rom.order_marks = false;
    CHECK_FALSE(align::build_aligned_context(m, {}, e, no_rom).show_marks);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(cfg(-1, 0).validate(), ValidationError);
    CHECK_THROWS_AS(cfg(0, ExpansionConfig::kMaxExtent + 1).validate(), ValidationError);
    auto c = cfg(0, 0);
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(align::history_mode_from_string("single-step") == align::HistoryMode::SingleStep);
    CHECK_THROWS_AS(align::history_mode_from_string("both"), UsageError);
}
