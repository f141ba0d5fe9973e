#include "doctest.h"

#include "trad/error.hpp"
#include "trad/prompt.hpp"

using namespace trad;
using prompt::Grammar;

namespace {

const prompt::PromptTemplate& grid() { return prompt::default_template(Grammar::GridHouse); }

corpus::AnnotatedTrajectory exemplar() {
    corpus::AnnotatedTrajectory a;
    a.trajectory.task = {"ex", "put some spraybottle on toilet.", "gridhouse", {}};
    a.trajectory.steps = {{0, "You are in the middle of a room.", "go to cabinet 1", {}},
                          {1, "On the cabinet 1, you see a spraybottle 2.", "take spraybottle 2 from cabinet 1", {}}};
    a.thoughts = {"I need a spraybottle.", "Now I find a spraybottle 2. Next, I need to take it."};
    return a;
}

align::AlignedContext marked_context() {
    align::AlignedContext ctx;
    ctx.task = {"q", "put some soapbar on toilet.", "gridhouse", {}};
    align::DemoSequence d;
    d.task = exemplar().trajectory.task;
    for (int off : {-1, 0, 1}) {
        align::DemoItem it{off, align::order_mark(off), {off + 1, "obs " + std::to_string(off), "look", {}}, "t"};
        d.items.push_back(it);
    }
    ctx.demos.push_back(d);
    ctx.history = {{std::string("first obs"), "go to cabinet 2"}};
    ctx.current_observation = "On the cabinet 2, you see a soapbar 1.";
    ctx.current_thought = "Now I find a soapbar 1. Next, I need to take it.";
    return ctx;
}

std::string user_text(const std::vector<prompt::ChatMessage>& ms) {
    std::string s;
    for (const auto& m : ms)
        if (m.role == "user") s += m.content + "\n";
    return s;
}

}  // namespace

TEST_CASE("render substitutes and drops unset sections") {
    CHECK(prompt::render("a {{x}} b", {{"x", "1"}}) == "a 1 b");
    CHECK(prompt::render("{{#m}}[{{m}}] {{/m}}obs", {}) == "obs");
    CHECK(prompt::render("{{#m}}[{{m}}] {{/m}}obs", {{"m", ""}}) == "obs");
    CHECK(prompt::render("{{#m}}[{{m}}] {{/m}}obs", {{"m", "Step 0"}}) == "[Step 0] obs");
    CHECK_THROWS_WITH_AS(prompt::render("{{missing}}", {}), doctest::Contains("unresolved placeholder"),
                         ValidationError);
}

TEST_CASE("template files") {
    std::string text = "notes\n@@ grammar\nweb\n@@ step\nobs: {{o}}\n\n";
    for (const char* name : {"action_space", "system_prepare", "system_thought", "system_action", "rom_note",
                             "demo_intro", "demo_header", "prepare_step", "query_header", "previous_actions",
                             "thought_cue", "prepare_cue", "action_cue"})
        text += std::string("@@ ") + name + "\n" + name + "\n";
    CHECK_THROWS_WITH_AS(prompt::PromptTemplate::parse("t", text), doctest::Contains("missing section corrective"),
                         ValidationError);
    auto t = prompt::PromptTemplate::parse("t", text + "@@ corrective\nagain\n");
    CHECK(t.grammar() == Grammar::Web);
    CHECK(t.section("step") == "obs: {{o}}");
    CHECK_THROWS_AS(t.section("nope"), ValidationError);
    CHECK(grid().grammar() == Grammar::GridHouse);
    CHECK(prompt::default_template(Grammar::Web).grammar() == Grammar::Web);
}

TEST_CASE("thought prompt") {
    prompt::EpisodeView ep;
    ep.task = {"q", "put some soapbar on toilet.", "gridhouse", {}};
    ep.observations = {"You are in the middle of a room.", "On the cabinet 2, you see a soapbar 1."};
    ep.actions = {"go to cabinet 2"};
    auto none = prompt::render_thought_prompt(grid(), {}, ep);
    CHECK(none.front().role == "system");
    CHECK(user_text(none).find("Example") == std::string::npos);
    auto two = prompt::render_thought_prompt(grid(), {exemplar(), exemplar()}, ep);
    const std::string text = user_text(two);
    CHECK(text.find("think: Now I find a spraybottle 2") != std::string::npos);
    CHECK(text.find("act: go to cabinet 1") != std::string::npos);
    CHECK(text.find("Example 1") < text.find("Example 2"));
    CHECK(two == prompt::render_thought_prompt(grid(), {exemplar(), exemplar()}, ep));
    const std::string& q = two.back().content;
    CHECK(q.substr(q.size() - 6) == "think:");
}

TEST_CASE("preparation prompt") {
    corpus::Trajectory target = exemplar().trajectory;
    CHECK_THROWS_WITH_AS(prompt::render_preparation_prompt(grid(), {}, target, 0), doctest::Contains("exemplar"),
                         ValidationError);
    auto p = prompt::render_preparation_prompt(grid(), {exemplar()}, target, 1);
    const std::string last = p.back().content;
    CHECK(last.find("act: take spraybottle 2 from cabinet 1\nthink:") != std::string::npos);
    CHECK(p == prompt::render_preparation_prompt(grid(), {exemplar()}, target, 1));
    CHECK_THROWS_AS(prompt::render_preparation_prompt(grid(), {exemplar()}, target, 2), ValidationError);
}

TEST_CASE("action prompt with order marks") {
    auto ctx = marked_context();
    auto p = prompt::render_action_prompt(grid(), ctx);
    std::string all;
    for (const auto& m : p) all += m.content;
    for (const char* mark : {"[Step -1]", "[Step 0]", "[Step 1]"}) CHECK(all.find(mark) != std::string::npos);
    CHECK(p.front().content.find("coarse relative position") != std::string::npos);
    const std::string& q = p.back().content;
    CHECK(q.find("think: Now I find a soapbar 1") != std::string::npos);
    CHECK(q.substr(q.size() - 4) == "act:");
    CHECK(q.find("[Step -1]\nobs: first obs") != std::string::npos);
}

TEST_CASE("action prompt without demos omits the mark note") {
    auto ctx = marked_context();
    ctx.demos.clear();
    auto p = prompt::render_action_prompt(grid(), ctx);
    CHECK(p.front().content.find("coarse relative position") == std::string::npos);
    CHECK(p.back().content.find("[Step") == std::string::npos);
}

TEST_CASE("single-step action prompt shows no previous observations") {
    auto ctx = marked_context();
    ctx.mode = align::HistoryMode::SingleStep;
    ctx.history = {{std::nullopt, "go to cabinet 2"}, {std::nullopt, "open cabinet 2"}};
    auto p = prompt::render_action_prompt(grid(), ctx);
    const std::string q = p.back().content;
    CHECK(q.find("previous actions:\ngo to cabinet 2\nopen cabinet 2") != std::string::npos);
    CHECK(q.find("first obs") == std::string::npos);
    ctx.history.clear();
    CHECK(prompt::render_action_prompt(grid(), ctx).back().content.find("previous actions:\nNone") !=
          std::string::npos);
}

TEST_CASE("action parsing") {
    CHECK(prompt::parse_action("`CLICK [896]` because it is the search box", Grammar::Web) == "CLICK [896]");
    CHECK(prompt::parse_action("`type [12] [New  York]`", Grammar::Web) == "TYPE [12] [New York]");
    CHECK(prompt::parse_action("act: go to cabinet 1", Grammar::GridHouse) == "go to cabinet 1");
    CHECK(prompt::parse_action("think: hmm\n> act:  take mug 1 from  desk 2", Grammar::GridHouse) ==
          "take mug 1 from desk 2");
    try {
        prompt::parse_action("I think we should wait", Grammar::GridHouse);
        FAIL("expected NoParse");
    } catch (const OutputParseError& e) {
        CHECK(e.kind() == OutputParseError::Kind::NoParse);
    }
    try {
        prompt::parse_action("act: fly to the moon", Grammar::GridHouse);
        FAIL("expected InvalidAction");
    } catch (const OutputParseError& e) {
        CHECK(e.kind() == OutputParseError::Kind::InvalidAction);
    }
    CHECK_THROWS_AS(prompt::parse_action("`CLICK [1] [x]`", Grammar::Web), OutputParseError);
}

TEST_CASE("thought parsing") {
    CHECK(prompt::parse_thought("think: I am now in/on: toilet 1") == "I am now in/on: toilet 1");
    CHECK(prompt::parse_thought("reason: I have to find: a flight") == "I have to find: a flight");
    CHECK(prompt::parse_thought("think: a\nact: look") == "a");
    try {
        prompt::parse_thought("");
        FAIL("expected EmptyThought");
    } catch (const OutputParseError& e) {
        CHECK(e.kind() == OutputParseError::Kind::EmptyThought);
    }
    CHECK_THROWS_AS(prompt::parse_thought("think:   "), OutputParseError);
}

TEST_CASE("web actions") {
    auto a = prompt::parse_web_action("SELECT [77] [June 10]");
    REQUIRE(a);
    CHECK(a->op == "SELECT");
    CHECK(a->element_id == "77");
    CHECK(a->value == "June 10");
    CHECK(a->str() == "SELECT [77] [June 10]");
    CHECK_FALSE(prompt::parse_web_action("TYPE [77]"));
    CHECK_FALSE(prompt::parse_web_action("HOVER [77]"));
}

TEST_CASE("prompt hash is content addressed") {
    std::vector<prompt::ChatMessage> a{{"user", "x"}}, b{{"user", "y"}}, c{{"system", "x"}};
    CHECK(prompt::prompt_hash(a) == prompt::prompt_hash(a));
    CHECK(prompt::prompt_hash(a) != prompt::prompt_hash(b));
    CHECK(prompt::prompt_hash(a) != prompt::prompt_hash(c));
}
