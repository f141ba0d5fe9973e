#include "doctest.h"
#include "gridhouse_setup.hpp"

#include "trad/agents.hpp"
#include "trad/error.hpp"
#include "trad/retrieve.hpp"
#include "trad/webgen.hpp"

#include <atomic>
#include <mutex>

using namespace trad;
using agents::Agent;
using agents::AgentConfig;
using agents::Algorithm;

namespace {

const prompt::PromptTemplate& grid() { return prompt::default_template(prompt::Grammar::GridHouse); }

// The standard 60-trajectory memory; smaller memories miss some held-out phases.
struct Fixture {
    corpus::Memory memory = setup::annotated_gridhouse_memory(10);
    retrieve::MemoryIndex index = retrieve::MemoryIndex::build(memory, setup::hash_embedder());
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

AgentConfig config(Algorithm a, int b = 0, int f = 2, int k = 2) {
    AgentConfig c;
    c.algorithm = a;
    c.expansion.b = b;
    c.expansion.f = f;
    c.expansion.k = k;
    return c;
}

agents::EpisodeRecord run(const AgentConfig& cfg, std::uint64_t seed, world::TaskKind kind) {
    Agent agent(fixture().memory, fixture().index, cfg, grid());
    agents::GridHouseEnv env(seed, kind);
    return agent.run_episode(env);
}

// Replies from a fixed script, then repeats the last one.
class ScriptedBackend final : public backend::Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    backend::CompletionResponse complete(const std::vector<prompt::ChatMessage>&) const override {
        std::lock_guard<std::mutex> lock(mu_);
        backend::CompletionResponse r;
        r.content = replies_[std::min(next_, replies_.size() - 1)];
        ++next_;
        return r;
    }
    const backend::BackendSpec& spec() const override { return spec_; }

private:
    std::vector<std::string> replies_;
    mutable std::size_t next_ = 0;
    mutable std::mutex mu_;
    backend::BackendSpec spec_;
};

}  // namespace

TEST_CASE("algorithm names") {
    for (auto a : agents::kAllAlgorithms) CHECK(agents::algorithm_from_string(agents::to_string(a)) == a);
    CHECK_THROWS_WITH_AS(agents::algorithm_from_string("gpt"), doctest::Contains("react-random"), UsageError);
}

TEST_CASE("config normalisation and snapshots") {
    auto c = config(Algorithm::TrOnly, 2, 3);
    CHECK(c.normalized().expansion.b == 0);
    CHECK(c.normalized().expansion.f == 0);
    auto t = config(Algorithm::Trad, 1, 3, 4);
    t.seed = 9;
    t.fixed_demos = {"gh-put-000000"};
    t.thought_backend = backend::BackendSpec{};
    auto back = agents::config_from_json(t.snapshot_json());
    CHECK(back.snapshot_json() == t.snapshot_json());
    CHECK(agents::config_from_json("{}").snapshot_json() == AgentConfig{}.snapshot_json());
    auto bad = config(Algorithm::Trad, 0, 0, 0);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("thought preparation") {
    auto oracle = backend::make_backend({});
    corpus::Memory empty;
    agents::prepare_thoughts(empty, {}, *oracle, grid());
    CHECK(empty.empty());

    corpus::Memory one;
    auto run1 = world::run_expert(7, world::TaskKind::Clean);
    one.add_trajectory(run1.trajectory);
    CHECK_THROWS_AS(agents::prepare_thoughts(one, {}, *oracle, grid()), ValidationError);

    agents::prepare_thoughts(one, setup::gridhouse_exemplars(), *oracle, grid());
    CHECK(one.fully_annotated());
    // The oracle's labels agree with the expert's own thoughts.
    for (std::size_t i = 0; i < run1.thoughts.size(); ++i)
        CHECK(one.annotation(run1.trajectory.id(), static_cast<int>(i))->thought == run1.thoughts[i]);
    const auto before = corpus::serialize_memory(one);
    agents::prepare_thoughts(one, setup::gridhouse_exemplars(), *oracle, grid());
    CHECK(corpus::serialize_memory(one) == before);
}

TEST_CASE("thought preparation keeps progress on failure") {
    corpus::Memory m;
    m.add_trajectory(world::run_expert(8, world::TaskKind::Put).trajectory);
    ScriptedBackend flaky({"think: fine", "think: fine", ""});
    try {
        agents::prepare_thoughts(m, setup::gridhouse_exemplars(), flaky, grid());
        FAIL("expected a parse failure");
    } catch (const OutputParseError& e) {
        CHECK(std::string(e.what()).find("2 of") != std::string::npos);
    }
    CHECK(m.annotations().size() == 2);
}

TEST_CASE("stale indexes are refused") {
    corpus::Memory m = fixture().memory;
    auto idx = retrieve::MemoryIndex::build(m, setup::hash_embedder());
    m.add_trajectory(world::run_expert(99, world::TaskKind::Put).trajectory);
    m.traj_index_id.reset();
    CHECK_THROWS_WITH_AS(Agent(m, idx, config(Algorithm::Trad), grid()), doctest::Contains("stale"), ValidationError);
}

TEST_CASE("an isomorphic memory task is solved like the expert") {
    for (auto kind : world::kAllKinds) {
        auto expert = world::run_expert(1, kind);
        auto rec = run(config(Algorithm::Trad), 1, kind);
        CHECK(rec.success);
        REQUIRE(rec.steps.size() == expert.trajectory.steps.size());
        for (std::size_t i = 0; i < rec.steps.size(); ++i)
            CHECK(rec.steps[i].parsed_action == expert.trajectory.steps[i].action);
    }
}

TEST_CASE("held-out tasks finish within the expert's step count plus two") {
    for (auto kind : world::kAllKinds) {
        INFO(world::to_string(kind));
        auto expert = world::run_expert(1000, kind);
        auto rec = run(config(Algorithm::Trad), 1000, kind);
        CHECK(rec.success);
        CHECK(rec.steps_taken <= static_cast<int>(expert.trajectory.steps.size()) + 2);
    }
}

TEST_CASE("step logs show thought, hits and action in order") {
    for (auto a : agents::kAllAlgorithms) {
        auto rec = run(config(a), 1001, world::TaskKind::Heat);
        REQUIRE_FALSE(rec.steps.empty());
        const auto& s = rec.steps.front();
        const bool tr = a == Algorithm::Trad || a == Algorithm::TrOnly;
        CHECK(s.step_hits.empty() == !tr);
        const bool thinks = a != Algorithm::Synapse && a != Algorithm::NoRetrieval;
        CHECK(s.thought.has_value() == thinks);
        CHECK_FALSE(s.prompt_hash.empty());
    }
}

TEST_CASE("trad with no expansion behaves as tr-only") {
    for (std::uint64_t seed = 1000; seed < 1006; ++seed) {
        auto kind = world::kAllKinds[seed % 6];
        auto a = run(config(Algorithm::Trad, 0, 0), seed, kind);
        auto b = run(config(Algorithm::TrOnly, 3, 3), seed, kind);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].prompt_hash == b.steps[i].prompt_hash);
            CHECK(a.steps[i].parsed_action == b.steps[i].parsed_action);
        }
    }
}

TEST_CASE("K larger than the memory still runs") {
    auto rec = run(config(Algorithm::Trad, 0, 2, 100), 1002, world::TaskKind::Put);
    CHECK_FALSE(rec.steps.empty());
    CHECK(rec.steps.front().step_hits.size() == fixture().memory.trajectories().size());
}

TEST_CASE("react-random is seeded") {
    auto c = config(Algorithm::ReactRandom);
    c.seed = 4;
    auto a = run(c, 1003, world::TaskKind::Cool);
    auto b = run(c, 1003, world::TaskKind::Cool);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].prompt_hash == b.steps[i].prompt_hash);
    CHECK(a.to_jsonl() == b.to_jsonl());
}

TEST_CASE("react-fixed defaults to memory trajectories of the same kind") {
    auto c = config(Algorithm::ReactFixed);
    c.keep_prompts = true;
    auto rec = run(c, 1004, world::TaskKind::Examine);
    REQUIRE_FALSE(rec.steps.empty());
    std::string all;
    for (const auto& m : rec.steps.front().action_prompt) all += m.content;
    CHECK(all.find("under the desklamp") != std::string::npos);
    CHECK(rec.steps.front().demo_steps > 0);
}

TEST_CASE("no-retrieval prompts carry no demonstrations") {
    auto c = config(Algorithm::NoRetrieval);
    c.keep_prompts = true;
    auto rec = run(c, 1000, world::TaskKind::Put);
    for (const auto& s : rec.steps) {
        CHECK(s.demo_steps == 0);
        for (const auto& m : s.action_prompt) CHECK(m.content.find("Example 1") == std::string::npos);
    }
}

TEST_CASE("zero step budget fails immediately") {
    auto c = config(Algorithm::Trad);
    c.max_episode_steps = 0;
    auto rec = run(c, 1000, world::TaskKind::Put);
    CHECK_FALSE(rec.success);
    CHECK(rec.steps.empty());
    CHECK(rec.steps_taken == 0);
}

TEST_CASE("unparseable replies are retried, then fall back") {
    auto& f = fixture();
    auto thought = std::make_shared<ScriptedBackend>(std::vector<std::string>{"think: I am lost"});
    auto retry_then_ok = std::make_shared<ScriptedBackend>(std::vector<std::string>{"hmm", "act: look"});
    Agent a(f.memory, f.index, config(Algorithm::Trad), grid(), retry_then_ok, thought);
    agents::EpisodeState st;
    agents::GridHouseEnv env(1000, world::TaskKind::Put);
    st.task = env.task();
    st.observations = {env.reset()};
    auto log = a.decide(st);
    CHECK(log.parsed_action == "look");
    CHECK(log.parse_retries == 1);
    CHECK_FALSE(log.fallback);

    auto never = std::make_shared<ScriptedBackend>(std::vector<std::string>{"no idea"});
    Agent b(f.memory, f.index, config(Algorithm::Trad), grid(), never, thought);
    auto log2 = b.decide(st);
    CHECK(log2.fallback);
    CHECK(log2.parsed_action == "look");
    CHECK(log2.parse_retries == 2);
    CHECK_FALSE(log2.parse_error.empty());
}

TEST_CASE("replay is teacher forced and leaves no environment behind") {
    auto web = webgen::generate_web_corpus(3, 3, 1);
    corpus::Memory memory = web.memory;
    auto exemplars = webgen::reason_exemplars({web.cross_task.front()});
    auto oracle = backend::make_backend({});
    const auto& wtpl = prompt::default_template(prompt::Grammar::Web);
    agents::prepare_thoughts(memory, exemplars, *oracle, wtpl, align::HistoryMode::SingleStep);
    auto idx = retrieve::MemoryIndex::build(memory, setup::hash_embedder());
    auto c = config(Algorithm::Trad, 0, 1, 3);
    c.expansion.mode = align::HistoryMode::SingleStep;
    Agent agent(memory, idx, c, wtpl);
    const auto& gold = web.cross_task.back();
    auto rec = agent.replay_episode(gold);
    CHECK(rec.steps.size() == gold.steps.size());
    CHECK(rec.completed);
}

TEST_CASE("backend failures end the episode as incomplete") {
    class Down final : public backend::Backend {
    public:
        backend::CompletionResponse complete(const std::vector<prompt::ChatMessage>&) const override {
            throw BackendError(BackendError::Kind::Transport, "connection refused");
        }
        const backend::BackendSpec& spec() const override { return spec_; }
        backend::BackendSpec spec_;
    };
    auto down = std::make_shared<Down>();
    Agent a(fixture().memory, fixture().index, config(Algorithm::Trad), grid(), down, down);
    agents::GridHouseEnv env(1000, world::TaskKind::Put);
    auto rec = a.run_episode(env);
    CHECK_FALSE(rec.completed);
    CHECK_FALSE(rec.success);
    CHECK(rec.error.find("connection refused") != std::string::npos);
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<std::atomic<int>> hits(100);
    agents::parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
}
