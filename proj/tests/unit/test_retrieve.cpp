#include "doctest.h"
#include "reference.hpp"

#include "trad/error.hpp"
#include "trad/retrieve.hpp"

using namespace trad;

namespace {

std::shared_ptr<const embed::Embedder> hash(std::size_t dim) { return std::make_shared<embed::HashEmbedder>(dim); }

corpus::Trajectory traj(const std::string& id, const std::string& instruction, int steps) {
    corpus::Trajectory t;
    t.task = {id, instruction, "test", {}};
    for (int i = 0; i < steps; ++i) t.steps.push_back({i, "o", "look", {}});
    return t;
}

}  // namespace

TEST_CASE("trajectory retrieval finds an identical instruction") {
    corpus::Memory m;
    m.add_trajectory(traj("a", "put a clean mug in cabinet", 1));
    m.add_trajectory(traj("b", "heat some egg and put it in garbagecan", 1));
    m.add_trajectory(traj("c", "look at book under the desklamp", 1));
    auto idx = retrieve::MemoryIndex::build(m, hash(256));
    auto hits = retrieve::retrieve_trajectories(m, idx, {"q", "heat some egg and put it in garbagecan", "test", {}}, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].trajectory_id == "b");
    CHECK(hits[0].score == doctest::Approx(1.0));
    CHECK(retrieve::retrieve_trajectories(m, idx, {"q", "x", "test", {}}, 10).size() == 3);
}

TEST_CASE("trajectory retrieval over 20 tasks matches brute force") {
    std::mt19937_64 rng(5);
    corpus::Memory m;
    for (int i = 0; i < 20; ++i) m.add_trajectory(traj("t" + std::to_string(100 + i), reference::random_phrase(rng), 1));
    auto idx = retrieve::MemoryIndex::build(m, hash(64));
    for (int trial = 0; trial < 50; ++trial) {
        corpus::TaskSpec q{"q", reference::random_phrase(rng), "test", {}};
        std::vector<std::pair<reference::ExactCosine, std::string>> all;
        for (const auto& [id, t] : m.trajectories())
            all.emplace_back(reference::exact_cosine(retrieve::trajectory_key_text(q),
                                                     retrieve::trajectory_key_text(t.task), 64), id);
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
            int c = reference::compare(x.first, y.first);
            return c != 0 ? c > 0 : x.second < y.second;
        });
        auto hits = retrieve::retrieve_trajectories(m, idx, q, 3);
        REQUIRE(hits.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(hits[i].trajectory_id == all[i].second);
    }
}

TEST_CASE("key text includes meta pairs in key order") {
    CHECK(retrieve::trajectory_key_text({"x", "book a flight", "web", {{"website", "sky"}, {"domain", "travel"}}}) ==
          "book a flight\ndomain: travel\nwebsite: sky");
}

TEST_CASE("step retrieval: exact thought match scores one") {
    corpus::Memory m;
    m.add_trajectory(traj("a", "i", 2));
    m.annotate("a", 0, "Now I find a mug 1. Next, I need to take it.");
    m.annotate("a", 1, "Now I take a mug 1. Next, I need to go to shelf 1.");
    auto idx = retrieve::MemoryIndex::build(m, hash(256));
    auto hits = retrieve::retrieve_steps(m, idx, "Now I take a mug 1. Next, I need to go to shelf 1.", 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].trajectory_id == "a");
    CHECK(hits[0].step_index == 1);
    CHECK(hits[0].score == doctest::Approx(1.0));
}

TEST_CASE("step retrieval keeps at most one step per trajectory") {
    corpus::Memory m;
    m.add_trajectory(traj("a", "i", 2));
    m.add_trajectory(traj("b", "i", 1));
    m.annotate("a", 0, "open the fridge now");
    m.annotate("a", 1, "open the fridge");
    m.annotate("b", 0, "open a drawer");
    auto idx = retrieve::MemoryIndex::build(m, hash(256));
    auto hits = retrieve::retrieve_steps(m, idx, "open the fridge", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].trajectory_id == "a");
    CHECK(hits[0].step_index == 1);
    CHECK(hits[1].trajectory_id == "b");
}

TEST_CASE("step retrieval preconditions") {
    corpus::Memory m;
    m.add_trajectory(traj("a", "i", 2));
    m.annotate("a", 0, "x");
    auto idx = retrieve::MemoryIndex::build(m, hash(64));
    CHECK_THROWS_AS(retrieve::retrieve_steps(m, idx, "x", 1), ValidationError);
    m.annotate("a", 1, "y");
    CHECK_THROWS_WITH_AS(retrieve::retrieve_steps(m, idx, "x", 1), doctest::Contains("not built"), ValidationError);
    idx = retrieve::MemoryIndex::build(m, hash(64));
    CHECK(retrieve::retrieve_steps(m, idx, "x", 0).empty());
}

TEST_CASE("step retrieval equals the exhaustive two-phase oracle") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        corpus::Memory m = reference::random_memory(rng, 10, 20);
        auto idx = retrieve::MemoryIndex::build(m, hash(64));
        const std::string q = reference::random_phrase(rng);
        auto got = retrieve::retrieve_steps(m, idx, q, 3);
        auto want = reference::retrieve_steps(m, q, 64, 3);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].trajectory_id == want[i].trajectory_id);
            CHECK(got[i].step_index == want[i].step_index);
            CHECK(std::fabs(got[i].score - want[i].score) <= 1e-12);
            CHECK(got[i].thought == m.annotation(got[i].trajectory_id, got[i].step_index)->thought);
        }
    }
}
