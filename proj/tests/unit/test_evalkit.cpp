#include "doctest.h"

#include "trad/error.hpp"
#include "trad/evalkit.hpp"
#include "trad/util.hpp"

#include "json.hpp"

#include <numeric>

using namespace trad;
using evalkit::SweepSpec;

namespace {

std::vector<corpus::Trajectory> fixture_dataset() {
    std::vector<corpus::Trajectory> out;
    const auto fixture = corpus::load_memory(TRAD_FIXTURE_DIR "/replay_fixture.jsonl");
    for (const auto& [id, t] : fixture.trajectories())
        out.push_back(t);
    return out;
}

std::vector<std::vector<std::string>> fixture_predictions() {
    return nlohmann::json::parse(util::read_file(TRAD_FIXTURE_DIR "/replay_predictions.json"))
        .get<std::vector<std::vector<std::string>>>();
}

// One-sided permutation p-value of mean(a) - mean(b) over every relabelling.
double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> all(a);
    all.insert(all.end(), b.begin(), b.end());
    const double total = std::accumulate(all.begin(), all.end(), 0.0);
    auto diff = [&](double sum_a) {
        return sum_a / double(a.size()) - (total - sum_a) / double(b.size());
    };
    const double observed = diff(std::accumulate(a.begin(), a.end(), 0.0));
    std::vector<bool> pick(all.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(a.size()), true);
    int n = 0, extreme = 0;
    std::sort(pick.begin(), pick.end(), std::greater<>());
    do {
        double s = 0;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (pick[i]) s += all[i];
        ++n;
        extreme += diff(s) >= observed - 1e-12;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return double(extreme) / n;
}

agents::EpisodeRecord record(const std::string& kind, bool success) {
    agents::EpisodeRecord r;
    r.task.task_id = "gh-" + kind;
    r.task.meta = {{"kind", kind}};
    r.success = success;
    return r;
}

}  // namespace

TEST_CASE("mean and sample standard deviation") {
    auto s = evalkit::mean_std({0.96, 0.94, 0.95});
    CHECK(s.mean == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(s.std == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(evalkit::mean_std({0.5}).std == 0.0);
}

TEST_CASE("Welch t-test against frozen values") {
    // Reference values computed independently (scipy.stats.ttest_ind, equal_var=False).
    auto r = evalkit::t_test({0.96, 0.97, 0.95}, {0.93, 0.94, 0.94});
    CHECK(r.t == doctest::Approx(3.500000000000004).epsilon(1e-9));
    CHECK(r.p == doctest::Approx(0.03565266267641837).epsilon(1e-9));
    CHECK(r.df == doctest::Approx(3.2).epsilon(1e-9));
    auto u = evalkit::t_test({0.5, 0.6, 0.7, 0.65}, {0.4, 0.45, 0.3});
    CHECK(u.t == doctest::Approx(3.733643283161719).epsilon(1e-9));
    CHECK(u.p == doctest::Approx(0.01493258372386909).epsilon(1e-9));
}

TEST_CASE("Welch direction agrees with a permutation test") {
    const std::vector<double> a{0.96, 0.97, 0.95}, b{0.93, 0.94, 0.94};
    auto r = evalkit::t_test(a, b);
    CHECK(r.t > 0);
    CHECK(permutation_p(a, b) == doctest::Approx(1.0 / 20));
    CHECK(evalkit::t_test(b, a).t < 0);
    CHECK(permutation_p(b, a) == doctest::Approx(1.0));
}

TEST_CASE("t-test edge cases") {
    auto same = evalkit::t_test({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3});
    CHECK(same.p == doctest::Approx(1.0));
    auto degenerate = evalkit::t_test({1, 1, 1}, {0, 0, 0});
    CHECK(degenerate.degenerate);
    CHECK(degenerate.p == 0.0);
    CHECK(evalkit::t_test({1, 1}, {1, 1}).p == 1.0);
    CHECK_THROWS_AS(evalkit::t_test({1}, {1, 2}), ValidationError);
}

TEST_CASE("step scoring") {
    corpus::Step gold{0, "[5] <input> From", "TYPE [5] [Boston]", {{"gold_element_id", "5"}}};
    CHECK(evalkit::score_step("TYPE [5] [Boston]", gold).full);
    CHECK(evalkit::score_step("type [5] [boston]", gold).element);
    auto wrong_value = evalkit::score_step("TYPE [5] [Denver]", gold);
    CHECK(wrong_value.element);
    CHECK_FALSE(wrong_value.full);
    CHECK_FALSE(evalkit::score_step("CLICK [6]", gold).element);
    CHECK_FALSE(evalkit::score_step("", gold).element);
}

TEST_CASE("hand-counted replay fixture") {
    auto data = fixture_dataset();
    REQUIRE(data.size() == 3);
    auto m = evalkit::score_predictions(data, fixture_predictions());
    CHECK(std::fabs(m.ele_acc - 0.7) <= 1e-9);
    CHECK(std::fabs(m.step_sr - 0.6) <= 1e-9);
    CHECK(std::fabs(m.sr - 1.0 / 3.0) <= 1e-9);

    std::vector<std::vector<std::string>> perfect;
    for (const auto& t : data) {
        perfect.emplace_back();
        for (const auto& s : t.steps) perfect.back().push_back(s.action);
    }
    auto p = evalkit::score_predictions(data, perfect);
    CHECK(p.ele_acc == 1.0);
    CHECK(p.step_sr == 1.0);
    CHECK(p.sr == 1.0);
    CHECK_THROWS_WITH_AS(evalkit::score_predictions({}, {}), doctest::Contains("no trajectories"), ValidationError);
    CHECK_NOTHROW(evalkit::validate_dataset(data));
    data[0].steps[0].meta.clear();
    CHECK_THROWS_AS(evalkit::validate_dataset(data), ValidationError);
}

TEST_CASE("success rate with per-kind breakdown") {
    std::vector<agents::EpisodeRecord> recs;
    for (int i = 0; i < 100; ++i) recs.push_back(record(i % 2 ? "put" : "heat", i >= 3));
    auto m = evalkit::compute_sr(recs);
    CHECK(m.sr == doctest::Approx(0.97));
    std::size_t ok = 0, total = 0;
    for (const auto& [kind, pair] : m.per_kind) {
        ok += pair.first;
        total += pair.second;
    }
    CHECK(ok == 97);
    CHECK(total == 100);
    CHECK_FALSE(m.has_step_metrics);
}

TEST_CASE("held-out task list") {
    auto tasks = evalkit::held_out_tasks(1000, 20);
    CHECK(tasks.size() == 120);
    std::map<world::TaskKind, int> per_kind;
    for (const auto& t : tasks) {
        ++per_kind[t.kind];
        CHECK(t.seed >= 1000);
        CHECK(t.seed < 1020);
    }
    for (auto [k, n] : per_kind) CHECK(n == 20);
}

TEST_CASE("sweep parsing") {
    auto f = evalkit::parse_sweep("F=0..4");
    CHECK(f.parameter == SweepSpec::Parameter::F);
    CHECK(f.values == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(evalkit::parse_sweep("K=1..5").values.size() == 5);
    CHECK(evalkit::parse_sweep("B=1,3").values == std::vector<int>{1, 3});
    std::vector<std::string> warnings;
    CHECK(evalkit::parse_sweep("F=1,1,2", &warnings).values == std::vector<int>{1, 2});
    CHECK(warnings.size() == 1);
    CHECK(evalkit::parse_sweep("components").parameter == SweepSpec::Parameter::Components);
    CHECK_THROWS(evalkit::parse_sweep("Z=1..2"));
    CHECK_THROWS(evalkit::parse_sweep("K=0..2"));
    CHECK_THROWS(evalkit::parse_sweep("F=3..1"));
}

TEST_CASE("component sweep points") {
    auto spec = evalkit::parse_sweep("components");
    spec.base.expansion.b = 1;
    spec.base.expansion.f = 2;
    std::string label;
    auto te = evalkit::sweep_point(spec, 1, label);
    CHECK(label == "w/o-TE");
    CHECK(te.expansion.b == 0);
    CHECK(te.expansion.f == 0);
    auto rom = evalkit::sweep_point(spec, 2, label);
    CHECK(label == "w/o-ROM");
    CHECK_FALSE(rom.expansion.order_marks);
    auto ha = evalkit::sweep_point(spec, 3, label);
    CHECK(label == "w/o-HA");
    CHECK_FALSE(ha.expansion.history_alignment);
    auto full = evalkit::sweep_point(spec, 0, label);
    CHECK(label == "full");
    CHECK(full.expansion.f == 2);
}

TEST_CASE("sweep csv layout") {
    evalkit::SweepRow grid{"trad", "gridhouse", "F=2", {0, 1}, {}};
    grid.metrics.sr = 0.95;
    evalkit::SweepRow replay{"trad", "cross-task", "K=3", {0}, {}};
    replay.metrics.has_step_metrics = true;
    replay.metrics.ele_acc = 0.7;
    replay.metrics.step_sr = 0.6;
    replay.metrics.sr = 1.0 / 3.0;
    CHECK(evalkit::rows_to_csv({grid, replay}) ==
          "algorithm,split,param,seed,ele_acc,step_sr,sr\n"
          "trad,gridhouse,F=2,0;1,,,0.950000\n"
          "trad,cross-task,K=3,0,0.700000,0.600000,0.333333\n");
}
