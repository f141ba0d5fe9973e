#include "trad/evalkit.hpp"

#include "trad/error.hpp"
#include "trad/prompt.hpp"
#include "trad/util.hpp"
#include "trad/webgen.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>

namespace trad::evalkit {

using json = nlohmann::json;

namespace {

void finish_stats(MetricsReport& r) {
    std::vector<double> ele, step, sr;
    for (const auto& s : r.per_seed) {
        ele.push_back(s.ele_acc);
        step.push_back(s.step_sr);
        sr.push_back(s.sr);
    }
    r.ele_acc_stats = mean_std(ele);
    r.step_sr_stats = mean_std(step);
    r.sr_stats = mean_std(sr);
    r.ele_acc = r.ele_acc_stats.mean;
    r.step_sr = r.step_sr_stats.mean;
    r.sr = r.sr_stats.mean;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string MetricsReport::summary_json() const {
    json seeds = json::array();
    for (const auto& s : per_seed) {
        json j{{"seed", s.seed}, {"sr", s.sr}};
        if (has_step_metrics) {
            j["ele_acc"] = s.ele_acc;
            j["step_sr"] = s.step_sr;
        }
        seeds.push_back(j);
    }
    json kinds = json::object();
    for (const auto& [kind, c] : per_kind)
        kinds[kind] = {{"successes", c.first}, {"episodes", c.second},
                       {"sr", c.second ? static_cast<double>(c.first) / static_cast<double>(c.second) : 0.0}};
    json j{{"sr", sr}, {"sr_std", sr_stats.std}, {"n_trajs", n_trajs}, {"per_seed", seeds}};
    if (has_step_metrics) {
        j["ele_acc"] = ele_acc;
        j["ele_acc_std"] = ele_acc_stats.std;
        j["step_sr"] = step_sr;
        j["step_sr_std"] = step_sr_stats.std;
        j["n_steps"] = n_steps;
    }
    if (!per_kind.empty()) j["per_kind"] = kinds;
    return j.dump(2);
}

StepScore score_step(const std::string& predicted, const corpus::Step& gold) {
    StepScore s;
    auto g = prompt::parse_web_action(gold.action);
    if (!g) throw ValidationError("gold action '" + gold.action + "' is not a web action");
    auto it = gold.meta.find(webgen::kGoldElementKey);
    const std::string gold_id = it != gold.meta.end() ? it->second : g->element_id;
    auto p = prompt::parse_web_action(predicted);
    if (!p) return s;
    s.element = p->element_id == gold_id;
    s.full = s.element && p->op == g->op && p->value == g->value;
    return s;
}

void validate_dataset(const std::vector<corpus::Trajectory>& dataset) {
    for (const auto& t : dataset) {
        for (const auto& s : t.steps) {
            auto a = prompt::parse_web_action(s.action);
            if (!a)
                throw ValidationError(t.id() + " step " + std::to_string(s.index) + ": gold action '" + s.action +
                                      "' does not parse under the web grammar");
            auto it = s.meta.find(webgen::kGoldElementKey);
            if (it == s.meta.end())
                throw ValidationError(t.id() + " step " + std::to_string(s.index) + ": missing gold element id");
            if (it->second != a->element_id)
                throw ValidationError(t.id() + " step " + std::to_string(s.index) +
                                      ": gold element id disagrees with gold action");
        }
    }
}

SeedMetrics score_predictions(const std::vector<corpus::Trajectory>& dataset,
                              const std::vector<std::vector<std::string>>& predictions) {
    if (dataset.empty()) throw ValidationError("no trajectories");
    if (predictions.size() != dataset.size()) throw ValidationError("one prediction list per trajectory expected");
    std::size_t steps = 0, ele = 0, full = 0, trajs_ok = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& gold = dataset[i].steps;
        if (predictions[i].size() != gold.size())
            throw ValidationError("prediction count differs from step count for " + dataset[i].id());
        bool all = true;
        for (std::size_t j = 0; j < gold.size(); ++j) {
            auto s = score_step(predictions[i][j], gold[j]);
            ele += s.element;
            full += s.full;
            all = all && s.full;
        }
        steps += gold.size();
        trajs_ok += all;
    }
    SeedMetrics m;
    m.ele_acc = steps ? static_cast<double>(ele) / static_cast<double>(steps) : 0.0;
    m.step_sr = steps ? static_cast<double>(full) / static_cast<double>(steps) : 0.0;
    m.sr = static_cast<double>(trajs_ok) / static_cast<double>(dataset.size());
    return m;
}

MetricsReport replay_eval(const std::vector<corpus::Trajectory>& dataset, const corpus::Memory& memory,
                          const retrieve::MemoryIndex& index, const agents::AgentConfig& cfg,
                          const prompt::PromptTemplate& tpl, const EvalOptions& opts,
                          std::vector<agents::EpisodeRecord>* records) {
    if (dataset.empty()) throw ValidationError("no trajectories");
    if (cfg.expansion.mode != align::HistoryMode::SingleStep)
        throw ValidationError("replay evaluation needs single-step mode");
    if (opts.seeds.empty()) throw ValidationError("at least one seed is required");
    validate_dataset(dataset);

    MetricsReport report;
    report.has_step_metrics = true;
    report.n_trajs = dataset.size();
    for (const auto& t : dataset) report.n_steps += t.steps.size();
    for (std::uint64_t seed : opts.seeds) {
        agents::AgentConfig c = cfg;
        c.seed = seed;
        agents::Agent agent(memory, index, c, tpl, opts.backend, opts.backend);
        std::vector<agents::EpisodeRecord> recs(dataset.size());
        agents::parallel_for(dataset.size(), opts.workers,
                             [&](std::size_t i) { recs[i] = agent.replay_episode(dataset[i]); });
        std::vector<std::vector<std::string>> predictions;
        for (const auto& r : recs) {
            predictions.emplace_back();
            for (const auto& s : r.steps) predictions.back().push_back(s.parsed_action);
        }
        SeedMetrics m = score_predictions(dataset, predictions);
        m.seed = seed;
        report.per_seed.push_back(m);
        if (records) records->insert(records->end(), recs.begin(), recs.end());
    }
    finish_stats(report);
    return report;
}

MetricsReport compute_sr(const std::vector<agents::EpisodeRecord>& records) {
    if (records.empty()) throw ValidationError("no episode records");
    MetricsReport report;
    std::size_t ok = 0;
    for (const auto& r : records) {
        ok += r.success;
        auto it = r.task.meta.find("kind");
        auto& c = report.per_kind[it == r.task.meta.end() ? std::string("unknown") : it->second];
        c.first += r.success;
        c.second += 1;
    }
    report.n_trajs = records.size();
    SeedMetrics m;
    m.sr = static_cast<double>(ok) / static_cast<double>(records.size());
    report.per_seed.push_back(m);
    finish_stats(report);
    return report;
}

std::vector<GridTaskRef> held_out_tasks(std::uint64_t first_seed, int per_kind) {
    std::vector<GridTaskRef> out;
    for (auto kind : world::kAllKinds)
        for (int i = 0; i < per_kind; ++i) out.push_back({first_seed + static_cast<std::uint64_t>(i), kind});
    return out;
}

MetricsReport gridhouse_eval(const std::vector<GridTaskRef>& tasks, const corpus::Memory& memory,
                             const retrieve::MemoryIndex& index, const agents::AgentConfig& cfg,
                             const prompt::PromptTemplate& tpl, const EvalOptions& opts,
                             std::vector<agents::EpisodeRecord>* records) {
    if (tasks.empty()) throw ValidationError("no tasks");
    if (opts.seeds.empty()) throw ValidationError("at least one seed is required");
    MetricsReport report;
    report.n_trajs = tasks.size();
    for (std::uint64_t seed : opts.seeds) {
        agents::AgentConfig c = cfg;
        c.seed = seed;
        agents::Agent agent(memory, index, c, tpl, opts.backend, opts.backend);
        std::vector<agents::EpisodeRecord> recs(tasks.size());
        agents::parallel_for(tasks.size(), opts.workers, [&](std::size_t i) {
            agents::GridHouseEnv env(tasks[i].seed, tasks[i].kind);
            recs[i] = agent.run_episode(env);
        });
        MetricsReport one = compute_sr(recs);
        SeedMetrics m = one.per_seed.front();
        m.seed = seed;
        report.per_seed.push_back(m);
        for (const auto& [kind, c2] : one.per_kind) {
            report.per_kind[kind].first += c2.first;
            report.per_kind[kind].second += c2.second;
        }
        if (records) records->insert(records->end(), recs.begin(), recs.end());
    }
    finish_stats(report);
    return report;
}

void SweepSpec::validate() const {
    if (parameter == Parameter::Components) {
        if (components.empty()) throw ValidationError("sweep needs at least one component");
        for (const auto& c : components)
            if (c != "full" && c != "w/o-TE" && c != "w/o-ROM" && c != "w/o-HA")
                throw ValidationError("unknown ablation '" + c + "'");
    } else {
        if (values.empty()) throw ValidationError("sweep needs at least one value");
        for (int v : values) {
            if (v < 0) throw ValidationError("sweep values must be non-negative");
            if (parameter == Parameter::K && v < 1) throw ValidationError("K must be at least 1");
        }
    }
}

SweepSpec parse_sweep(const std::string& text, std::vector<std::string>* warnings) {
    SweepSpec spec;
    const std::string s = util::trim(text);
    if (s == "components") {
        spec.parameter = SweepSpec::Parameter::Components;
        return spec;
    }
    static const std::regex kRe(R"(^([FBK])=(.+)$)");
    std::smatch m;
    if (!std::regex_match(s, m, kRe))
        throw UsageError("bad sweep '" + s + "' (expected F=0..4, B=0..4, K=1..5 or components)");
    const char p = m[1].str()[0];
    spec.parameter = p == 'F' ? SweepSpec::Parameter::F : p == 'B' ? SweepSpec::Parameter::B : SweepSpec::Parameter::K;
    static const std::regex kRange(R"(^(\d+)\.\.(\d+)$)");
    static const std::regex kNum(R"(^\d+$)");
    std::set<int> seen;
    for (const auto& raw : util::split(m[2].str(), ",")) {
        const std::string part = util::trim(raw);
        std::smatch r;
        std::vector<int> vals;
        if (std::regex_match(part, r, kRange)) {
            int lo = std::stoi(r[1].str()), hi = std::stoi(r[2].str());
            if (lo > hi) throw UsageError("empty sweep range '" + part + "'");
            for (int v = lo; v <= hi; ++v) vals.push_back(v);
        } else if (std::regex_match(part, kNum)) {
            vals.push_back(std::stoi(part));
        } else {
            throw UsageError("bad sweep value '" + part + "'");
        }
        for (int v : vals) {
            if (seen.insert(v).second) {
                spec.values.push_back(v);
            } else if (warnings) {
                warnings->push_back("duplicate sweep value " + std::to_string(v) + " dropped");
            }
        }
    }
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    return spec;
}

agents::AgentConfig sweep_point(const SweepSpec& spec, std::size_t i, std::string& label) {
    agents::AgentConfig c = spec.base;
    switch (spec.parameter) {
        case SweepSpec::Parameter::F:
            c.expansion.f = spec.values.at(i);
            label = "F=" + std::to_string(c.expansion.f);
            break;
        case SweepSpec::Parameter::B:
            c.expansion.b = spec.values.at(i);
            label = "B=" + std::to_string(c.expansion.b);
            break;
        case SweepSpec::Parameter::K:
            c.expansion.k = spec.values.at(i);
            label = "K=" + std::to_string(c.expansion.k);
            break;
        case SweepSpec::Parameter::Components:
            label = spec.components.at(i);
            if (label == "w/o-TE") {
                c.expansion.b = 0;
                c.expansion.f = 0;
            } else if (label == "w/o-ROM") {
                c.expansion.order_marks = false;
            } else if (label == "w/o-HA") {
                c.expansion.history_alignment = false;
            }
            break;
    }
    return c;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepTarget& target, const corpus::Memory& memory,
                                const retrieve::MemoryIndex& index, const prompt::PromptTemplate& tpl,
                                const EvalOptions& opts) {
    spec.validate();
    const std::size_t n = spec.parameter == SweepSpec::Parameter::Components ? spec.components.size() : spec.values.size();
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        SweepRow row;
        agents::AgentConfig c = sweep_point(spec, i, row.param);
        row.algorithm = agents::to_string(c.algorithm);
        row.split = target.split;
        row.seeds = opts.seeds;
        row.metrics = target.replay.empty() ? gridhouse_eval(target.gridhouse, memory, index, c, tpl, opts)
                                            : replay_eval(target.replay, memory, index, c, tpl, opts);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "algorithm,split,param,seed,ele_acc,step_sr,sr\n";
    for (const auto& r : rows) {
        std::vector<std::string> seeds;
        for (auto s : r.seeds) seeds.push_back(std::to_string(s));
        out += r.algorithm + "," + r.split + "," + r.param + "," + util::join(seeds, ";") + ",";
        if (r.metrics.has_step_metrics) out += fmt(r.metrics.ele_acc) + "," + fmt(r.metrics.step_sr);
        else out += ",";
        out += "," + fmt(r.metrics.sr) + "\n";
    }
    return out;
}

}  // namespace trad::evalkit
