#include "trad/agents.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace trad::agents {

using json = nlohmann::json;

namespace {

const char* kAlgorithmNames[] = {"trad",          "tr-only",       "synapse",        "synapse-react",
                                 "react-random",  "react-fixed",   "react-relevant", "no-retrieval"};

std::uint64_t episode_seed(std::uint64_t seed, const corpus::TaskSpec& task) {
    return util::mix_seed(seed, util::fnv1a64(task.task_id));
}

// k distinct draws from [0, n) in draw order.
std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, util::SplitMix64& rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    pool.resize(k);
    return pool;
}

}  // namespace

std::string to_string(Algorithm a) { return kAlgorithmNames[static_cast<int>(a)]; }

Algorithm algorithm_from_string(std::string_view s) {
    for (Algorithm a : kAllAlgorithms)
        if (to_string(a) == s) return a;
    std::vector<std::string> names(std::begin(kAlgorithmNames), std::end(kAlgorithmNames));
    throw UsageError("unknown agent '" + std::string(s) + "'; valid: " + util::join(names, ", "));
}

AgentConfig AgentConfig::normalized() const {
    AgentConfig c = *this;
    if (c.algorithm == Algorithm::TrOnly) {
        c.expansion.b = 0;
        c.expansion.f = 0;
    }
    return c;
}

void AgentConfig::validate() const {
    expansion.validate();
    backend.validate();
    if (thought_backend) thought_backend->validate();
    embedder.validate();
    if (max_episode_steps < 0) throw ValidationError("max_episode_steps must be >= 0");
    if (retry_on_parse_error < 0) throw ValidationError("retry_on_parse_error must be >= 0");
}

namespace {

json backend_json(const backend::BackendSpec& b) {
    return {{"kind", backend::to_string(b.kind)},
            {"endpoint", b.endpoint},
            {"model", b.model},
            {"temperature", b.temperature},
            {"max_retries", b.max_retries},
            {"timeout_ms", b.timeout.count()},
            {"max_in_flight", b.max_in_flight},
            {"oracle_threshold", b.oracle_threshold}};
}

backend::BackendSpec backend_from_json(const json& j) {
    backend::BackendSpec b;
    b.kind = backend::backend_kind_from_string(j.value("kind", std::string("oracle")));
    b.endpoint = j.value("endpoint", b.endpoint);
    b.model = j.value("model", b.model);
    b.temperature = j.value("temperature", b.temperature);
    b.max_retries = j.value("max_retries", b.max_retries);
    b.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(b.timeout.count())));
    b.max_in_flight = j.value("max_in_flight", b.max_in_flight);
    b.oracle_threshold = j.value("oracle_threshold", b.oracle_threshold);
    return b;
}

json config_json(const AgentConfig& c) {
    const auto& e = c.expansion;
    json j{{"algorithm", to_string(c.algorithm)},
           {"K", e.k},
           {"B", e.b},
           {"F", e.f},
           {"mode", align::to_string(e.mode)},
           {"include_demo_thoughts", e.include_demo_thoughts},
           {"order_marks", e.order_marks},
           {"history_alignment", e.history_alignment},
           {"demo_order", e.demo_order == align::DemoOrder::AscendingScore ? "ascending" : "descending"},
           {"backend", backend_json(c.backend)},
           {"thought_backend", c.thought_backend ? backend_json(*c.thought_backend) : json(nullptr)},
           {"embedder",
            {{"kind", embed::to_string(c.embedder.kind)},
             {"dimension", c.embedder.dimension},
             {"endpoint", c.embedder.endpoint},
             {"model", c.embedder.model}}},
           {"max_episode_steps", c.max_episode_steps},
           {"retry_on_parse_error", c.retry_on_parse_error},
           {"seed", c.seed},
           {"fixed_demos", c.fixed_demos}};
    return j;
}

}  // namespace

std::string AgentConfig::snapshot_json() const { return config_json(*this).dump(); }

AgentConfig config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad agent config: ") + e.what());
    }
    AgentConfig c;
    try {
        if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
        c.expansion.k = j.value("K", c.expansion.k);
        c.expansion.b = j.value("B", c.expansion.b);
        c.expansion.f = j.value("F", c.expansion.f);
        if (j.contains("mode")) c.expansion.mode = align::history_mode_from_string(j["mode"].get<std::string>());
        c.expansion.include_demo_thoughts = j.value("include_demo_thoughts", c.expansion.include_demo_thoughts);
        c.expansion.order_marks = j.value("order_marks", c.expansion.order_marks);
        c.expansion.history_alignment = j.value("history_alignment", c.expansion.history_alignment);
        if (j.value("demo_order", std::string("ascending")) == "descending")
            c.expansion.demo_order = align::DemoOrder::DescendingScore;
        if (j.contains("backend")) c.backend = backend_from_json(j["backend"]);
        if (j.contains("thought_backend") && !j["thought_backend"].is_null())
            c.thought_backend = backend_from_json(j["thought_backend"]);
        if (j.contains("embedder")) {
            const auto& e = j["embedder"];
            c.embedder.kind = embed::embedder_kind_from_string(e.value("kind", std::string("hash-local")));
            c.embedder.dimension = e.value("dimension", c.embedder.dimension);
            c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
            c.embedder.model = e.value("model", c.embedder.model);
        }
        c.max_episode_steps = j.value("max_episode_steps", c.max_episode_steps);
        c.retry_on_parse_error = j.value("retry_on_parse_error", c.retry_on_parse_error);
        c.seed = j.value("seed", c.seed);
        c.fixed_demos = j.value("fixed_demos", c.fixed_demos);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad agent config: ") + e.what());
    }
    return c;
}

std::string EpisodeRecord::to_jsonl() const {
    std::string out;
    for (const auto& s : steps) {
        json hits = json::array();
        for (const auto& h : s.traj_hits) hits.push_back({{"trajectory_id", h.trajectory_id}, {"score", h.score}});
        json step_hits = json::array();
        for (const auto& h : s.step_hits)
            step_hits.push_back({{"trajectory_id", h.trajectory_id}, {"step_index", h.step_index}, {"score", h.score}});
        json j{{"type", "step"},
               {"task_id", task.task_id},
               {"step", s.step},
               {"thought", s.thought ? json(*s.thought) : json(nullptr)},
               {"traj_hits", hits},
               {"step_hits", step_hits},
               {"thought_prompt_hash", s.thought_prompt_hash},
               {"prompt_hash", s.prompt_hash},
               {"demo_steps", s.demo_steps},
               {"raw_completion", s.raw_completion},
               {"parsed_action", s.parsed_action},
               {"parse_retries", s.parse_retries},
               {"fallback", s.fallback},
               {"parse_error", s.parse_error}};
        out += j.dump() + "\n";
    }
    json summary{{"type", "summary"},
                 {"task_id", task.task_id},
                 {"instruction", task.instruction},
                 {"meta", task.meta},
                 {"success", success},
                 {"steps_taken", steps_taken},
                 {"completed", completed},
                 {"error", error},
                 {"config", config.empty() ? json(nullptr) : json::parse(config)}};
    out += summary.dump() + "\n";
    return out;
}

// ---------------------------------------------------------------- GridHouse

GridHouseEnv::GridHouseEnv(std::uint64_t seed, world::TaskKind kind) : seed_(seed), kind_(kind) {
    reset();
    spec_.task_id = world::task_id(seed, kind);
    spec_.instruction = task_.instruction;
    spec_.domain_tag = "gridhouse";
    spec_.meta = {{"kind", world::to_string(kind)}};
}

std::string GridHouseEnv::reset() {
    std::tie(state_, task_) = world::generate_task(seed_, kind_);
    return world::initial_observation(state_);
}

Environment::Outcome GridHouseEnv::step(const std::string& action) {
    auto next = world::env_step(state_, task_, action);
    state_ = std::move(next.state);
    return {next.observation, next.done, next.success};
}

// -------------------------------------------------------------------- Agent

Agent::Agent(const corpus::Memory& memory, const retrieve::MemoryIndex& index, AgentConfig cfg,
             const prompt::PromptTemplate& tpl)
    : Agent(memory, index, cfg, tpl, nullptr, nullptr) {}

Agent::Agent(const corpus::Memory& memory, const retrieve::MemoryIndex& index, AgentConfig cfg,
             const prompt::PromptTemplate& tpl, std::shared_ptr<const backend::Backend> action_backend,
             std::shared_ptr<const backend::Backend> thought_backend)
    : memory_(memory), index_(index), cfg_(cfg.normalized()), tpl_(tpl) {
    cfg_.validate();
    if (memory_.traj_index_id != index_.traj_id() || memory_.step_index_id != index_.step_id())
        throw ValidationError("memory index is stale; rebuild it after annotating");
    action_backend_ = action_backend ? std::move(action_backend)
                                     : std::shared_ptr<const backend::Backend>(backend::make_backend(cfg_.backend));
    if (thought_backend) {
        thought_backend_ = std::move(thought_backend);
    } else if (cfg_.thought_backend) {
        thought_backend_ = backend::make_backend(*cfg_.thought_backend);
    } else {
        thought_backend_ = action_backend_;
    }
}

std::vector<corpus::AnnotatedTrajectory> Agent::as_annotated(const std::vector<std::string>& ids) const {
    std::vector<corpus::AnnotatedTrajectory> out;
    for (const auto& id : ids) {
        corpus::AnnotatedTrajectory a{memory_.trajectory(id), {}};
        for (const auto& s : a.trajectory.steps) {
            const auto* ann = memory_.annotation(id, s.index);
            if (!ann) break;
            a.thoughts.push_back(ann->thought);
        }
        out.push_back(std::move(a));
    }
    return out;
}

align::DemoSequence Agent::whole_trajectory(const std::string& id, bool with_thoughts) const {
    const auto& traj = memory_.trajectory(id);
    align::DemoSequence seq;
    seq.task = traj.task;
    seq.trajectory_id = id;
    for (const auto& s : traj.steps) {
        align::DemoItem item{s.index, align::order_mark(s.index), s, std::nullopt};
        if (with_thoughts) {
            if (const auto* a = memory_.annotation(id, s.index)) item.thought = a->thought;
        }
        seq.items.push_back(std::move(item));
    }
    return seq;
}

std::string Agent::generate_thought(const std::vector<corpus::AnnotatedTrajectory>& demos, const EpisodeState& state,
                                    StepLog& log) const {
    prompt::EpisodeView view{state.task, state.observations, state.actions, state.thoughts, cfg_.expansion.mode};
    auto messages = prompt::render_thought_prompt(tpl_, demos, view);
    log.thought_prompt_hash = prompt::prompt_hash(messages);
    for (int attempt = 0;; ++attempt) {
        auto reply = thought_backend_->complete(messages);
        try {
            return prompt::parse_thought(reply.content);
        } catch (const OutputParseError& e) {
            if (attempt >= cfg_.retry_on_parse_error) {
                log.parse_error = std::string("thought: ") + e.what();
                return {};
            }
        }
    }
}

void Agent::predict_action(const align::AlignedContext& ctx, StepLog& log) const {
    auto messages = prompt::render_action_prompt(tpl_, ctx);
    log.prompt_hash = prompt::prompt_hash(messages);
    log.demo_steps = ctx.demo_step_count();
    if (cfg_.keep_prompts) log.action_prompt = messages;
    for (int attempt = 0;; ++attempt) {
        auto reply = action_backend_->complete(messages);
        log.raw_completion = reply.content;
        try {
            log.parsed_action = prompt::parse_action(reply.content, tpl_.grammar());
            return;
        } catch (const OutputParseError& e) {
            log.parse_error = e.what();
            if (attempt >= cfg_.retry_on_parse_error) break;
            ++log.parse_retries;
            messages.push_back({"assistant", reply.content});
            messages.push_back(prompt::corrective_message(tpl_));
        }
    }
    // GridHouse falls back to a harmless no-op; web replay abstains.
    log.fallback = true;
    log.parsed_action = tpl_.grammar() == prompt::Grammar::GridHouse ? "look" : "";
}

StepLog Agent::decide(const EpisodeState& state) const {
    StepLog log;
    log.step = static_cast<int>(state.actions.size());
    const auto& ex = cfg_.expansion;
    const auto k = static_cast<std::size_t>(ex.k);

    align::EpisodeSnapshot snap{state.task, state.observations, state.actions, std::nullopt};
    auto think = [&](const std::vector<std::string>& demo_ids) {
        log.thought = generate_thought(as_annotated(demo_ids), state, log);
        snap.current_thought = log.thought;
    };
    auto hit_ids = [&] {
        std::vector<std::string> ids;
        for (const auto& h : log.traj_hits) ids.push_back(h.trajectory_id);
        return ids;
    };
    // Whole-trajectory prompting: every demo step and the whole episode so far.
    auto whole_context = [&](const std::vector<std::pair<std::string, double>>& demos, bool with_thoughts) {
        align::AlignedContext ctx;
        ctx.task = state.task;
        ctx.mode = ex.mode;
        ctx.show_marks = false;
        ctx.current_observation = state.observations.back();
        ctx.current_thought = snap.current_thought;
        ctx.history = align::full_history(state.observations, state.actions, ex.mode);
        for (const auto& [id, score] : demos) {
            ctx.demos.push_back(whole_trajectory(id, with_thoughts));
            ctx.demos.back().anchor_score = score;
        }
        align::order_demos(ctx.demos, ex.demo_order);
        return ctx;
    };
    auto scored = [&] {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& h : log.traj_hits) out.emplace_back(h.trajectory_id, h.score);
        return out;
    };
    std::vector<std::string> all_ids;
    for (const auto& [id, t] : memory_.trajectories()) all_ids.push_back(id);

    align::AlignedContext ctx;
    switch (cfg_.algorithm) {
        case Algorithm::Trad:
        case Algorithm::TrOnly: {
            log.traj_hits = retrieve::retrieve_trajectories(memory_, index_, state.task, k);
            think(hit_ids());
            log.step_hits = retrieve::retrieve_steps(memory_, index_, *log.thought, k);
            ctx = align::build_aligned_context(memory_, log.step_hits, snap, ex);
            break;
        }
        case Algorithm::Synapse:
        case Algorithm::SynapseReact: {
            log.traj_hits = retrieve::retrieve_trajectories(memory_, index_, state.task, k);
            const bool react = cfg_.algorithm == Algorithm::SynapseReact;
            if (react) think(hit_ids());
            ctx = whole_context(scored(), react);
            break;
        }
        case Algorithm::ReactRandom: {
            util::SplitMix64 rng(episode_seed(cfg_.seed, state.task));
            if (ex.mode == align::HistoryMode::FullHistory) {
                std::vector<std::pair<std::string, double>> picks;
                for (auto i : sample_distinct(all_ids.size(), k, rng)) picks.emplace_back(all_ids[i], 0.0);
                std::vector<std::string> ids;
                for (const auto& p : picks) ids.push_back(p.first);
                think(ids);
                ctx = whole_context(picks, true);
            } else {
                // Single-step prompts show steps, not trajectories: random anchors.
                util::SplitMix64 step_rng(util::mix_seed(rng.next(), static_cast<std::uint64_t>(log.step)));
                std::vector<retrieve::RetrievalHit> anchors;
                std::vector<std::string> ids;
                for (auto i : sample_distinct(all_ids.size(), k, step_rng)) {
                    const auto& traj = memory_.trajectory(all_ids[i]);
                    if (traj.steps.empty()) continue;
                    int anchor = static_cast<int>(step_rng.below(traj.steps.size()));
                    anchors.push_back({all_ids[i], anchor, 0.0, {}});
                    ids.push_back(all_ids[i]);
                }
                think(ids);
                ctx = align::build_aligned_context(memory_, anchors, snap, ex);
            }
            break;
        }
        case Algorithm::ReactFixed: {
            std::vector<std::string> ids = cfg_.fixed_demos;
            if (ids.empty()) {
                auto kind = state.task.meta.find("kind");
                if (kind == state.task.meta.end())
                    throw ValidationError("react-fixed needs fixed_demos outside GridHouse");
                for (const auto& [id, t] : memory_.trajectories()) {
                    auto tk = t.task.meta.find("kind");
                    if (tk != t.task.meta.end() && tk->second == kind->second && ids.size() < k) ids.push_back(id);
                }
            }
            std::vector<std::pair<std::string, double>> picks;
            for (const auto& id : ids) picks.emplace_back(id, 0.0);
            think(ids);
            ctx = whole_context(picks, true);
            break;
        }
        case Algorithm::ReactRelevant: {
            log.traj_hits = retrieve::retrieve_trajectories(memory_, index_, state.task, k);
            think(hit_ids());
            util::SplitMix64 rng(
                util::mix_seed(episode_seed(cfg_.seed, state.task), static_cast<std::uint64_t>(log.step)));
            std::vector<retrieve::RetrievalHit> anchors;
            for (const auto& h : log.traj_hits) {
                const auto& traj = memory_.trajectory(h.trajectory_id);
                if (traj.steps.empty()) continue;
                anchors.push_back({h.trajectory_id, static_cast<int>(rng.below(traj.steps.size())), h.score, {}});
            }
            ctx = align::build_aligned_context(memory_, anchors, snap, ex);
            break;
        }
        case Algorithm::NoRetrieval:
            ctx = whole_context({}, false);
            break;
    }
    predict_action(ctx, log);
    return log;
}

EpisodeRecord Agent::run_episode(Environment& env) const {
    EpisodeRecord rec;
    rec.config = cfg_.snapshot_json();
    rec.task = env.task();
    EpisodeState state;
    state.task = env.task();
    state.observations.push_back(env.reset());
    try {
        for (int t = 0; t < cfg_.max_episode_steps && !state.done; ++t) {
            StepLog log = decide(state);
            auto outcome = env.step(log.parsed_action);
            state.actions.push_back(log.parsed_action);
            state.thoughts.push_back(log.thought.value_or(""));
            state.observations.push_back(outcome.observation);
            state.done = outcome.done;
            state.success = outcome.success;
            rec.steps.push_back(std::move(log));
        }
    } catch (const BackendError& e) {
        rec.completed = false;
        rec.error = e.what();
    }
    rec.success = state.success;
    rec.steps_taken = static_cast<int>(rec.steps.size());
    return rec;
}

EpisodeRecord Agent::replay_episode(const corpus::Trajectory& gold) const {
    EpisodeRecord rec;
    rec.config = cfg_.snapshot_json();
    rec.task = gold.task;
    EpisodeState state;
    state.task = gold.task;
    for (const auto& step : gold.steps) {
        state.observations.push_back(step.observation);
        StepLog log = decide(state);
        state.actions.push_back(step.action);
        state.thoughts.push_back(log.thought.value_or(""));
        rec.steps.push_back(std::move(log));
    }
    rec.steps_taken = static_cast<int>(rec.steps.size());
    return rec;
}

// --------------------------------------------------------------- Preparation

void prepare_thoughts(corpus::Memory& memory, const std::vector<corpus::AnnotatedTrajectory>& exemplars,
                      const backend::Backend& backend, const prompt::PromptTemplate& tpl, align::HistoryMode mode,
                      const std::optional<std::string>& save_path, const Progress& progress) {
    if (memory.empty()) {
        if (save_path) corpus::save_memory(memory, *save_path);
        return;
    }
    if (exemplars.empty()) throw ValidationError("thought preparation needs at least one exemplar");

    std::vector<std::pair<std::string, int>> todo;
    for (const auto& [id, traj] : memory.trajectories())
        for (const auto& s : traj.steps)
            if (!memory.has_annotation(id, s.index)) todo.emplace_back(id, s.index);
    const std::size_t total = memory.step_count();
    std::size_t done = total - todo.size();

    auto fail_note = [&] {
        if (save_path) corpus::save_memory(memory, *save_path);
        return " (" + std::to_string(done) + " of " + std::to_string(total) + " steps annotated" +
               (save_path ? ", progress saved; rerun to resume)" : ")");
    };
    for (const auto& [id, index] : todo) {
        try {
            auto messages = prompt::render_preparation_prompt(tpl, exemplars, memory.trajectory(id), index, mode);
            auto reply = backend.complete(messages);
            memory.annotate(id, index, prompt::parse_thought(reply.content));
        } catch (const BackendError& e) {
            throw BackendError(e.kind(), std::string(e.what()) + fail_note());
        } catch (const OutputParseError& e) {
            throw OutputParseError(e.kind(), id + " step " + std::to_string(index) + ": " + e.what() + fail_note());
        }
        ++done;
        if (progress) progress(done, total);
    }
    if (save_path) corpus::save_memory(memory, *save_path);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first) first = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace trad::agents
