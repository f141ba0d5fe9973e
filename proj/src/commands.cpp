#include "trad/commands.hpp"

#include "trad/agents.hpp"
#include "trad/error.hpp"
#include "trad/evalkit.hpp"
#include "trad/util.hpp"
#include "trad/webgen.hpp"
#include "trad/world.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace trad::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "trad 0.1.0";
constexpr std::uint64_t kDefaultHeldOutSeed = 1000;
constexpr std::uint64_t kDefaultExemplarSeed = 500;

// ------------------------------------------------------------------ helpers

void ensure_parent(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + p.parent_path().string());
    }
}

void write_output(const std::string& path, const std::string& contents) {
    ensure_parent(path);
    util::write_file(path, contents);
}

std::string file_hash(const std::string& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path);
    return util::hex64(util::fnv1a64(util::read_file(path)));
}

std::string now_utc() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& part : util::split(text, ",")) {
        std::string p = util::trim(part);
        if (p.empty()) continue;
        auto dots = p.find("..");
        try {
            if (dots != std::string::npos) {
                auto lo = std::stoull(p.substr(0, dots)), hi = std::stoull(p.substr(dots + 2));
                if (lo > hi) throw UsageError("empty seed range '" + p + "'");
                for (auto s = lo; s <= hi; ++s) out.push_back(s);
            } else {
                out.push_back(std::stoull(p));
            }
        } catch (const std::logic_error&) {
            throw UsageError("bad seed '" + p + "'");
        }
    }
    if (out.empty()) throw UsageError("empty seed list");
    return out;
}

std::vector<world::TaskKind> parse_kinds(const std::string& text) {
    if (text == "all") return {std::begin(world::kAllKinds), std::end(world::kAllKinds)};
    std::vector<world::TaskKind> out;
    for (const auto& part : util::split(text, ",")) {
        try {
            out.push_back(world::task_kind_from_string(util::trim(part)));
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
    }
    return out;
}

std::vector<corpus::Trajectory> trajectories_of(const corpus::Memory& m) {
    std::vector<corpus::Trajectory> out;
    for (const auto& [id, t] : m.trajectories()) out.push_back(t);
    return out;
}

prompt::PromptTemplate resolve_template(const std::string& name) {
    if (name == "gridhouse") return prompt::default_template(prompt::Grammar::GridHouse);
    if (name == "web") return prompt::default_template(prompt::Grammar::Web);
    return prompt::load_template(name);
}

std::string auto_template(const corpus::Memory& memory) {
    for (const auto& [id, t] : memory.trajectories()) return t.task.domain_tag == "gridhouse" ? "gridhouse" : "web";
    return "gridhouse";
}

corpus::Memory load_annotated(const std::string& path) {
    corpus::Memory m = corpus::load_memory(path);
    if (m.empty()) throw ValidationError(path + ": memory is empty");
    if (!m.fully_annotated()) throw ValidationError(path + ": memory has unannotated steps; run prepare first");
    return m;
}

// Flags shared by the agent-running commands.
struct AgentFlags {
    std::string agent = "trad";
    int k = -1;  // -1: command default
    int b = 0;
    int f = 2;
    std::string backend = "oracle";
    std::string endpoint;
    std::string model;
    std::string thought_model;
    double temperature = 0.0;
    int max_retries = 3;
    double threshold = 0.5;
    std::size_t dim = 256;
    int max_steps = 50;
    int parse_retries = 2;
    std::string fixed_demos;
    bool no_marks = false;
    bool no_history_alignment = false;

    void add(CLI::App* app) {
        app->add_option("--agent", agent, "algorithm")->capture_default_str();
        app->add_option("--K", k, "demonstrations per prompt (default 2 GridHouse, 3 replay)");
        app->add_option("--B", b, "steps before each retrieved step")->capture_default_str();
        app->add_option("--F", f, "steps after each retrieved step")->capture_default_str();
        app->add_option("--backend", backend, "oracle | remote")->capture_default_str();
        app->add_option("--endpoint", endpoint, "chat-completion URL (remote)");
        app->add_option("--model", model, "model name (remote)");
        app->add_option("--thought-model", thought_model, "separate model for thought generation (remote)");
        app->add_option("--temperature", temperature)->capture_default_str();
        app->add_option("--max-retries", max_retries, "transport retries per call")->capture_default_str();
        app->add_option("--oracle-threshold", threshold, "oracle overlap threshold")->capture_default_str();
        app->add_option("--dim", dim, "hash embedding dimension")->capture_default_str();
        app->add_option("--max-steps", max_steps, "episode step limit")->capture_default_str();
        app->add_option("--parse-retries", parse_retries, "corrective retries on unreadable output")->capture_default_str();
        app->add_option("--fixed-demos", fixed_demos, "react-fixed trajectory ids, comma separated");
        app->add_flag("--no-marks", no_marks, "suppress relative order marks");
        app->add_flag("--no-history-alignment", no_history_alignment, "suppress aligned history");
    }

    agents::AgentConfig resolve(int default_k, align::HistoryMode mode) const {
        agents::AgentConfig c;
        c.algorithm = agents::algorithm_from_string(agent);
        c.expansion.k = k < 0 ? default_k : k;
        c.expansion.b = b;
        c.expansion.f = f;
        c.expansion.mode = mode;
        c.expansion.order_marks = !no_marks;
        c.expansion.history_alignment = !no_history_alignment;
        c.backend.kind = backend::backend_kind_from_string(backend);
        c.backend.endpoint = endpoint;
        c.backend.model = model;
        c.backend.temperature = temperature;
        c.backend.max_retries = max_retries;
        c.backend.oracle_threshold = threshold;
        if (!thought_model.empty()) {
            c.thought_backend = c.backend;
            c.thought_backend->model = thought_model;
        }
        c.embedder.dimension = dim;
        c.max_episode_steps = max_steps;
        c.retry_on_parse_error = parse_retries;
        for (const auto& id : util::split(fixed_demos, ","))
            if (!util::trim(id).empty()) c.fixed_demos.push_back(util::trim(id));
        try {
            c.normalized().validate();
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

struct Indexed {
    corpus::Memory memory;
    retrieve::MemoryIndex index;
};

Indexed index_memory(corpus::Memory memory, const agents::AgentConfig& cfg) {
    std::shared_ptr<const embed::Embedder> embedder = embed::make_embedder(cfg.embedder);
    auto index = retrieve::MemoryIndex::build(memory, embedder);
    return {std::move(memory), std::move(index)};
}

void write_manifest(const std::string& command, const json& options, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t seed) {
    json hashes = json::object();
    for (const auto& p : inputs) hashes[p] = file_hash(p);
    json m{{"tool", kToolVersion},
           {"command", command},
           {"options", options},
           {"input_hashes", hashes},
           {"outputs", outputs},
           {"seed", seed},
           {"timestamp", now_utc()}};
    write_output(manifest_path_for(outputs.front()), m.dump(2) + "\n");
}

// ----------------------------------------------------------------- commands

int cmd_gen_memory(const json& o, std::ostream& out, std::ostream& err) {
    const auto n = o.at("seeds").get<std::uint64_t>();
    const auto first = o.at("first_seed").get<std::uint64_t>();
    const auto kinds = parse_kinds(o.at("kinds").get<std::string>());
    const std::string path = o.at("out");
    write_manifest("gen-memory", o, {}, {path}, first);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(first + i);
    if (seeds.empty()) err << "warning: --seeds 0 writes an empty memory\n";
    auto memory = world::build_memory(seeds, kinds);
    ensure_parent(path);
    corpus::save_memory(memory, path);
    out << "wrote " << memory.trajectories().size() << " trajectories to " << path << "\n";
    return kOk;
}

int cmd_gen_exemplars(const json& o, std::ostream& out, std::ostream&) {
    const std::string env = o.at("env");
    const std::string path = o.at("out");
    const auto seed = o.at("seed").get<std::uint64_t>();
    write_manifest("gen-exemplars", o, {}, {path}, seed);
    corpus::Memory memory;
    if (env == "gridhouse") {
        for (auto kind : world::kAllKinds) {
            auto run = world::run_expert(seed, kind);
            if (!run.success) throw ValidationError("expert failed on exemplar " + run.trajectory.id());
            const std::string id = run.trajectory.id();
            memory.add_trajectory(run.trajectory);
            for (std::size_t i = 0; i < run.thoughts.size(); ++i)
                memory.annotate(id, static_cast<int>(i), run.thoughts[i]);
        }
    } else {
        auto corpus = webgen::generate_web_corpus(seed, 1, 0);
        std::vector<corpus::Trajectory> picked;
        for (auto t : trajectories_of(corpus.memory)) {
            t.task.task_id = "ex-" + t.task.task_id;
            picked.push_back(std::move(t));
        }
        for (const auto& a : webgen::reason_exemplars(picked)) {
            memory.add_trajectory(a.trajectory);
            for (std::size_t i = 0; i < a.thoughts.size(); ++i)
                memory.annotate(a.trajectory.id(), static_cast<int>(i), a.thoughts[i]);
        }
    }
    ensure_parent(path);
    corpus::save_memory(memory, path);
    out << "wrote " << memory.trajectories().size() << " exemplar trajectories to " << path << "\n";
    return kOk;
}

int cmd_gen_replay(const json& o, std::ostream& out, std::ostream&) {
    const fs::path dir = o.at("out_dir").get<std::string>();
    const auto seed = o.at("seed").get<std::uint64_t>();
    const std::vector<std::pair<std::string, std::string>> files{
        {"memory", (dir / "memory.jsonl").string()},
        {"cross-task", (dir / "cross-task.jsonl").string()},
        {"cross-website", (dir / "cross-website.jsonl").string()},
        {"cross-domain", (dir / "cross-domain.jsonl").string()}};
    std::vector<std::string> outputs;
    for (const auto& f : files) outputs.push_back(f.second);
    write_manifest("gen-replay", o, {}, outputs, seed);
    auto c = webgen::generate_web_corpus(seed, o.at("memory_tasks").get<int>(), o.at("test_tasks").get<int>());
    corpus::save_memory(c.memory, files[0].second);
    corpus::save_memory(webgen::as_dataset(c.cross_task), files[1].second);
    corpus::save_memory(webgen::as_dataset(c.cross_website), files[2].second);
    corpus::save_memory(webgen::as_dataset(c.cross_domain), files[3].second);
    out << "wrote memory (" << c.memory.trajectories().size() << ") and replay splits " << c.cross_task.size() << "/"
        << c.cross_website.size() << "/" << c.cross_domain.size() << " to " << dir.string() << "\n";
    return kOk;
}

int cmd_prepare(const json& o, std::ostream& out, std::ostream& err) {
    const std::string memory_path = o.at("memory"), exemplar_path = o.at("exemplars"), path = o.at("out");
    if (!fs::exists(exemplar_path)) throw UsageError("exemplars file not found: " + exemplar_path);
    write_manifest("prepare", o, {memory_path, exemplar_path}, {path}, 0);

    corpus::Memory memory = corpus::load_memory(memory_path);
    // Resume from an earlier partial output over the same trajectories.
    if (fs::exists(path)) {
        corpus::Memory previous = corpus::load_memory(path);
        if (previous.trajectories() == memory.trajectories()) memory = std::move(previous);
    }
    auto exemplars = corpus::load_memory(exemplar_path).annotated_trajectories();
    if (exemplars.empty()) throw UsageError(exemplar_path + " holds no fully annotated exemplar trajectories");

    std::string tpl_name = o.at("template");
    if (tpl_name == "auto") tpl_name = auto_template(memory);
    const auto tpl = resolve_template(tpl_name);
    std::string mode_name = o.at("mode");
    if (mode_name == "auto") mode_name = tpl.grammar() == prompt::Grammar::Web ? "single-step" : "full-history";
    const auto mode = align::history_mode_from_string(mode_name);
    const auto cfg = agents::config_from_json(o.at("agent_config").dump());
    auto be = backend::make_backend(cfg.backend);

    const std::size_t before = memory.annotations().size();
    agents::prepare_thoughts(memory, exemplars, *be, tpl, mode, path, [&](std::size_t done, std::size_t total) {
        if (done == total || done % 100 == 0) err << "prepared " << done << "/" << total << " steps\n";
    });
    out << "annotated " << memory.annotations().size() - before << " new steps (" << memory.annotations().size()
        << " total) into " << path << "\n";
    return kOk;
}

int cmd_run(const json& o, std::ostream& out, std::ostream& err) {
    const std::string memory_path = o.at("memory"), path = o.at("out"), summary_path = o.at("summary");
    write_manifest("run", o, {memory_path}, {path, summary_path}, o.at("seeds").at(0).get<std::uint64_t>());
    const auto cfg = agents::config_from_json(o.at("agent_config").dump());
    auto indexed = index_memory(load_annotated(memory_path), cfg);
    const auto tpl = resolve_template(o.at("template"));

    const int n = o.at("tasks");
    const auto first = o.at("task_seed").get<std::uint64_t>();
    std::vector<evalkit::GridTaskRef> tasks;
    for (int i = 0; i < n; ++i) {
        const auto kinds = std::size(world::kAllKinds);
        tasks.push_back({first + static_cast<std::uint64_t>(i) / kinds, world::kAllKinds[static_cast<std::size_t>(i) % kinds]});
    }
    if (tasks.empty()) throw UsageError("--tasks must be at least 1");

    evalkit::EvalOptions opts;
    opts.seeds = o.at("seeds").get<std::vector<std::uint64_t>>();
    opts.workers = o.at("workers");
    std::vector<agents::EpisodeRecord> records;
    auto report = evalkit::gridhouse_eval(tasks, indexed.memory, indexed.index, cfg, tpl, opts, &records);

    std::string lines;
    bool all_completed = true;
    for (const auto& r : records) {
        lines += r.to_jsonl();
        if (!r.completed) {
            all_completed = false;
            err << "episode " << r.task.task_id << " stopped: " << r.error << "\n";
        }
    }
    write_output(path, lines);
    json summary = json::parse(report.summary_json());
    summary["algorithm"] = agents::to_string(cfg.algorithm);
    summary["episodes"] = records.size();
    summary["records_hash"] = util::hex64(util::fnv1a64(lines));
    write_output(summary_path, summary.dump(2) + "\n");
    out << agents::to_string(cfg.algorithm) << ": sr " << report.sr << " over " << tasks.size() << " tasks x "
        << opts.seeds.size() << " seed(s)\n";
    return all_completed ? kOk : kBackend;
}

std::string split_label(const std::vector<corpus::Trajectory>& dataset, const std::string& path) {
    for (const auto& t : dataset) {
        auto it = t.task.meta.find("split");
        if (it != t.task.meta.end()) return it->second;
    }
    return fs::path(path).stem().string();
}

int cmd_replay(const json& o, std::ostream& out, std::ostream&) {
    const std::string dataset_path = o.at("dataset"), memory_path = o.at("memory"), path = o.at("out");
    const std::string summary_path = o.at("summary");
    write_manifest("replay", o, {dataset_path, memory_path}, {path, summary_path}, o.at("seeds").at(0).get<std::uint64_t>());
    const auto dataset = trajectories_of(corpus::load_memory(dataset_path));
    const auto cfg = agents::config_from_json(o.at("agent_config").dump());
    auto indexed = index_memory(load_annotated(memory_path), cfg);
    const auto tpl = resolve_template(o.at("template"));

    evalkit::EvalOptions opts;
    opts.seeds = o.at("seeds").get<std::vector<std::uint64_t>>();
    opts.workers = o.at("workers");
    auto report = evalkit::replay_eval(dataset, indexed.memory, indexed.index, cfg, tpl, opts);

    evalkit::SweepRow row;
    row.algorithm = agents::to_string(cfg.algorithm);
    row.split = split_label(dataset, dataset_path);
    row.param = "K=" + std::to_string(cfg.expansion.k) + " B=" + std::to_string(cfg.normalized().expansion.b) +
                " F=" + std::to_string(cfg.normalized().expansion.f);
    row.seeds = opts.seeds;
    row.metrics = report;
    write_output(path, evalkit::rows_to_csv({row}));
    json summary = json::parse(report.summary_json());
    summary["algorithm"] = row.algorithm;
    summary["split"] = row.split;
    write_output(summary_path, summary.dump(2) + "\n");
    out << row.algorithm << " on " << row.split << ": ele_acc " << report.ele_acc << ", step_sr " << report.step_sr
        << ", sr " << report.sr << "\n";
    return kOk;
}

int cmd_ablate(const json& o, std::ostream& out, std::ostream& err) {
    const std::string memory_path = o.at("memory"), path = o.at("out"), dataset_path = o.at("dataset");
    std::vector<std::string> inputs{memory_path};
    if (!dataset_path.empty()) inputs.push_back(dataset_path);
    write_manifest("ablate", o, inputs, {path}, o.at("seeds").at(0).get<std::uint64_t>());

    std::vector<std::string> warnings;
    auto spec = evalkit::parse_sweep(o.at("sweep"), &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    spec.base = agents::config_from_json(o.at("agent_config").dump());
    auto indexed = index_memory(load_annotated(memory_path), spec.base);
    const auto tpl = resolve_template(o.at("template"));

    evalkit::SweepTarget target;
    if (!dataset_path.empty()) {
        target.replay = trajectories_of(corpus::load_memory(dataset_path));
        target.split = split_label(target.replay, dataset_path);
    } else {
        target.gridhouse = evalkit::held_out_tasks(o.at("task_seed").get<std::uint64_t>(), o.at("tasks_per_kind"));
        target.split = "gridhouse";
    }
    evalkit::EvalOptions opts;
    opts.seeds = o.at("seeds").get<std::vector<std::uint64_t>>();
    opts.workers = o.at("workers");
    auto rows = evalkit::run_sweep(spec, target, indexed.memory, indexed.index, tpl, opts);
    write_output(path, evalkit::rows_to_csv(rows));
    out << "wrote " << rows.size() << " sweep rows to " << path << "\n";
    return kOk;
}

int cmd_rerun(const json& o, std::ostream& out, std::ostream& err) {
    const std::string path = o.at("manifest");
    json m;
    try {
        m = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": not a run manifest (" + e.what() + ")");
    }
    if (!m.contains("command") || !m.contains("options")) throw IoError(path + ": not a run manifest");
    const json inputs = m.value("input_hashes", json::object());
    for (const auto& [input, hash] : inputs.items()) {
        if (!fs::exists(input)) throw IoError("manifest input missing: " + input);
        if (file_hash(input) != hash.get<std::string>())
            err << "warning: " << input << " changed since the manifest was written\n";
    }
    return execute(m.at("command").get<std::string>(), m.at("options").dump(), out, err);
}

int dispatch(const std::string& command, const json& o, std::ostream& out, std::ostream& err) {
    if (command == "gen-memory") return cmd_gen_memory(o, out, err);
    if (command == "gen-exemplars") return cmd_gen_exemplars(o, out, err);
    if (command == "gen-replay") return cmd_gen_replay(o, out, err);
    if (command == "prepare") return cmd_prepare(o, out, err);
    if (command == "run") return cmd_run(o, out, err);
    if (command == "replay") return cmd_replay(o, out, err);
    if (command == "ablate") return cmd_ablate(o, out, err);
    if (command == "rerun") return cmd_rerun(o, out, err);
    throw UsageError("unknown command '" + command + "'");
}

}  // namespace

std::string manifest_path_for(const std::string& output_path) { return output_path + ".manifest.json"; }

int execute(const std::string& command, const std::string& options_json, std::ostream& out, std::ostream& err) {
    try {
        json o = json::parse(options_json);
        return dispatch(command, o, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const ParseError& e) {
        err << "I/O error: malformed file, " << e.what() << "\n";
        return kIo;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const OutputParseError& e) {
        err << "backend error: unusable model output, " << e.what() << "\n";
        return kBackend;
    } catch (const json::exception& e) {
        err << "usage error: bad options, " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"TRAD: thought retrieval and aligned decision for agents"};
    app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // gen-memory
    std::uint64_t gm_seeds = 10, gm_first = 0;
    std::string gm_kinds = "all", gm_out;
    auto* gen_memory = app.add_subcommand("gen-memory", "write expert GridHouse trajectories as a memory file");
    gen_memory->add_option("--seeds", gm_seeds, "seeds per kind")->capture_default_str();
    gen_memory->add_option("--first-seed", gm_first)->capture_default_str();
    gen_memory->add_option("--kinds", gm_kinds, "all or a comma list of put,examine,clean,heat,cool,puttwo")
        ->capture_default_str();
    gen_memory->add_option("--out", gm_out)->required();

    // gen-exemplars
    std::string ge_env = "gridhouse", ge_out;
    std::uint64_t ge_seed = kDefaultExemplarSeed;
    auto* gen_exemplars = app.add_subcommand("gen-exemplars", "write thought-annotated exemplar trajectories");
    gen_exemplars->add_option("--env", ge_env, "gridhouse | web")
        ->check(CLI::IsMember({"gridhouse", "web"}))
        ->capture_default_str();
    gen_exemplars->add_option("--seed", ge_seed)->capture_default_str();
    gen_exemplars->add_option("--out", ge_out)->required();

    // gen-replay
    std::string gr_dir;
    std::uint64_t gr_seed = 0;
    int gr_memory = 6, gr_test = 4;
    auto* gen_replay = app.add_subcommand("gen-replay", "write a synthetic web memory and replay datasets");
    gen_replay->add_option("--seed", gr_seed)->capture_default_str();
    gen_replay->add_option("--memory-tasks", gr_memory, "memory tasks per seen website")->capture_default_str();
    gen_replay->add_option("--test-tasks", gr_test, "test tasks per website")->capture_default_str();
    gen_replay->add_option("--out-dir", gr_dir)->required();

    // prepare
    std::string pr_memory, pr_exemplars, pr_out, pr_template = "auto", pr_mode = "auto";
    AgentFlags pr_flags;
    auto* prepare = app.add_subcommand("prepare", "label every memory step with a thought");
    prepare->add_option("--memory", pr_memory)->required();
    prepare->add_option("--exemplars", pr_exemplars, "annotated exemplar trajectories")->required();
    prepare->add_option("--out", pr_out)->required();
    prepare->add_option("--template", pr_template, "gridhouse | web | path to a .tpl file")->capture_default_str();
    prepare->add_option("--mode", pr_mode, "auto | full-history | single-step")->capture_default_str();
    prepare->add_option("--backend", pr_flags.backend)->capture_default_str();
    prepare->add_option("--endpoint", pr_flags.endpoint);
    prepare->add_option("--model", pr_flags.model);
    prepare->add_option("--max-retries", pr_flags.max_retries)->capture_default_str();

    // run
    std::string run_memory, run_out, run_summary, run_template = "gridhouse", run_env = "gridhouse", run_seeds;
    int run_tasks = 120;
    std::uint64_t run_seed = 0, run_task_seed = kDefaultHeldOutSeed;
    std::size_t run_workers = 1;
    AgentFlags run_flags;
    auto* run = app.add_subcommand("run", "run seeded GridHouse episodes");
    run->add_option("--env", run_env)->check(CLI::IsMember({"gridhouse"}))->capture_default_str();
    run->add_option("--memory", run_memory, "annotated memory")->required();
    run->add_option("--tasks", run_tasks, "episodes, cycling through the task kinds")->capture_default_str();
    run->add_option("--task-seed", run_task_seed, "first held-out task seed")->capture_default_str();
    run->add_option("--seed", run_seed, "agent seed")->capture_default_str();
    run->add_option("--seeds", run_seeds, "agent seeds, e.g. 0,1,2 (overrides --seed)");
    run->add_option("--workers", run_workers)->capture_default_str();
    run->add_option("--template", run_template)->capture_default_str();
    run->add_option("--out", run_out, "episode records (JSONL)")->required();
    run->add_option("--summary", run_summary, "summary path (default <out>.summary.json)");
    run_flags.add(run);

    // replay
    std::string rp_dataset, rp_memory, rp_out, rp_summary, rp_template = "web", rp_seeds = "0";
    std::size_t rp_workers = 1;
    AgentFlags rp_flags;
    auto* replay = app.add_subcommand("replay", "teacher-forced replay evaluation on a web dataset");
    replay->add_option("--dataset", rp_dataset)->required();
    replay->add_option("--memory", rp_memory, "annotated web memory")->required();
    replay->add_option("--seeds", rp_seeds)->capture_default_str();
    replay->add_option("--workers", rp_workers)->capture_default_str();
    replay->add_option("--template", rp_template)->capture_default_str();
    replay->add_option("--out", rp_out, "CSV")->required();
    replay->add_option("--summary", rp_summary, "summary path (default <out>.summary.json)");
    rp_flags.add(replay);

    // ablate
    std::string ab_sweep, ab_memory, ab_dataset, ab_out, ab_template, ab_seeds = "0";
    int ab_per_kind = 20;
    std::uint64_t ab_task_seed = kDefaultHeldOutSeed;
    std::size_t ab_workers = 1;
    AgentFlags ab_flags;
    auto* ablate = app.add_subcommand("ablate", "parameter and component sweeps");
    ablate->add_option("--sweep", ab_sweep, "F=0..4 | B=0..4 | K=1..5 | components")->required();
    ablate->add_option("--memory", ab_memory)->required();
    ablate->add_option("--dataset", ab_dataset, "replay dataset; GridHouse tasks when absent");
    ablate->add_option("--tasks-per-kind", ab_per_kind)->capture_default_str();
    ablate->add_option("--task-seed", ab_task_seed)->capture_default_str();
    ablate->add_option("--seeds", ab_seeds)->capture_default_str();
    ablate->add_option("--workers", ab_workers)->capture_default_str();
    ablate->add_option("--template", ab_template, "default: gridhouse, or web with --dataset");
    ablate->add_option("--out", ab_out, "CSV")->required();
    ab_flags.add(ablate);

    // rerun
    std::string rr_manifest;
    auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
    rerun->add_option("--manifest", rr_manifest)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        std::string command;
        json o;
        if (gen_memory->parsed()) {
            command = "gen-memory";
            o = {{"seeds", gm_seeds}, {"first_seed", gm_first}, {"kinds", gm_kinds}, {"out", gm_out}};
        } else if (gen_exemplars->parsed()) {
            command = "gen-exemplars";
            o = {{"env", ge_env}, {"seed", ge_seed}, {"out", ge_out}};
        } else if (gen_replay->parsed()) {
            command = "gen-replay";
            o = {{"seed", gr_seed}, {"memory_tasks", gr_memory}, {"test_tasks", gr_test}, {"out_dir", gr_dir}};
        } else if (prepare->parsed()) {
            command = "prepare";
            o = {{"memory", pr_memory},
                 {"exemplars", pr_exemplars},
                 {"out", pr_out},
                 {"template", pr_template},
                 {"mode", pr_mode},
                 {"agent_config", json::parse(pr_flags.resolve(2, align::HistoryMode::FullHistory).snapshot_json())}};
        } else if (run->parsed()) {
            command = "run";
            auto cfg = run_flags.resolve(2, align::HistoryMode::FullHistory);
            o = {{"memory", run_memory},
                 {"tasks", run_tasks},
                 {"task_seed", run_task_seed},
                 {"seeds", run_seeds.empty() ? std::vector<std::uint64_t>{run_seed} : parse_seed_list(run_seeds)},
                 {"workers", run_workers},
                 {"template", run_template},
                 {"out", run_out},
                 {"summary", run_summary.empty() ? run_out + ".summary.json" : run_summary},
                 {"agent_config", json::parse(cfg.snapshot_json())}};
        } else if (replay->parsed()) {
            command = "replay";
            auto cfg = rp_flags.resolve(3, align::HistoryMode::SingleStep);
            o = {{"dataset", rp_dataset},
                 {"memory", rp_memory},
                 {"seeds", parse_seed_list(rp_seeds)},
                 {"workers", rp_workers},
                 {"template", rp_template},
                 {"out", rp_out},
                 {"summary", rp_summary.empty() ? rp_out + ".summary.json" : rp_summary},
                 {"agent_config", json::parse(cfg.snapshot_json())}};
        } else if (ablate->parsed()) {
            command = "ablate";
            const bool web = !ab_dataset.empty();
            auto cfg = ab_flags.resolve(web ? 3 : 2, web ? align::HistoryMode::SingleStep : align::HistoryMode::FullHistory);
            o = {{"sweep", ab_sweep},
                 {"memory", ab_memory},
                 {"dataset", ab_dataset},
                 {"tasks_per_kind", ab_per_kind},
                 {"task_seed", ab_task_seed},
                 {"seeds", parse_seed_list(ab_seeds)},
                 {"workers", ab_workers},
                 {"template", ab_template.empty() ? (web ? "web" : "gridhouse") : ab_template},
                 {"out", ab_out},
                 {"agent_config", json::parse(cfg.snapshot_json())}};
        } else if (rerun->parsed()) {
            command = "rerun";
            o = {{"manifest", rr_manifest}};
        }
        return execute(command, o.dump(), out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace trad::cli
