#include "doctest.h"

#include "trad/commands.hpp"
#include "trad/corpus.hpp"
#include "trad/util.hpp"

#include "json.hpp"

#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using namespace trad;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "trad");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("trad_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

Workdir& work() {
    static Workdir w;
    return w;
}

// Memory over 3 seeds with oracle thoughts, shared by the run tests.
const std::string& annotated() {
    static const std::string path = [] {
        auto& w = work();
        REQUIRE(invoke({"gen-memory", "--seeds", "3", "--out", w("mem.jsonl")}).code == 0);
        REQUIRE(invoke({"gen-exemplars", "--env", "gridhouse", "--out", w("ex.jsonl")}).code == 0);
        REQUIRE(invoke({"prepare", "--memory", w("mem.jsonl"), "--exemplars", w("ex.jsonl"), "--out", w("ann.jsonl")})
                    .code == 0);
        return w("ann.jsonl");
    }();
    return path;
}

std::vector<std::pair<std::string, std::string>> step_hashes(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(util::read_file(path));
    for (std::string line; std::getline(in, line);) {
        auto j = nlohmann::json::parse(line);
        if (j["type"] == "step") out.emplace_back(j["prompt_hash"], j["parsed_action"]);
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({}).code == cli::kUsage);
    CHECK(invoke({"fly"}).code == cli::kUsage);
    auto r = invoke({"run", "--memory", annotated(), "--agent", "gpt", "--out", work()("x.jsonl")});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("react-random") != std::string::npos);
    CHECK(invoke({"replay", "--memory", annotated(), "--dataset", "d.jsonl", "--K", "0", "--out", work()("x.csv")}).code ==
          cli::kUsage);
}

TEST_CASE("missing files exit with 3") {
    CHECK(invoke({"replay", "--memory", annotated(), "--dataset", work()("none.jsonl"), "--out", work()("x.csv")}).code ==
          cli::kIo);
    CHECK(invoke({"run", "--memory", work()("none.jsonl"), "--out", work()("x.jsonl")}).code == cli::kIo);
}

TEST_CASE("gen-memory") {
    auto& w = work();
    REQUIRE(invoke({"gen-memory", "--seeds", "2", "--out", w("a.jsonl")}).code == 0);
    REQUIRE(invoke({"gen-memory", "--seeds", "2", "--out", w("b.jsonl")}).code == 0);
    CHECK(util::read_file(w("a.jsonl")) == util::read_file(w("b.jsonl")));
    CHECK(corpus::load_memory(w("a.jsonl")).trajectories().size() == 12);
    auto r = invoke({"gen-memory", "--seeds", "0", "--out", w("empty.jsonl")});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(util::read_file(w("empty.jsonl")).empty());
    CHECK(fs::exists(cli::manifest_path_for(w("a.jsonl"))));
}

TEST_CASE("prepare") {
    auto& w = work();
    const std::string ann = annotated();
    CHECK(corpus::load_memory(ann).fully_annotated());
    const std::string before = util::read_file(ann);
    CHECK(invoke({"prepare", "--memory", ann, "--exemplars", w("ex.jsonl"), "--out", ann}).code == 0);
    CHECK(util::read_file(ann) == before);
    // Exemplars are required input: a missing file or one without thoughts is a usage error.
    CHECK(invoke({"prepare", "--memory", w("mem.jsonl"), "--exemplars", w("mem.jsonl"), "--out", w("p.jsonl")}).code ==
          cli::kUsage);
    CHECK(invoke({"prepare", "--memory", w("mem.jsonl"), "--exemplars", w("nope.jsonl"), "--out", w("p.jsonl")}).code ==
          cli::kUsage);
}

TEST_CASE("run writes records and a per-kind summary") {
    auto& w = work();
    REQUIRE(invoke({"run", "--memory", annotated(), "--agent", "trad", "--K", "2", "--tasks", "12", "--out",
                 w("run.jsonl"), "--summary", w("run.json")})
                .code == 0);
    auto s = nlohmann::json::parse(util::read_file(w("run.json")));
    CHECK(s.contains("sr"));
    CHECK(s["per_kind"].size() == 6);
}

TEST_CASE("tr-only matches trad without expansion") {
    auto& w = work();
    REQUIRE(invoke({"run", "--memory", annotated(), "--agent", "tr-only", "--tasks", "6", "--out", w("tr.jsonl")}).code ==
            0);
    REQUIRE(invoke({"run", "--memory", annotated(), "--agent", "trad", "--B", "0", "--F", "0", "--tasks", "6", "--out",
                 w("t0.jsonl")})
                .code == 0);
    auto a = step_hashes(w("tr.jsonl")), b = step_hashes(w("t0.jsonl"));
    CHECK_FALSE(a.empty());
    CHECK(a == b);
}

TEST_CASE("rerun reproduces outputs byte for byte") {
    auto& w = work();
    REQUIRE(invoke({"run", "--memory", annotated(), "--agent", "react-random", "--seed", "3", "--tasks", "6", "--out",
                 w("rr.jsonl")})
                .code == 0);
    const std::string first = util::read_file(w("rr.jsonl"));
    fs::remove(w("rr.jsonl"));
    auto again = invoke({"rerun", "--manifest", cli::manifest_path_for(w("rr.jsonl"))});
    INFO(again.err);
    REQUIRE(again.code == 0);
    CHECK(util::read_file(w("rr.jsonl")) == first);
    CHECK(invoke({"rerun", "--manifest", w("absent.manifest.json")}).code == cli::kIo);
}

TEST_CASE("ablate emits one row per sweep value") {
    auto& w = work();
    REQUIRE(invoke({"ablate", "--memory", annotated(), "--sweep", "F=0..2", "--tasks-per-kind", "1", "--out",
                 w("f.csv")})
                .code == 0);
    auto lines = util::split_lines(util::read_file(w("f.csv")));
    REQUIRE(lines.size() >= 4);
    CHECK(lines[0] == "algorithm,split,param,seed,ele_acc,step_sr,sr");
    CHECK(lines[1].rfind("trad,gridhouse,F=0,", 0) == 0);
    CHECK(lines[3].rfind("trad,gridhouse,F=2,", 0) == 0);
}

TEST_CASE("web replay end to end") {
    auto& w = work();
    REQUIRE(invoke({"gen-replay", "--out-dir", w("web")}).code == 0);
    REQUIRE(invoke({"gen-exemplars", "--env", "web", "--out", w("web/ex.jsonl")}).code == 0);
    REQUIRE(invoke({"prepare", "--memory", w("web/memory.jsonl"), "--exemplars", w("web/ex.jsonl"), "--out",
                 w("web/ann.jsonl")})
                .code == 0);
    auto r = invoke({"replay", "--memory", w("web/ann.jsonl"), "--dataset", w("web/cross-task.jsonl"), "--out",
                  w("web/r.csv"), "--summary", w("web/r.json")});
    REQUIRE(r.code == 0);
    auto first = util::read_file(w("web/r.csv"));
    REQUIRE(invoke({"replay", "--memory", w("web/ann.jsonl"), "--dataset", w("web/cross-task.jsonl"), "--out",
                 w("web/r2.csv")})
                .code == 0);
    CHECK(util::read_file(w("web/r2.csv")) == first);
    auto s = nlohmann::json::parse(util::read_file(w("web/r.json")));
    CHECK(s["ele_acc"].get<double>() > 0.0);
}
