#include "trad/prompt.hpp"

#include "trad/error.hpp"
#include "trad/util.hpp"
#include "trad/world.hpp"

#include <regex>

namespace trad::prompt {

namespace {

const char* const kRequiredSections[] = {
    "action_space", "system_prepare", "system_thought", "system_action", "rom_note",
    "demo_intro",   "demo_header",    "step",           "prepare_step",  "query_header",
    "previous_actions", "thought_cue", "prepare_cue",   "action_cue",    "corrective",
};

void set_if(Vars& v, const char* key, const std::optional<std::string>& value) {
    if (value && !value->empty()) v[key] = *value;
}

std::string system_text(const PromptTemplate& tpl, const std::string& kind, bool rom) {
    Vars v{{"action_space", tpl.section("action_space")}};
    if (rom) v["rom_note"] = tpl.section("rom_note");
    return render(tpl.section("system_" + kind), v);
}

std::string step_text(const PromptTemplate& tpl, const std::optional<std::string>& mark,
                      const std::optional<std::string>& observation, const std::optional<std::string>& thought,
                      const std::string& action) {
    Vars v{{"action", action}};
    set_if(v, "mark", mark);
    set_if(v, "observation", observation);
    set_if(v, "thought", thought);
    return render(tpl.section("step"), v);
}

std::string header_text(const PromptTemplate& tpl, const std::string& section, std::size_t index,
                        const std::string& instruction) {
    return render(tpl.section(section), {{"index", std::to_string(index)}, {"instruction", instruction}});
}

std::string previous_actions_text(const PromptTemplate& tpl, const std::vector<std::string>& actions) {
    return render(tpl.section("previous_actions"),
                  {{"actions", actions.empty() ? std::string("None") : util::join(actions, "\n")}});
}

std::string trajectory_block(const PromptTemplate& tpl, std::size_t index, const corpus::AnnotatedTrajectory& demo,
                             bool preparation) {
    std::vector<std::string> parts{header_text(tpl, "demo_header", index, demo.trajectory.task.instruction)};
    const auto& steps = demo.trajectory.steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        std::optional<std::string> thought;
        if (i < demo.thoughts.size()) thought = demo.thoughts[i];
        if (preparation) {
            if (!thought) throw ValidationError("exemplar " + demo.trajectory.id() + " lacks a thought at step " +
                                                std::to_string(i));
            parts.push_back(render(tpl.section("prepare_step"),
                                   {{"observation", steps[i].observation},
                                    {"action", steps[i].action},
                                    {"thought", *thought}}));
        } else {
            parts.push_back(step_text(tpl, std::nullopt, steps[i].observation, thought, steps[i].action));
        }
    }
    return util::join(parts, "\n");
}

std::vector<ChatMessage> assemble(std::string system, const PromptTemplate& tpl, const std::vector<std::string>& blocks,
                                  std::string query) {
    std::vector<ChatMessage> out{{"system", std::move(system)}};
    if (!blocks.empty())
        out.push_back({"user", tpl.section("demo_intro") + "\n\n" + util::join(blocks, "\n\n")});
    out.push_back({"user", std::move(query)});
    return out;
}

}  // namespace

std::string to_string(Grammar g) { return g == Grammar::Web ? "web" : "gridhouse"; }

Grammar grammar_from_string(std::string_view s) {
    if (s == "gridhouse") return Grammar::GridHouse;
    if (s == "web") return Grammar::Web;
    throw ValidationError("unknown action grammar '" + std::string(s) + "'");
}

std::string render(std::string_view format, const Vars& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < format.size()) {
        std::size_t open = format.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(format.substr(i));
            break;
        }
        out.append(format.substr(i, open - i));
        std::size_t close = format.find("}}", open);
        if (close == std::string_view::npos) throw ValidationError("unterminated placeholder in template");
        std::string tag(format.substr(open + 2, close - open - 2));
        if (!tag.empty() && tag[0] == '#') {
            std::string name = tag.substr(1);
            std::string end_tag = "{{/" + name + "}}";
            std::size_t end = format.find(end_tag, close + 2);
            if (end == std::string_view::npos) throw ValidationError("unclosed section {{#" + name + "}}");
            auto it = vars.find(name);
            if (it != vars.end() && !it->second.empty())
                out += render(format.substr(close + 2, end - close - 2), vars);
            i = end + end_tag.size();
        } else if (!tag.empty() && tag[0] == '/') {
            throw ValidationError("unmatched {{" + tag + "}}");
        } else {
            auto it = vars.find(tag);
            if (it == vars.end()) throw ValidationError("unresolved placeholder {{" + tag + "}}");
            out += it->second;
            i = close + 2;
        }
    }
    return out;
}

PromptTemplate PromptTemplate::parse(std::string name, std::string_view text) {
    PromptTemplate t;
    t.name_ = std::move(name);
    std::string* current = nullptr;
    for (const auto& line : util::split_lines(text)) {
        if (util::starts_with(line, "@@ ")) {
            std::string section = util::trim(std::string_view(line).substr(3));
            if (t.sections_.count(section))
                throw ValidationError("template " + t.name_ + ": duplicate section " + section);
            current = &t.sections_[section];
        } else if (current) {
            current->append(line).push_back('\n');
        }
    }
    for (auto& [key, body] : t.sections_) {
        while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
        while (!body.empty() && body.front() == '\n') body.erase(body.begin());
    }
    for (const char* required : kRequiredSections)
        if (!t.sections_.count(required))
            throw ValidationError("template " + t.name_ + ": missing section " + required);
    t.grammar_ = t.sections_.count("grammar") ? grammar_from_string(t.sections_.at("grammar")) : Grammar::GridHouse;
    return t;
}

const std::string& PromptTemplate::section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) throw ValidationError("template " + name_ + ": no section " + name);
    return it->second;
}

const PromptTemplate& default_template(Grammar grammar) {
    static const PromptTemplate kGrid = PromptTemplate::parse("gridhouse", detail::kGridhouseTemplate);
    static const PromptTemplate kWeb = PromptTemplate::parse("web", detail::kWebTemplate);
    return grammar == Grammar::Web ? kWeb : kGrid;
}

PromptTemplate load_template(const std::string& path) { return PromptTemplate::parse(path, util::read_file(path)); }

std::vector<ChatMessage> render_thought_prompt(const PromptTemplate& tpl,
                                               const std::vector<corpus::AnnotatedTrajectory>& demos,
                                               const EpisodeView& episode) {
    if (episode.observations.size() != episode.actions.size() + 1)
        throw ValidationError("episode needs exactly one observation more than actions");
    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < demos.size(); ++i) blocks.push_back(trajectory_block(tpl, i + 1, demos[i], false));

    std::vector<std::string> query{header_text(tpl, "query_header", 0, episode.task.instruction)};
    if (episode.mode == align::HistoryMode::SingleStep) {
        query.push_back(previous_actions_text(tpl, episode.actions));
    } else {
        for (std::size_t i = 0; i < episode.actions.size(); ++i) {
            std::optional<std::string> thought;
            if (i < episode.thoughts.size()) thought = episode.thoughts[i];
            query.push_back(step_text(tpl, std::nullopt, episode.observations[i], thought, episode.actions[i]));
        }
    }
    query.push_back(render(tpl.section("thought_cue"), {{"observation", episode.observations.back()}}));
    return assemble(system_text(tpl, "thought", false), tpl, blocks, util::join(query, "\n"));
}

std::vector<ChatMessage> render_preparation_prompt(const PromptTemplate& tpl,
                                                   const std::vector<corpus::AnnotatedTrajectory>& exemplars,
                                                   const corpus::Trajectory& target, int step_index,
                                                   align::HistoryMode mode) {
    if (exemplars.empty()) throw ValidationError("need ≥1 exemplar");
    if (step_index < 0 || static_cast<std::size_t>(step_index) >= target.steps.size() ||
        target.steps[static_cast<std::size_t>(step_index)].action.empty())
        throw ValidationError("missing action for step " + std::to_string(step_index) + " of " + target.id());

    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < exemplars.size(); ++i) blocks.push_back(trajectory_block(tpl, i + 1, exemplars[i], true));

    const auto t = static_cast<std::size_t>(step_index);
    std::vector<std::string> query{header_text(tpl, "query_header", 0, target.task.instruction)};
    if (mode == align::HistoryMode::SingleStep) {
        std::vector<std::string> previous;
        for (std::size_t i = 0; i < t; ++i) previous.push_back(target.steps[i].action);
        query.push_back(previous_actions_text(tpl, previous));
    } else {
        for (std::size_t i = 0; i < t; ++i)
            query.push_back(step_text(tpl, std::nullopt, target.steps[i].observation, std::nullopt, target.steps[i].action));
    }
    query.push_back(render(tpl.section("prepare_cue"),
                           {{"observation", target.steps[t].observation}, {"action", target.steps[t].action}}));
    return assemble(system_text(tpl, "prepare", false), tpl, blocks, util::join(query, "\n"));
}

std::vector<ChatMessage> render_action_prompt(const PromptTemplate& tpl, const align::AlignedContext& ctx) {
    bool marked = false;
    for (const auto& d : ctx.demos) marked = marked || (ctx.show_marks && !d.items.empty());

    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < ctx.demos.size(); ++i) {
        const auto& demo = ctx.demos[i];
        std::vector<std::string> parts{header_text(tpl, "demo_header", i + 1, demo.task.instruction)};
        for (const auto& item : demo.items) {
            std::optional<std::string> mark;
            if (ctx.show_marks) mark = item.mark;
            parts.push_back(step_text(tpl, mark, item.step.observation, item.thought, item.step.action));
        }
        blocks.push_back(util::join(parts, "\n"));
    }

    std::vector<std::string> query{header_text(tpl, "query_header", 0, ctx.task.instruction)};
    if (ctx.mode == align::HistoryMode::SingleStep) {
        std::vector<std::string> previous;
        for (const auto& h : ctx.history) previous.push_back(h.action);
        query.push_back(previous_actions_text(tpl, previous));
    } else {
        const auto n = static_cast<int>(ctx.history.size());
        for (int j = 0; j < n; ++j) {
            std::optional<std::string> mark;
            if (marked) mark = align::order_mark(j - n);
            const auto& h = ctx.history[static_cast<std::size_t>(j)];
            query.push_back(step_text(tpl, mark, h.observation, std::nullopt, h.action));
        }
    }
    Vars cue{{"observation", ctx.current_observation}};
    if (marked) cue["mark"] = align::order_mark(0);
    set_if(cue, "thought", ctx.current_thought);
    query.push_back(render(tpl.section("action_cue"), cue));
    return assemble(system_text(tpl, "action", marked), tpl, blocks, util::join(query, "\n"));
}

ChatMessage corrective_message(const PromptTemplate& tpl) { return {"user", tpl.section("corrective")}; }

std::string WebAction::str() const {
    if (op == "CLICK") return "CLICK [" + element_id + "]";
    return op + " [" + element_id + "] [" + value + "]";
}

std::optional<WebAction> parse_web_action(std::string_view text) {
    static const std::regex kRe(R"(^(CLICK|TYPE|SELECT|click|type|select)\s*\[\s*([^\]\s]+)\s*\](?:\s*\[([^\]]*)\])?$)");
    std::string s = util::trim(text);
    std::smatch m;
    if (!std::regex_match(s, m, kRe)) return std::nullopt;
    WebAction a;
    a.op = m[1].str();
    for (auto& c : a.op) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    a.element_id = m[2].str();
    if (a.op == "CLICK") {
        if (m[3].matched) return std::nullopt;
    } else {
        if (!m[3].matched) return std::nullopt;
        a.value = util::collapse_spaces(util::trim(m[3].str()));
        if (a.value.empty()) return std::nullopt;
    }
    return a;
}

std::optional<std::string> canonical_action(std::string_view text, Grammar grammar) {
    if (grammar == Grammar::Web) {
        auto a = parse_web_action(text);
        if (!a) return std::nullopt;
        return a->str();
    }
    auto a = world::parse_grid_action(text);
    if (!a) return std::nullopt;
    return a->str();
}

namespace {

std::string strip_cue(std::string s, std::initializer_list<const char*> cues) {
    s = util::trim(s);
    if (util::starts_with(s, ">")) s = util::trim(s.substr(1));
    for (const char* cue : cues) {
        std::string c(cue);
        if (s.size() >= c.size()) {
            std::string head = s.substr(0, c.size());
            for (auto& ch : head) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (head == c) return util::trim(s.substr(c.size()));
        }
    }
    return s;
}

}  // namespace

std::string parse_action(std::string_view raw, Grammar grammar) {
    std::string text(raw);
    auto tick = text.find('`');
    if (tick != std::string::npos) {
        auto end = text.find('`', tick + 1);
        if (end != std::string::npos) {
            std::string candidate = strip_cue(text.substr(tick + 1, end - tick - 1), {"act:"});
            if (auto c = canonical_action(candidate, grammar)) return *c;
            throw OutputParseError(OutputParseError::Kind::InvalidAction, "invalid action '" + candidate + "'");
        }
    }
    std::optional<std::string> rejected;
    for (const auto& line : util::split_lines(text)) {
        std::string stripped = strip_cue(line, {"act:", "action:"});
        if (stripped.empty()) continue;
        if (auto c = canonical_action(stripped, grammar)) return *c;
        std::string bare = util::trim(line);
        if (util::starts_with(bare, ">")) bare = util::trim(bare.substr(1));
        if (!rejected && (util::starts_with(bare, "act:") || util::starts_with(bare, "action:"))) rejected = stripped;
    }
    if (rejected) throw OutputParseError(OutputParseError::Kind::InvalidAction, "invalid action '" + *rejected + "'");
    throw OutputParseError(OutputParseError::Kind::NoParse, "no action found in model output");
}

std::string parse_thought(std::string_view raw) {
    std::vector<std::string> kept;
    bool first = true;
    for (const auto& line : util::split_lines(raw)) {
        std::string t = util::trim(line);
        if (!first && (util::starts_with(t, "act:") || util::starts_with(t, "> act:"))) break;
        if (first && t.empty()) continue;
        kept.push_back(first ? strip_cue(t, {"think:", "reason:"}) : t);
        first = false;
    }
    std::string out = util::trim(util::join(kept, "\n"));
    if (out.empty()) throw OutputParseError(OutputParseError::Kind::EmptyThought, "empty thought");
    return out;
}

std::string prompt_hash(const std::vector<ChatMessage>& messages) {
    std::uint64_t h = util::kFnvOffset;
    for (const auto& m : messages) {
        h = util::fnv1a64(m.role, h);
        h = util::fnv1a64(std::string_view("\x1f", 1), h);
        h = util::fnv1a64(m.content, h);
        h = util::fnv1a64(std::string_view("\x1e", 1), h);
    }
    return util::hex64(h);
}

}  // namespace trad::prompt
