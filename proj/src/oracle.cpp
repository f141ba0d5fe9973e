// The scripted stand-in for an LLM. It reads prompts the way the templates
// lay them out (line prefixes only, never section names), so swapping
// wording in a template that keeps the prefixes keeps the oracle working.

#include "trad/backend.hpp"

#include "trad/belief.hpp"
#include "trad/error.hpp"
#include "trad/util.hpp"
#include "trad/webgen.hpp"
#include "trad/world.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

namespace trad::backend {

namespace {

enum class Dialect { Unknown, GridHouse, Web };

struct Item {
    std::optional<int> offset;
    std::string observation;
    std::optional<std::string> thought;
    std::optional<std::string> action;
    bool thought_cue = false;
    bool action_cue = false;
};

struct Block {
    std::string instruction;
    std::vector<Item> items;
    std::vector<std::string> previous_actions;
};

struct Parsed {
    Dialect dialect = Dialect::Unknown;
    std::vector<Block> blocks;
};

std::string unquote(std::string s) {
    s = util::trim(s);
    auto a = s.find('`');
    if (a == std::string::npos) return s;
    auto b = s.find('`', a + 1);
    if (b == std::string::npos) return util::trim(s.substr(a + 1));
    return util::trim(s.substr(a + 1, b - a - 1));
}

bool take_prefix(const std::string& line, std::string_view prefix, std::string& rest) {
    if (!util::starts_with(line, prefix)) return false;
    rest = util::trim(std::string_view(line).substr(prefix.size()));
    return true;
}

Parsed parse_message(const std::string& content) {
    static const std::regex kMark(R"(^\[Step (-?[0-9]+)\]$)");
    Parsed p;
    std::optional<int> pending;
    bool collecting_previous = false;
    std::smatch m;
    auto item_for_step = [&](Block& b) -> Item& {
        if (b.items.empty() || b.items.back().action || b.items.back().action_cue) {
            b.items.emplace_back();
            b.items.back().offset = pending;
            pending.reset();
        }
        return b.items.back();
    };
    for (const auto& raw : util::split_lines(content)) {
        std::string line = util::trim(raw);
        std::string rest;
        if (take_prefix(line, "Your task is to:", rest) || take_prefix(line, "Task:", rest)) {
            p.dialect = util::starts_with(line, "Task:") ? Dialect::Web : Dialect::GridHouse;
            p.blocks.push_back(Block{rest, {}, {}});
            collecting_previous = false;
            pending.reset();
            continue;
        }
        if (p.blocks.empty()) continue;
        Block& b = p.blocks.back();
        if (std::regex_match(line, m, kMark)) {
            pending = std::stoi(m[1].str());
            collecting_previous = false;
        } else if (line == "previous actions:") {
            collecting_previous = true;
        } else if (take_prefix(line, "obs:", rest)) {
            collecting_previous = false;
            Item it;
            it.offset = pending;
            pending.reset();
            it.observation = p.dialect == Dialect::Web ? unquote(rest) : rest;
            b.items.push_back(std::move(it));
        } else if (take_prefix(line, "think:", rest) || take_prefix(line, "reason:", rest)) {
            collecting_previous = false;
            // Thoughts follow the action in preparation steps, precede it elsewhere.
            if (b.items.empty() || b.items.back().thought || b.items.back().thought_cue) {
                b.items.emplace_back();
                b.items.back().offset = pending;
                pending.reset();
            }
            Item& it = b.items.back();
            if (rest.empty()) it.thought_cue = true;
            else it.thought = rest;
        } else if (take_prefix(line, "act:", rest)) {
            collecting_previous = false;
            Item& it = item_for_step(b);
            if (rest.empty()) it.action_cue = true;
            else it.action = unquote(rest);
        } else if (collecting_previous && !line.empty() && line != "None") {
            b.previous_actions.push_back(unquote(line));
        }
    }
    return p;
}

std::set<std::string> token_set(const std::string& text) {
    auto toks = util::tokenize(text);
    return {toks.begin(), toks.end()};
}

double overlap(const std::set<std::string>& demo, const std::set<std::string>& current) {
    if (current.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& t : current) shared += demo.count(t);
    return static_cast<double>(shared) / static_cast<double>(current.size());
}

std::string goal_of(const std::string& thought) {
    auto parts = util::split(thought, " / ");
    return util::trim(parts.back());
}

std::optional<std::string> field_of(const std::string& thought, std::string_view label) {
    for (const auto& part : util::split(thought, " / ")) {
        std::string t = util::trim(part);
        if (util::starts_with(t, label)) return util::trim(std::string_view(t).substr(label.size()));
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- GridHouse

std::string current_location(const Item& cur) {
    if (cur.thought) {
        if (auto loc = field_of(*cur.thought, "I am now in/on:"); loc && world::is_entity(*loc)) return *loc;
    }
    auto ents = world::find_entities(cur.observation);
    for (const auto& e : ents)
        if (world::is_receptacle_class(world::class_of(e))) return e;
    return {};
}

std::string substitute_entity(const std::string& demo_entity, const std::map<std::string, std::string>& mapping,
                              const Item& cur) {
    if (auto it = mapping.find(demo_entity); it != mapping.end()) return it->second;
    const std::string cls = world::class_of(demo_entity);
    const bool receptacle = world::is_receptacle_class(cls);
    if (cur.thought) {
        auto goal_entities = world::find_entities(goal_of(*cur.thought));
        if (receptacle) {
            for (auto it = goal_entities.rbegin(); it != goal_entities.rend(); ++it)
                if (world::is_receptacle_class(world::class_of(*it))) return *it;
        } else {
            if (cls == "desklamp") {
                for (const auto& e : goal_entities)
                    if (world::class_of(e) == cls) return e;
            }
            if (auto held = field_of(*cur.thought, "Objects I have taken:"); held && world::is_entity(*held))
                return *held;
            if (auto found = field_of(*cur.thought, "Critical objects I have found:")) {
                for (const auto& e : world::find_entities(*found))
                    if (!world::is_receptacle_class(world::class_of(e)) && world::class_of(e) != "desklamp") return e;
            }
        }
    }
    for (const auto& e : world::find_entities(cur.observation))
        if (world::class_of(e) == cls) return e;
    if (receptacle) {
        std::string loc = current_location(cur);
        if (!loc.empty()) return loc;
    }
    return demo_entity;
}

std::string adapt_grid_action(const Item& demo, const Item& cur) {
    auto action = world::parse_grid_action(*demo.action);
    if (!action) return "look";
    std::map<std::string, std::string> mapping;
    if (demo.thought && cur.thought) {
        auto de = world::find_entities(goal_of(*demo.thought));
        auto ce = world::find_entities(goal_of(*cur.thought));
        bool consistent = de.size() == ce.size();
        for (std::size_t i = 0; consistent && i < de.size(); ++i) {
            auto [it, inserted] = mapping.emplace(de[i], ce[i]);
            if (!inserted && it->second != ce[i]) consistent = false;
        }
        if (!consistent) mapping.clear();
    }
    if (!action->object.empty()) action->object = substitute_entity(action->object, mapping, cur);
    if (!action->receptacle.empty()) action->receptacle = substitute_entity(action->receptacle, mapping, cur);
    return action->str();
}

std::string grid_thought(const Block& query, bool preparation) {
    std::vector<std::string> observations, actions;
    for (const auto& it : query.items) {
        if (it.observation.empty()) throw BackendError(BackendError::Kind::UnrecognizedPrompt,
                                                       "GridHouse thought prompt without full history");
        observations.push_back(it.observation);
        if (it.action) actions.push_back(*it.action);
    }
    std::optional<world::GridAction> visible;
    if (preparation) {
        visible = world::parse_grid_action(actions.back());
        actions.pop_back();
        if (!visible) throw BackendError(BackendError::Kind::UnrecognizedPrompt, "expert action is not grammatical");
    }
    world::Belief belief;
    try {
        belief = world::belief_from_transcript(query.instruction, observations, actions);
    } catch (const ValidationError& e) {
        throw BackendError(BackendError::Kind::UnrecognizedPrompt, e.what());
    }
    return "think: " + (visible ? world::compose_thought(belief, *visible) : world::compose_thought(belief));
}

// ---------------------------------------------------------------------- Web

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& w : util::split(util::collapse_spaces(util::trim(s)), " "))
        if (!w.empty()) out.push_back(w);
    return out;
}

std::string norm_word(std::string w) {
    std::string out;
    for (char c : w)
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

// Carries a typed value from the demo task onto the current task by aligning
// the two instructions (longest common subsequence of words) and reading the
// current words that fill the same gap.
std::string transfer_value(const std::string& value, const std::string& demo_task, const std::string& cur_task) {
    auto D = words(demo_task), C = words(cur_task), V = words(value);
    std::vector<std::string> d, c, v;
    for (const auto& w : D) d.push_back(norm_word(w));
    for (const auto& w : C) c.push_back(norm_word(w));
    for (const auto& w : V) v.push_back(norm_word(w));
    if (v.empty() || v.size() > d.size()) return value;
    std::size_t p = d.size();
    for (std::size_t i = 0; i + v.size() <= d.size(); ++i) {
        if (std::equal(v.begin(), v.end(), d.begin() + static_cast<std::ptrdiff_t>(i))) {
            p = i;
            break;
        }
    }
    if (p == d.size()) return value;

    const std::size_t n = d.size(), m = c.size();
    std::vector<std::vector<int>> L(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            L[i][j] = d[i] == c[j] ? L[i + 1][j + 1] + 1 : std::max(L[i + 1][j], L[i][j + 1]);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0, j = 0; i < n && j < m;) {
        if (d[i] == c[j]) {
            pairs.emplace_back(i++, j++);
        } else if (L[i + 1][j] >= L[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::size_t j0 = 0, j1 = m;
    for (const auto& [i, j] : pairs) {
        if (i < p) j0 = j + 1;
        if (i >= p + v.size()) {
            j1 = j;
            break;
        }
    }
    if (j0 >= j1) return value;
    std::vector<std::string> out(C.begin() + static_cast<std::ptrdiff_t>(j0), C.begin() + static_cast<std::ptrdiff_t>(j1));
    std::string joined = util::join(out, " ");
    while (!joined.empty() && std::ispunct(static_cast<unsigned char>(joined.back()))) joined.pop_back();
    return joined.empty() ? value : joined;
}

std::string mask_entities(const std::string& text) {
    static const std::regex kEntity(R"(\b[a-z]+ [0-9]+\b)");
    return std::regex_replace(text, kEntity, " entity ");
}

std::string strip_ids(const std::string& obs) {
    static const std::regex kId(R"(\[[0-9]+\])");
    return std::regex_replace(obs, kId, " ");
}

std::string adapt_web_action(const Item& demo, const std::string& demo_task, const Item& cur, const std::string& cur_task) {
    auto action = prompt::parse_web_action(*demo.action);
    if (!action) return {};
    std::string demo_label;
    for (const auto& e : webgen::parse_observation(demo.observation))
        if (e.id == action->element_id) demo_label = e.tag + " " + e.label;
    if (demo_label.empty()) return {};
    const auto want = token_set(demo_label);
    std::string best_id;
    double best = 0.0;
    for (const auto& e : webgen::parse_observation(cur.observation)) {
        auto have = token_set(e.tag + " " + e.label);
        std::size_t shared = 0;
        for (const auto& t : have) shared += want.count(t);
        double score = static_cast<double>(shared) / static_cast<double>(std::max(have.size(), want.size()));
        if (score > best) {
            best = score;
            best_id = e.id;
        }
    }
    if (best_id.empty()) return {};
    action->element_id = best_id;
    if (action->op != "CLICK") action->value = transfer_value(action->value, demo_task, cur_task);
    return action->str();
}

std::string web_thought(const Block& query, bool preparation) {
    if (query.items.empty()) throw BackendError(BackendError::Kind::UnrecognizedPrompt, "web prompt without observation");
    const Item& cur = query.items.back();
    std::string next;
    if (preparation) {
        if (!cur.action) throw BackendError(BackendError::Kind::UnrecognizedPrompt, "preparation prompt without action");
        next = *cur.action;
        if (auto a = prompt::parse_web_action(*cur.action)) {
            for (const auto& e : webgen::parse_observation(cur.observation))
                if (e.id == a->element_id) next += " on " + e.tag + " " + e.label;
        }
    }
    return "reason: " + webgen::compose_reason(query.instruction, query.previous_actions, next);
}

// ------------------------------------------------------------------ Actions

struct Candidate {
    const Item* item = nullptr;
    const Block* block = nullptr;
    double score = -1.0;
    bool at_anchor = false;
    std::size_t block_index = 0;
    std::size_t item_index = 0;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.at_anchor != b.at_anchor) return a.at_anchor;
    if (a.block_index != b.block_index) return a.block_index > b.block_index;  // later demo: higher anchor score
    return a.item_index < b.item_index;
}

std::string decide_action(Dialect dialect, const std::vector<Block>& demos, const Block& query, double threshold) {
    const Item& cur = query.items.back();
    const bool web = dialect == Dialect::Web;
    // Entity ids are masked so a step matches on what happens, not on which
    // objects it happens to; substitution restores the current ids later.
    auto text_of = [&](const Item& it, bool with_thought) {
        std::string base = it.observation;
        if (with_thought && it.thought) base += " " + *it.thought;
        return web ? strip_ids(base) : mask_entities(base);
    };

    Candidate best;
    for (std::size_t bi = 0; bi < demos.size(); ++bi) {
        for (std::size_t ii = 0; ii < demos[bi].items.size(); ++ii) {
            const Item& it = demos[bi].items[ii];
            if (!it.action) continue;
            const bool both_thoughts = it.thought && cur.thought;
            Candidate c{&it, &demos[bi], overlap(token_set(text_of(it, both_thoughts)), token_set(text_of(cur, both_thoughts))),
                        it.offset && *it.offset == 0, bi, ii};
            if (!best.item || better(c, best)) best = c;
        }
    }
    if (!best.item || best.score < threshold) return web ? std::string() : "act: look";
    if (web) {
        std::string a = adapt_web_action(*best.item, best.block->instruction, cur, query.instruction);
        return a.empty() ? std::string() : "`" + a + "`";
    }
    return "act: " + adapt_grid_action(*best.item, cur);
}

}  // namespace

std::string oracle_policy(const std::vector<prompt::ChatMessage>& messages, double threshold) {
    // The query is the last user message that ends in a cue; earlier user
    // messages carry demonstrations.
    std::optional<std::size_t> query_at;
    Parsed query;
    for (std::size_t i = messages.size(); i-- > 0;) {
        if (messages[i].role != "user") continue;
        Parsed p = parse_message(messages[i].content);
        if (p.blocks.empty() || p.blocks.back().items.empty()) continue;
        const Item& last = p.blocks.back().items.back();
        if (last.thought_cue || last.action_cue) {
            query_at = i;
            query = std::move(p);
            break;
        }
    }
    if (!query_at) throw BackendError(BackendError::Kind::UnrecognizedPrompt, "no query block with a cue");

    std::vector<Block> demos;
    for (std::size_t i = 0; i < *query_at; ++i) {
        if (messages[i].role != "user") continue;
        Parsed p = parse_message(messages[i].content);
        for (auto& b : p.blocks) demos.push_back(std::move(b));
    }
    const Block& q = query.blocks.back();
    const Item& last = q.items.back();
    if (last.thought_cue) {
        const bool preparation = last.action.has_value();
        return query.dialect == Dialect::Web ? web_thought(q, preparation) : grid_thought(q, preparation);
    }
    return decide_action(query.dialect, demos, q, threshold);
}

}  // namespace trad::backend
