#pragma once

// Prompt rendering for thought preparation, thought generation and action
// prediction, plus parsing of model output. Wording lives in template files
// (templates/*.tpl); this module only decides what goes where.

#include "trad/align.hpp"
#include "trad/corpus.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trad::prompt {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

enum class Grammar { GridHouse, Web };

std::string to_string(Grammar g);
Grammar grammar_from_string(std::string_view s);

using Vars = std::map<std::string, std::string>;

// "{{name}}" substitutes; "{{#name}}...{{/name}}" keeps its body only when
// `name` is present and non-empty. A missing plain placeholder throws
// ValidationError("unresolved placeholder ...").
std::string render(std::string_view format, const Vars& vars);

// A template file is a list of "@@ name" headed sections. Text before the
// first header is ignored, so files may start with free-form notes.
class PromptTemplate {
public:
    static PromptTemplate parse(std::string name, std::string_view text);

    const std::string& name() const { return name_; }
    Grammar grammar() const { return grammar_; }
    bool has(const std::string& section) const { return sections_.count(section) > 0; }
    // Throws ValidationError for an unknown section.
    const std::string& section(const std::string& name) const;

private:
    std::string name_;
    Grammar grammar_ = Grammar::GridHouse;
    std::map<std::string, std::string> sections_;
};

const PromptTemplate& default_template(Grammar grammar);
PromptTemplate load_template(const std::string& path);

// What the renderers need from a running episode. thoughts may be shorter
// than actions (previous thoughts are optional context).
struct EpisodeView {
    corpus::TaskSpec task;
    std::vector<std::string> observations;  // o_0 .. o_t
    std::vector<std::string> actions;       // a_0 .. a_{t-1}
    std::vector<std::string> thoughts;      // tau_0 .. tau_{t-1}, optional
    align::HistoryMode mode = align::HistoryMode::FullHistory;
};

// Whole trajectories as demonstrations; thoughts are shown when present.
std::vector<ChatMessage> render_thought_prompt(const PromptTemplate& tpl,
                                               const std::vector<corpus::AnnotatedTrajectory>& demos,
                                               const EpisodeView& episode);

// The target's expert action at step_index is shown before the thought cue.
std::vector<ChatMessage> render_preparation_prompt(const PromptTemplate& tpl,
                                                   const std::vector<corpus::AnnotatedTrajectory>& exemplars,
                                                   const corpus::Trajectory& target, int step_index,
                                                   align::HistoryMode mode = align::HistoryMode::FullHistory);

std::vector<ChatMessage> render_action_prompt(const PromptTemplate& tpl, const align::AlignedContext& ctx);

// Appended after a reply that could not be parsed.
ChatMessage corrective_message(const PromptTemplate& tpl);

std::string parse_action(std::string_view raw, Grammar grammar);
std::string parse_thought(std::string_view raw);

// Canonical form of a grammar-valid action, nullopt otherwise.
std::optional<std::string> canonical_action(std::string_view text, Grammar grammar);

struct WebAction {
    std::string op;  // CLICK | TYPE | SELECT
    std::string element_id;
    std::string value;

    std::string str() const;
    bool operator==(const WebAction&) const = default;
};

std::optional<WebAction> parse_web_action(std::string_view text);

// Stable content hash of a message list, for logs and caching.
std::string prompt_hash(const std::vector<ChatMessage>& messages);

namespace detail {
extern const char* const kGridhouseTemplate;
extern const char* const kWebTemplate;
}  // namespace detail

}  // namespace trad::prompt
