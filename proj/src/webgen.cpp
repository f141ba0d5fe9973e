#include "trad/webgen.hpp"

#include "trad/error.hpp"
#include "trad/prompt.hpp"
#include "trad/util.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace trad::webgen {

namespace {

struct Field {
    std::string op;     // CLICK | TYPE | SELECT
    std::string tag;
    std::string label;  // may reference slots as {0}, {1}, ...
    int slot = -1;      // value slot for TYPE/SELECT
};

struct Site {
    std::string name;
    std::string domain;
    std::string task_format;
    std::vector<int> pools;  // slot -> pool index
    std::vector<Field> fields;
};

const std::vector<std::vector<std::string>>& pools() {
    static const std::vector<std::vector<std::string>> kPools = {
        {"Boston", "Denver", "Seattle", "Miami", "Chicago", "Austin", "Portland", "Atlanta", "Dallas", "Phoenix"},
        {"May 3", "May 17", "June 10", "June 24", "July 8", "July 19", "August 2", "August 30"},
        {"red", "blue", "black", "green", "white", "grey"},
        {"running shoes", "rain jacket", "wool socks", "denim shorts", "hiking boots", "linen shirt"},
        {"small", "medium", "large", "extra large"},
        {"sports", "science", "business", "travel", "health"},
        {"the marathon", "solar panels", "interest rates", "rail strikes", "flu season", "city budget"},
    };
    return kPools;
}

// Seen sites first, then the unseen sites of seen domains, then the held-out domain.
const std::vector<Site>& sites() {
    static const std::vector<Site> kSites = {
        {"skyfare", "travel", "Book a one-way flight from {0} to {1} on {2}.", {0, 0, 1},
         {{"TYPE", "input", "From", 0},
          {"TYPE", "input", "To", 1},
          {"SELECT", "select", "Departure date", 2},
          {"CLICK", "button", "Search flights", -1},
          {"CLICK", "button", "Select cheapest fare", -1}}},
        {"rentwheels", "travel", "Rent a car in {0} from {1} until {2}.", {0, 1, 1},
         {{"TYPE", "input", "Pick-up location", 0},
          {"SELECT", "select", "Pick-up date", 1},
          {"SELECT", "select", "Drop-off date", 2},
          {"CLICK", "button", "Search cars", -1},
          {"CLICK", "button", "Choose economy", -1}}},
        {"shopmart", "shopping", "Buy {1} in {0} in size {2}.", {2, 3, 4},
         {{"TYPE", "input", "Search products", 1},
          {"CLICK", "button", "Search", -1},
          {"CLICK", "checkbox", "Color {0}", -1},
          {"SELECT", "select", "Size", 2},
          {"CLICK", "button", "Add to cart", -1}}},
        {"jetquest", "travel", "Find a flight leaving {0} for {1} on {2}.", {0, 0, 1},
         {{"TYPE", "input", "Leaving from", 0},
          {"TYPE", "input", "Going to", 1},
          {"SELECT", "select", "Depart on", 2},
          {"CLICK", "button", "Find flights", -1}}},
        {"buynest", "shopping", "Order {0} {1} in size {2}.", {2, 3, 4},
         {{"TYPE", "input", "What are you looking for", 1},
          {"CLICK", "button", "Go", -1},
          {"CLICK", "link", "Shade {0}", -1},
          {"SELECT", "select", "Choose size", 2},
          {"CLICK", "button", "Add to bag", -1}}},
        {"dailynews", "news", "Read the latest {0} story about {1}.", {5, 6},
         {{"CLICK", "link", "Section {0}", -1},
          {"TYPE", "input", "Search articles", 1},
          {"CLICK", "button", "Search", -1},
          {"CLICK", "link", "Most recent", -1}}},
    };
    return kSites;
}

constexpr std::size_t kSeenSites = 3;
constexpr std::size_t kCrossWebsiteEnd = 5;

const std::vector<std::pair<std::string, std::string>>& generic_elements() {
    static const std::vector<std::pair<std::string, std::string>> kGeneric = {
        {"link", "Sign in"},       {"link", "Help center"},  {"button", "Deals"},
        {"link", "Gift cards"},    {"link", "Careers"},      {"link", "Contact us"},
        {"button", "Subscribe"},   {"link", "Privacy policy"}, {"link", "Home"},
        {"select", "Language"},    {"button", "Accept cookies"}, {"link", "Store locator"},
    };
    return kGeneric;
}

std::string fill(const std::string& format, const std::vector<std::string>& slots) {
    std::string out = format;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const std::string key = "{" + std::to_string(i) + "}";
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + slots[i].size()))
            out.replace(pos, key.size(), slots[i]);
    }
    return out;
}

std::vector<std::string> draw_slots(const Site& site, util::SplitMix64& rng) {
    std::vector<std::string> slots;
    for (int pool : site.pools) {
        const auto& values = pools()[static_cast<std::size_t>(pool)];
        std::string v;
        do {
            v = values[rng.below(values.size())];
        } while (std::find(slots.begin(), slots.end(), v) != slots.end());
        slots.push_back(v);
    }
    return slots;
}

corpus::Trajectory make_task(const Site& site, const std::string& split, const std::string& id, util::SplitMix64& rng) {
    const auto slots = draw_slots(site, rng);
    corpus::Trajectory t;
    t.task.task_id = id;
    t.task.instruction = fill(site.task_format, slots);
    t.task.domain_tag = site.name;
    t.task.meta = {{"split", split}, {"website", site.name}, {"domain", site.domain}};

    std::vector<std::pair<std::string, std::string>> site_elements;
    for (const auto& f : site.fields) site_elements.emplace_back(f.tag, fill(f.label, slots));

    for (std::size_t si = 0; si < site.fields.size(); ++si) {
        const Field& f = site.fields[si];
        std::vector<std::pair<std::string, std::string>> pool;
        for (std::size_t j = 0; j < site_elements.size(); ++j)
            if (j != si) pool.push_back(site_elements[j]);
        for (const auto& g : generic_elements()) pool.push_back(g);

        std::vector<WebElement> elements;
        std::set<std::string> ids, labels;
        auto fresh_id = [&] {
            std::string id_str;
            do {
                id_str = std::to_string(rng.range(10, 9999));
            } while (!ids.insert(id_str).second);
            return id_str;
        };
        elements.push_back({fresh_id(), site_elements[si].first, site_elements[si].second});
        labels.insert(site_elements[si].second);
        while (elements.size() < 5) {
            const auto& [tag, label] = pool[rng.below(pool.size())];
            if (!labels.insert(label).second) continue;
            elements.push_back({fresh_id(), tag, label});
        }
        const std::string gold_id = elements.front().id;
        for (std::size_t i = elements.size(); i > 1; --i) std::swap(elements[i - 1], elements[rng.below(i)]);

        prompt::WebAction action{f.op, gold_id, f.slot >= 0 ? slots[static_cast<std::size_t>(f.slot)] : ""};
        corpus::Step step;
        step.index = static_cast<int>(si);
        step.observation = render_observation(elements);
        step.action = action.str();
        step.meta[kGoldElementKey] = gold_id;
        t.steps.push_back(std::move(step));
    }
    return t;
}

std::string two_digits(int i) { return (i < 10 ? "0" : "") + std::to_string(i); }

}  // namespace

std::string render_observation(const std::vector<WebElement>& elements) {
    std::vector<std::string> parts;
    for (const auto& e : elements) parts.push_back("[" + e.id + "] <" + e.tag + "> " + e.label);
    return util::join(parts, " ; ");
}

std::vector<WebElement> parse_observation(std::string_view text) {
    static const std::regex kRe(R"(^\[([^\]\s]+)\]\s*<([A-Za-z]+)>\s*(.*)$)");
    std::vector<WebElement> out;
    for (const auto& part : util::split(text, ";")) {
        std::string s = util::trim(part);
        std::smatch m;
        if (std::regex_match(s, m, kRe)) out.push_back({m[1].str(), m[2].str(), util::trim(m[3].str())});
    }
    return out;
}

WebCorpus generate_web_corpus(std::uint64_t seed, int memory_tasks_per_site, int test_tasks_per_site) {
    if (memory_tasks_per_site < 0 || test_tasks_per_site < 0) throw ValidationError("task counts must be >= 0");
    WebCorpus out;
    const auto& all = sites();
    for (std::size_t s = 0; s < all.size(); ++s) {
        util::SplitMix64 rng(util::mix_seed(seed, util::fnv1a64(all[s].name)));
        if (s < kSeenSites) {
            for (int i = 0; i < memory_tasks_per_site; ++i)
                out.memory.add_trajectory(make_task(all[s], "memory", "web-" + all[s].name + "-m" + two_digits(i), rng));
            for (int i = 0; i < test_tasks_per_site; ++i)
                out.cross_task.push_back(make_task(all[s], "cross-task", "web-" + all[s].name + "-t" + two_digits(i), rng));
        } else {
            const bool same_domain = s < kCrossWebsiteEnd;
            auto& dest = same_domain ? out.cross_website : out.cross_domain;
            const std::string split = same_domain ? "cross-website" : "cross-domain";
            for (int i = 0; i < test_tasks_per_site; ++i)
                dest.push_back(make_task(all[s], split, "web-" + all[s].name + "-t" + two_digits(i), rng));
        }
    }
    return out;
}

std::string compose_reason(const std::string& task, const std::vector<std::string>& previous_actions,
                           const std::string& next) {
    std::string done = "None";
    if (!previous_actions.empty())
        done = std::to_string(previous_actions.size()) + " actions: " + util::join(previous_actions, "; ");
    return "I have to find: " + task + " / Now I have done: " + done + " / Therefore, next I have to: " +
           (next.empty() ? std::string("choose the element that serves the next part of the task") : next) + ".";
}

std::vector<corpus::AnnotatedTrajectory> reason_exemplars(const std::vector<corpus::Trajectory>& trajectories) {
    std::vector<corpus::AnnotatedTrajectory> out;
    for (const auto& t : trajectories) {
        corpus::AnnotatedTrajectory a{t, {}};
        std::vector<std::string> previous;
        for (const auto& s : t.steps) {
            std::string next = s.action;
            auto act = prompt::parse_web_action(s.action);
            for (const auto& e : parse_observation(s.observation))
                if (act && e.id == act->element_id) next += " on " + e.tag + " " + e.label;
            a.thoughts.push_back(compose_reason(t.task.instruction, previous, next));
            previous.push_back(s.action);
        }
        out.push_back(std::move(a));
    }
    return out;
}

corpus::Memory as_dataset(const std::vector<corpus::Trajectory>& trajectories) {
    corpus::Memory m;
    for (const auto& t : trajectories) m.add_trajectory(t);
    return m;
}

}  // namespace trad::webgen
