#pragma once

// Synthetic web-navigation replay data: seeded multi-step tasks on a handful
// of template websites, each step showing five pre-ranked candidate elements.

#include "trad/corpus.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trad::webgen {

struct WebElement {
    std::string id;
    std::string tag;
    std::string label;

    bool operator==(const WebElement&) const = default;
};

// "[812] <input> From ; [77] <button> Search flights"
std::string render_observation(const std::vector<WebElement>& elements);
std::vector<WebElement> parse_observation(std::string_view text);

inline constexpr const char* kGoldElementKey = "gold_element_id";

struct WebCorpus {
    corpus::Memory memory;               // expert trajectories, unannotated
    std::vector<corpus::Trajectory> cross_task;
    std::vector<corpus::Trajectory> cross_website;
    std::vector<corpus::Trajectory> cross_domain;
};

// Memory tasks come from the "seen" websites; cross_task uses new tasks on
// those websites, cross_website unseen websites of seen domains, and
// cross_domain a domain absent from memory.
WebCorpus generate_web_corpus(std::uint64_t seed, int memory_tasks_per_site = 6, int test_tasks_per_site = 4);

// The reason sentence used by web exemplars and the oracle. `next` is the
// upcoming action phrase, or empty when it is not known yet.
std::string compose_reason(const std::string& task, const std::vector<std::string>& previous_actions,
                           const std::string& next);

// Hand-style exemplars: the given trajectories with one reason per step.
std::vector<corpus::AnnotatedTrajectory> reason_exemplars(const std::vector<corpus::Trajectory>& trajectories);

// A dataset file holds one split; task.meta["split"] names it.
corpus::Memory as_dataset(const std::vector<corpus::Trajectory>& trajectories);

}  // namespace trad::webgen
