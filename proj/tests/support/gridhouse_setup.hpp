#pragma once

// The standard GridHouse setup: expert memory over seeds [0, n) for every
// task kind, labelled by the oracle backend from seed-500 expert exemplars.

#include "trad/agents.hpp"
#include "trad/world.hpp"

namespace setup {

inline std::vector<trad::corpus::AnnotatedTrajectory> gridhouse_exemplars(std::uint64_t seed = 500) {
    std::vector<trad::corpus::AnnotatedTrajectory> out;
    for (auto kind : trad::world::kAllKinds) {
        auto run = trad::world::run_expert(seed, kind);
        out.push_back({run.trajectory, run.thoughts});
    }
    return out;
}

inline trad::corpus::Memory annotated_gridhouse_memory(int n_seeds) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
    auto memory = trad::world::build_memory(seeds, {trad::world::kAllKinds.begin(), trad::world::kAllKinds.end()});
    auto oracle = trad::backend::make_backend({});
    trad::agents::prepare_thoughts(memory, gridhouse_exemplars(), *oracle,
                                   trad::prompt::default_template(trad::prompt::Grammar::GridHouse));
    return memory;
}

inline std::shared_ptr<const trad::embed::Embedder> hash_embedder(std::size_t dim = 256) {
    return std::make_shared<trad::embed::HashEmbedder>(dim);
}

}  // namespace setup
