#pragma once

// Independent mixture sampling of a step triplet: one label per agent from
// its mixture row, states and weights copied from the source by label.
// The label draws are shared with kernel-level sampling (same seed, same
// labels), so kernel-only and full-triplet experiments stay aligned.

#include <cstdint>
#include <vector>

#include "coweave/core/mixture.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/sim/ensemble.hpp"

namespace coweave {

struct mixture_sample {
    std::vector<int> labels;     // xi_i, one per agent
    particle_ensemble ensemble;  // X_i = states[xi_i], w_ij = kernel[xi_i, xi_j]
};

mixture_sample sample_mixture(const step_triplet& source, const mixture_spec& mix,
                              const counter_rng& rng, std::uint64_t entity_base = 0);

}  // namespace coweave
