#pragma once

// Random vertex sampling of a step kernel: draw one label per mixture row
// and return the induced kernel on the drawn labels with uniform masses
// 1/n.  Used to study how fast sampled kernels approach the original in
// cut norm.

#include <cstdint>
#include <vector>

#include "coweave/core/mixture.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/graphon/kernel.hpp"

namespace coweave {

struct sampled_kernel {
    std::vector<int> labels;  // index into the source kernel, one per row
    step_kernel kernel;       // n_rows x n_rows, uniform masses
};

// Draws label xi_i from mixture row i (inverse CDF on the row, rng role
// `label`, entity ids entity_base + i), then forms the induced kernel
// k[xi_i, xi_j] with uniform masses.  Dirac rows reproduce k exactly.
sampled_kernel sample_kernel(const step_kernel& k, const mixture_spec& mix,
                             const counter_rng& rng, std::uint64_t entity_base = 0);

}  // namespace coweave
