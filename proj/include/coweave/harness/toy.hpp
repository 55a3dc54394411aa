#pragma once

// Two hand-built n-agent systems whose interaction totals cancel exactly:
// identical periodic initial states (period n/6) but structurally different
// weight matrices — a complete-bipartite layout of value 2 on two halves
// versus a directed cycle of value 3 on three thirds.  Every agent sees the
// same per-class interaction mass in both systems, so under noise-free
// dynamics the state trajectories coincide while the weight matrices stay
// far apart in cut distance; the residue coupling of period n/6 exhibits a
// zero value of the operator-coupling objective.

#include "coweave/meanfield/triplet.hpp"
#include "coweave/metrics/transport.hpp"

namespace coweave {

struct toy_pair {
    step_triplet bipartite;  // weight 2 between the two halves
    step_triplet cycle;      // weight 3 along the directed cycle of thirds
};

// n must be a positive multiple of 6.  Uniform masses, 1-D states taking the
// fixed values 0.7 (even residue mod n/6) and 2.3 (odd residue).
toy_pair make_toy_pair(int n);

// The witness coupling for the pair: residue classes mod n/6 coupled
// uniformly, entry 1/(6n) when i == j (mod n/6).
coupling toy_periodic_coupling(int n);

}  // namespace coweave
