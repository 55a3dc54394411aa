#pragma once

// Combined state/weight distance between step triplets: a coupling of the
// two label spaces is charged the mass-weighted state transport cost plus
// the cut norm of the coupled weight difference
//   D((a,b),(a',b')) = w1(a,a') - w2(b,b')
// on the coupled label space.  `delta_exact_small` minimizes over all
// relabelings (couplings concentrated on bijections) by brute force;
// `delta_heuristic` alternates between extracting cut witnesses of the
// coupled difference and re-solving a transport problem whose cost adds the
// witness terms to the state distance.

#include <cstdint>

#include "coweave/core/domain.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/graphon/kernel.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/metrics/transport.hpp"

namespace coweave {

struct delta_result {
    double value = 0.0;       // state_part + cut_part
    double state_part = 0.0;  // transport cost of states under the coupling
    double cut_part = 0.0;    // cut norm of the coupled weight difference
    coupling plan;
    bool certified = false;  // exhaustive search (exact mode) vs best-found
    int rounds = 0;
};

// Brute force over all n! relabelings; requires n1 == n2 == n <= 8 and
// uniform masses on both sides.  The evaluation orientation is normalized
// (lexicographically smaller triplet first) so the result is symmetric in
// its arguments down to the last bit.
delta_result delta_exact_small(const step_triplet& t1, const step_triplet& t2,
                               const domain& dom);

// Kernel-only variant of the brute force (states ignored): minimum over
// relabelings of the exact cut norm of k1 - k2 o phi.  Same preconditions.
double cut_distance_exact_small(const step_kernel& k1, const step_kernel& k2);

// Alternating witness/transport descent over the full coupling polytope;
// `restarts` deterministic starts (state-transport vertex, product,
// identity when applicable, then seeded random transport vertices), up to
// `max_rounds` alternations each, improvement threshold 1e-9.  Returns the
// best coupling found; on small coupled supports the final cut part is
// re-evaluated exactly, so the value is a true upper bound there.
delta_result delta_heuristic(const step_triplet& t1, const step_triplet& t2,
                             const domain& dom, const counter_rng& rng,
                             int restarts = 8, int max_rounds = 50);

}  // namespace coweave
