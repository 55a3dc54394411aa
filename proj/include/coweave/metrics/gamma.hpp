#pragma once

// Coupling-operator distance between step triplets.  A coupling induces a
// conditional-expectation operator between the two label spaces; the
// objective charges the coupled state cost plus the infinity-to-one norms
// of the two intertwining defects
//   T_{w1} T_gamma - T_gamma T_{w2}   and   T_gamma^* T_{w1} - T_{w2} T_gamma^*.
// The objective is convex in the coupling, so a conditional-gradient descent
// with exact transport subproblems gives reliable upper bounds.

#include "coweave/core/domain.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/metrics/transport.hpp"

namespace coweave {

struct gamma_result {
    double value = 0.0;
    double state_part = 0.0;
    double op_part_left = 0.0;   // defect seen from side 1
    double op_part_right = 0.0;  // defect seen from side 2
    coupling plan;
    int rounds = 0;
};

// Evaluates the objective at a given coupling.  The infinity-to-one norms
// are exact (sign-vector enumeration) when the enumerated side has <= 16
// labels, otherwise a deterministic alternating heuristic lower-bounds them.
double gamma_objective(const step_triplet& t1, const step_triplet& t2, const domain& dom,
                       const coupling& g);

// Same evaluation with the parts broken out.
gamma_result gamma_evaluate(const step_triplet& t1, const step_triplet& t2,
                            const domain& dom, const coupling& g);

// Conditional-gradient descent from structured starts (product coupling,
// state-transport vertex, identity and residue-class couplings when both
// sides are uniform with equal size, seeded random vertices).
gamma_result gamma_heuristic(const step_triplet& t1, const step_triplet& t2,
                             const domain& dom, const counter_rng& rng,
                             int restarts = 8, int max_rounds = 50);

// Uniform coupling of residue classes: gamma[i][j] = modulus / n^2 when
// i == j (mod modulus), else 0.  Valid for uniform masses on both sides.
coupling residue_coupling(int n, int modulus);

}  // namespace coweave
