#pragma once

// Coupled particle/shadow runs: each replica samples labels for N agents,
// integrates (a) the interacting N-particle system and (b) per-particle
// shadow processes that consume the *same* Brownian increments but whose
// drift averages against a precomputed discretized-limit reference. The
// gap between the two — max_i E|X_i - Y_i| in state and max_{i<>j}
// E|w_ij - v_ij| in weight — is the finite-size propagation error G(t),
// reported with Monte Carlo standard errors and the explicit envelope
// exp(C1 t) C2 t / sqrt(N).
//
// The reference trajectory is solved once per call and shared by all
// replicas (cost: one M*K solve instead of `replicas` of them). Replica
// estimates are therefore conditioned on that one reference draw; the
// reported standard errors do not include the O(1/sqrt(M*K)) reference
// bias, which `low_resolution` flags when M*K < 4N.

#include <cstdint>
#include <vector>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/core/mixture.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/time_grid.hpp"
#include "coweave/meanfield/gronwall.hpp"
#include "coweave/meanfield/triplet.hpp"

namespace coweave {

struct propagation_row {
    double t = 0.0;
    double g_state = 0.0;
    double g_state_stderr = 0.0;
    double g_weight = 0.0;
    double g_weight_stderr = 0.0;
    double envelope = 0.0;  // exp(c1 t) c2 t / sqrt(N)
};

struct propagation_result {
    int n_agents = 0;
    int m_labels = 0;
    int k_paths = 0;
    int replicas = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    double w_sup = 0.0;          // a-priori weight bound backing c1/c2
    bool low_resolution = false; // M*K < 4N: reference bias may dominate
    std::vector<propagation_row> rows;  // one per snapshot time, ascending
};

// N is mix.n_rows. Snapshot times must lie on the grid; every run also
// checks the weight sup bound on the particle side at each snapshot.
propagation_result coupled_propagation_error(const step_triplet& source,
                                             const mixture_spec& mix,
                                             const coefficient_set& coeffs, const domain& dom,
                                             const time_grid& grid, int k_paths, int replicas,
                                             const counter_rng& rng, int threads,
                                             const std::vector<double>& snapshot_times);

}  // namespace coweave
