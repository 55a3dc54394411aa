#pragma once

// Discretized mean-field limit: the continuum of states indexed by
// (label, driving path) is replaced by M labels times K independent noise
// streams. Expectations against the limit law become mass-weighted averages
// over the M*K entities (entity (m,k) carries mass masses[m]/K), and the
// coupled state/weight dynamics advance with the exact same stepping routine
// as the finite ensemble, so the K=1, noise-free, Dirac-sampled limit
// reproduces the particle trajectory bit for bit.

#include <cstdint>
#include <vector>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/time_grid.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/sim/ensemble.hpp"

namespace coweave {

// Hard cap on M*K (dense weights are (M*K)^2 doubles).
inline constexpr int kMaxLimitEntities = 8192;

struct limit_system {
    int m_labels = 0;
    int k_paths = 1;
    int dim = 1;
    std::vector<double> entity_masses;  // M*K entries, masses[m] / K
    particle_ensemble ens;              // M*K entities; entity (m,k) at row m*K + k

    int n_entities() const { return m_labels * k_paths; }
    int label_of(int entity) const { return entity / k_paths; }

    // Entity (m,k) starts at the label-m state; initial weights are the
    // kernel values by label pair (diagonal included).
    static limit_system from_triplet(const step_triplet& source, int k_paths);
};

struct limit_solution {
    limit_system final_state;
    // Per-step states (n_steps + 1 frames of (M*K) x dim), always recorded:
    // the shadow propagation and the integral-form cross-check replay them.
    std::vector<std::vector<double>> state_frames;
    // Per-step weights, recorded only on request (quadratic storage).
    std::vector<std::vector<double>> weight_frames;
    std::vector<particle_ensemble> snapshots;  // at requested times
};

// Memory gate for frame recording; throws resource_error beyond ~3 GB.
void check_frame_budget(int n_entities, int dim, std::int64_t n_steps, bool store_weights);

// Integrates the discretized limit over the grid. Weight-sup bound checked
// at snapshots and at the end. Noise stream of entity e is keyed by e.
limit_solution solve_limit(const step_triplet& source, int k_paths,
                           const coefficient_set& coeffs, const domain& dom,
                           const time_grid& grid, const counter_rng& rng, int threads,
                           const std::vector<double>& snapshot_times = {},
                           bool store_weights = false);

}  // namespace coweave
