#include "coweave/meanfield/limit.hpp"

#include <algorithm>
#include <cmath>

#include "coweave/core/error.hpp"
#include "coweave/sim/dynamics.hpp"

namespace coweave {

limit_system limit_system::from_triplet(const step_triplet& source, int k_paths) {
    source.validate();
    if (k_paths < 1) throw config_error("limit: path count K must be >= 1");
    const std::int64_t total =
        static_cast<std::int64_t>(source.n_labels) * static_cast<std::int64_t>(k_paths);
    if (total < 2) throw config_error("limit: need at least 2 entities (M*K >= 2)");
    if (total > kMaxLimitEntities) {
        throw resource_error("limit: M*K = " + std::to_string(total) + " exceeds the cap of " +
                             std::to_string(kMaxLimitEntities));
    }

    limit_system sys;
    sys.m_labels = source.n_labels;
    sys.k_paths = k_paths;
    sys.dim = source.dim;
    const int n = static_cast<int>(total);
    sys.ens = particle_ensemble::make(n, source.dim);
    sys.entity_masses.resize(static_cast<std::size_t>(n));
    for (int e = 0; e < n; ++e) {
        const int m = e / k_paths;
        sys.entity_masses[static_cast<std::size_t>(e)] =
            source.masses[static_cast<std::size_t>(m)] / static_cast<double>(k_paths);
        for (int c = 0; c < source.dim; ++c) {
            sys.ens.states[static_cast<std::size_t>(e) * source.dim + c] =
                source.state_at(m)[c];
        }
    }
    for (int e = 0; e < n; ++e) {
        const int me = e / k_paths;
        for (int f = 0; f < n; ++f) {
            const int mf = f / k_paths;
            sys.ens.weights[static_cast<std::size_t>(e) * n + f] = source.kernel_at(me, mf);
        }
    }
    sys.ens.w0_sup = sys.ens.weight_sup();
    return sys;
}

void check_frame_budget(int n_entities, int dim, std::int64_t n_steps, bool store_weights) {
    const double frames = static_cast<double>(n_steps) + 1.0;
    double bytes = frames * static_cast<double>(n_entities) * dim * 8.0;
    if (store_weights) {
        bytes += frames * static_cast<double>(n_entities) * static_cast<double>(n_entities) * 8.0;
    }
    constexpr double kBudget = 3e9;
    if (bytes > kBudget) {
        throw resource_error("limit: recording " + std::to_string(n_steps) + " frames of " +
                             std::to_string(n_entities) + " entities needs ~" +
                             std::to_string(bytes / 1e9) + " GB (budget 3 GB)");
    }
}

limit_solution solve_limit(const step_triplet& source, int k_paths,
                           const coefficient_set& coeffs, const domain& dom,
                           const time_grid& grid, const counter_rng& rng, int threads,
                           const std::vector<double>& snapshot_times, bool store_weights) {
    limit_system sys = limit_system::from_triplet(source, k_paths);
    if (dom.dim != sys.dim) throw config_error("limit: domain dimension does not match the source");
    sys.ens.validate(dom);
    check_frame_budget(sys.n_entities(), sys.dim, grid.n_steps, store_weights);

    std::vector<std::int64_t> snaps;
    snaps.reserve(snapshot_times.size());
    for (double t : snapshot_times) snaps.push_back(grid.step_of(t));
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    limit_solution out;
    out.state_frames.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    if (store_weights) out.weight_frames.reserve(static_cast<std::size_t>(grid.n_steps) + 1);

    auto record_frames = [&]() {
        out.state_frames.push_back(sys.ens.states);
        if (store_weights) out.weight_frames.push_back(sys.ens.weights);
    };
    auto maybe_snapshot = [&](std::int64_t k) {
        if (std::binary_search(snaps.begin(), snaps.end(), k)) {
            sys.ens.validate(dom);
            check_weight_bound(sys.ens, coeffs, grid.dt, 0.0);
            out.snapshots.push_back(sys.ens);
        }
    };

    const dynamics_variant var = dynamics_variant::base();
    step_workspace ws;
    record_frames();
    for (std::int64_t k = 0; k < grid.n_steps; ++k) {
        maybe_snapshot(k);
        advance_coupled(sys.ens.states.data(), sys.ens.weights.data(), sys.entity_masses.data(),
                        sys.n_entities(), sys.dim, dom, coeffs, var, grid.dt, k, rng, threads,
                        ws);
        sys.ens.step_index = static_cast<int>(k) + 1;
        sys.ens.t = grid.time_at(sys.ens.step_index);
        record_frames();
    }
    maybe_snapshot(grid.n_steps);
    sys.ens.validate(dom);
    check_weight_bound(sys.ens, coeffs, grid.dt, 0.0);
    out.final_state = std::move(sys);
    return out;
}

}  // namespace coweave
