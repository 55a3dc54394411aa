#pragma once

// Live state of the finite-N coupled system: one domain point per agent and
// a dense weight matrix, advanced in lock-step.  The weight matrix obeys an
// a-priori sup bound derived from the coefficient bounds; `weight_linf_bound`
// computes it and `check_weight_bound` asserts it (with integrator slack).

#include <cstdint>
#include <string>
#include <vector>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/meanfield/triplet.hpp"

namespace coweave {

struct particle_ensemble {
    int n_agents = 0;
    int dim = 1;
    double t = 0.0;
    int step_index = 0;
    std::vector<double> states;   // n_agents x dim
    std::vector<double> weights;  // n_agents x n_agents
    double w0_sup = 0.0;          // sup |weights| at construction time
    // Weight-noise variant bookkeeping: per-pair compounded pure-noise
    // component (sized n^2 lazily) and the running max of its magnitude;
    // the a-priori weight bound gains eta * noise_sup.
    std::vector<double> noise_accum;
    double noise_sup = 0.0;

    double weight_at(int i, int j) const {
        return weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_agents) +
                       static_cast<std::size_t>(j)];
    }
    const double* state_at(int i) const {
        return &states[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim)];
    }

    double weight_sup() const;
    // Sizes consistent, all entries finite, torus states reduced.
    void validate(const domain& dom) const;

    static particle_ensemble make(int n_agents, int dim, double t = 0.0);
};

// Uniform-mass triplet view of the ensemble: mass 1/N per agent, states and
// weights copied as-is.  This is what the metrics compare.
step_triplet to_triplet(const particle_ensemble& ens);

// A-priori sup bound on |w(t)|: exp(sup|alpha| t) (sup|w(0)| + sup|beta| t).
double weight_linf_bound(const coefficient_bounds& b, double w0_sup, double t);

// Throws numerical_error when sup |weights| exceeds the bound plus 10*dt
// integrator slack (plus eta * noise_sup for the noisy-weight variant).
void check_weight_bound(const particle_ensemble& ens, const coefficient_set& coeffs,
                        double dt, double eta);

// Snapshot file: "N,d,t" header row, then N state rows, then N weight rows.
void save_snapshot(const particle_ensemble& ens, const std::string& path);
particle_ensemble load_snapshot(const std::string& path);

}  // namespace coweave
