#pragma once

// Explicit Euler-Maruyama stepper for the coupled state/weight system.
//
// The same low-level routine (`advance_coupled`) drives both the finite
// ensemble and the discretized mean-field system: the caller supplies a
// per-entity interaction mass vector (1/N for particles, label mass / K for
// the limit). Interaction sums are mass-weighted per term; the j == i term
// is excluded from the state drift while w_ii itself still evolves.
//
// Determinism contract: results depend only on (seed, initial data,
// coefficients, variant, dt, step count), never on the thread count. Two
// entity loops with identical inputs produce identical bits because each
// row's accumulation order is fixed (strictly ascending j on the generic
// path, a fixed four-lane unroll on the trig fast path).

#include <cstdint>
#include <string>
#include <vector>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/time_grid.hpp"
#include "coweave/sim/ensemble.hpp"

namespace coweave {

// Weight-dynamics variant:
//   base:         dw = alpha(x_i, x_j) w dt + beta(x_i, x_j) dt
//   decay_ou:     dw = (beta(x_i, x_j) - w) / epsilon dt
//   weight_noise: base drift plus eta * sqrt(dt) * g_ij per step
struct dynamics_variant {
    enum class kind { base, decay_ou, weight_noise };
    kind k = kind::base;
    double epsilon = 1.0;  // decay_ou relaxation time, > 0
    double eta = 0.0;      // weight_noise amplitude, >= 0

    static dynamics_variant base() { return {}; }
    static dynamics_variant decay_ou(double epsilon);
    static dynamics_variant weight_noise(double eta);
    static dynamics_variant parse(const std::string& name, double epsilon, double eta);

    std::string label() const;
    void validate() const;
};

// Scratch buffers reused across steps (all sized lazily per call).
struct step_workspace {
    std::vector<double> new_states;     // n x dim
    std::vector<double> sin_x, cos_x;   // n x dim, row-major (trig path)
    std::vector<double> msin, mcos;     // dim x n, component-major, mass-scaled
    std::vector<double> a1, a2;         // separable weight-growth factors
    std::vector<double> umass;          // cached uniform 1/N masses
    std::vector<double> task_max;       // per-row partial maxima (noise sup)
};

// True when every coefficient admits the closed-form trigonometric path
// (sigma sine-shaped or zero, beta cosine-shaped / constant / zero, both
// growth factors constant or zero).
bool trig_path_applies(const coefficient_set& coeffs);

// One Euler step for n entities of dimension `dim`.
//   states       n x dim, updated in place (reduced onto the domain)
//   weights      n x n, updated in place
//   masses       n interaction masses (per-term multipliers)
//   step_index   supplies the noise counter; state noise for entity i reads
//                (entity=i, step, role=state, slot=component), weight noise
//                for pair (i,j) reads (entity=i*n+j, step, role=weight)
//   noise_accum  optional n x n buffer: compounded pure-noise component of
//                each weight (weight_noise variant); *noise_sup tracks its
//                running sup for the a-priori bound check
// Throws numerical_error (with step and entity) on non-finite states.
void advance_coupled(double* states, double* weights, const double* masses, int n,
                     int dim, const domain& dom, const coefficient_set& coeffs,
                     const dynamics_variant& var, double dt, std::int64_t step_index,
                     const counter_rng& rng, int threads, step_workspace& ws,
                     double* noise_accum = nullptr, double* noise_sup = nullptr);

// Advances a particle ensemble by one step (uniform masses 1/N); bumps
// step_index and t. The weight-noise variant lazily allocates the
// ensemble's noise_accum buffer and keeps noise_sup current.
void step(particle_ensemble& ens, const domain& dom, const coefficient_set& coeffs,
          const dynamics_variant& var, double dt, const counter_rng& rng, int threads,
          step_workspace& ws);

struct simulation_result {
    std::vector<particle_ensemble> snapshots;  // at requested times, ascending
    particle_ensemble final_state;
};

// Runs the ensemble over the grid, recording copies at `snapshot_times`
// (each must lie on the grid). When check_bound is set, the weight sup
// bound is asserted at every snapshot and at the final time.
simulation_result simulate(const particle_ensemble& init, const domain& dom,
                           const coefficient_set& coeffs, const dynamics_variant& var,
                           const time_grid& grid, const counter_rng& rng, int threads,
                           const std::vector<double>& snapshot_times,
                           bool check_bound = true);

// Quadrature reference for the decay_ou weights on a recorded state path
// (state_path[k] = n x dim states at time k*dt, k = 0..K): the exact
// relaxation solution with the forcing integral evaluated by the composite
// trapezoid rule. Returns the n x n weight matrix at time K*dt.
std::vector<double> ou_weight_quadrature(const std::vector<std::vector<double>>& state_path,
                                         const std::vector<double>& w0, int n, int dim,
                                         const coefficient_set& coeffs, double epsilon,
                                         double dt);

}  // namespace coweave
