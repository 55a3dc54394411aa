#pragma once

// Integral-form fixed-point operator for the discretized limit: maps a
// candidate state/weight path to the path obtained by trapezoid quadrature
// of the drift and weight-growth integrands along the candidate, with the
// same per-(entity, step) noise realization the time stepper consumes.
// Serves as an independent order-dt consistency oracle for solve_limit
// (the Euler solution is a near fixed point) and exhibits the contraction
// that grounds well-posedness on short horizons.

#include <cstdint>
#include <vector>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/time_grid.hpp"
#include "coweave/meanfield/limit.hpp"

namespace coweave {

struct picard_frames {
    std::vector<std::vector<double>> states;   // n_steps+1 frames of n x dim
    std::vector<std::vector<double>> weights;  // n_steps+1 frames of n x n
};

// Path that sits at the initial data for every frame.
picard_frames constant_guess(const limit_system& init, std::int64_t n_steps);

// View of a recorded solution (requires solve_limit(..., store_weights=true)).
picard_frames frames_of(const limit_solution& sol);

picard_frames picard_apply(const picard_frames& candidate, const limit_system& init,
                           const coefficient_set& coeffs, const domain& dom,
                           const time_grid& grid, const counter_rng& rng, int threads);

// Sup over frames and entities of the state distance (domain geodesic)
// plus sup over frames and pairs of the weight difference.
double frames_sup_distance(const picard_frames& a, const picard_frames& b, const domain& dom,
                           int dim);

}  // namespace coweave
