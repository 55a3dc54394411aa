#pragma once

// Explicit constants for the finite-size error envelope: the coupled
// particle/shadow difference satisfies G(t) <= exp(C1 t) * C2 * t / sqrt(N)
// with C1, C2 assembled from the declared coefficient bounds and an a-priori
// weight sup bound. Scalar interaction bounds are declared per component;
// the vector sup norm over d components scales them by sqrt(d).

#include "coweave/core/coefficients.hpp"

namespace coweave {

struct gronwall_pair {
    double c1 = 0.0;
    double c2 = 0.0;
};

// w_sup must dominate sup_t |w(t)| on the horizon of interest (use
// weight_linf_bound at t_end).
gronwall_pair gronwall_constants(const coefficient_set& coeffs, int dim, double w_sup);

double gronwall_envelope(const gronwall_pair& g, double t, int n_agents);

}  // namespace coweave
