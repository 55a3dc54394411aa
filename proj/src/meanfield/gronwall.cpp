#include "coweave/meanfield/gronwall.hpp"

#include <cmath>

#include "coweave/core/error.hpp"

namespace coweave {

gronwall_pair gronwall_constants(const coefficient_set& coeffs, int dim, double w_sup) {
    if (dim < 1) throw config_error("gronwall: dimension must be >= 1");
    if (!(w_sup >= 0.0) || !std::isfinite(w_sup)) {
        throw config_error("gronwall: weight sup bound must be finite and >= 0");
    }
    const coefficient_bounds& b = coeffs.bounds;
    const double sigma_sup_vec = std::sqrt(static_cast<double>(dim)) * b.sigma_sup;
    gronwall_pair g;
    g.c1 = 2.0 * b.alpha_lip * w_sup + b.alpha_sup + 2.0 * b.beta_lip + b.mu_lip +
           2.0 * b.sigma_lip * w_sup + sigma_sup_vec;
    g.c2 = 3.0 * w_sup * sigma_sup_vec;
    return g;
}

double gronwall_envelope(const gronwall_pair& g, double t, int n_agents) {
    if (n_agents < 1) throw config_error("gronwall: agent count must be >= 1");
    return std::exp(g.c1 * t) * g.c2 * t / std::sqrt(static_cast<double>(n_agents));
}

}  // namespace coweave
