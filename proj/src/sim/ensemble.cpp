#include "coweave/sim/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "coweave/core/csv.hpp"
#include "coweave/core/error.hpp"

namespace coweave {

double particle_ensemble::weight_sup() const {
    double sup = 0.0;
    for (double w : weights) sup = std::fmax(sup, std::fabs(w));
    return sup;
}

void particle_ensemble::validate(const domain& dom) const {
    if (n_agents < 1) throw config_error("ensemble: need at least one agent");
    if (dim != dom.dim) throw config_error("ensemble: dimension does not match the domain");
    const std::size_t n = static_cast<std::size_t>(n_agents);
    if (states.size() != n * static_cast<std::size_t>(dim)) {
        throw config_error("ensemble: state array has wrong size");
    }
    if (weights.size() != n * n) throw config_error("ensemble: weight matrix has wrong size");
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!std::isfinite(states[i])) {
            throw numerical_error("ensemble: non-finite state entry at flat index " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!std::isfinite(weights[i])) {
            throw numerical_error("ensemble: non-finite weight entry at flat index " + std::to_string(i));
        }
    }
    if (dom.geom == geometry::torus) {
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (states[i] < 0.0 || states[i] >= kTwoPi) {
                throw numerical_error("ensemble: torus state out of the fundamental window");
            }
        }
    }
}

particle_ensemble particle_ensemble::make(int n_agents, int dim, double t) {
    if (n_agents < 1) throw config_error("ensemble: need at least one agent");
    if (dim < 1) throw config_error("ensemble: dimension must be >= 1");
    particle_ensemble e;
    e.n_agents = n_agents;
    e.dim = dim;
    e.t = t;
    e.states.assign(static_cast<std::size_t>(n_agents) * static_cast<std::size_t>(dim), 0.0);
    e.weights.assign(static_cast<std::size_t>(n_agents) * static_cast<std::size_t>(n_agents), 0.0);
    return e;
}

double weight_linf_bound(const coefficient_bounds& b, double w0_sup, double t) {
    return std::exp(b.alpha_sup * t) * (w0_sup + b.beta_sup * t);
}

void check_weight_bound(const particle_ensemble& ens, const coefficient_set& coeffs,
                        double dt, double eta) {
    const double bound =
        weight_linf_bound(coeffs.bounds, ens.w0_sup, ens.t) + 10.0 * dt + eta * ens.noise_sup;
    const double sup = ens.weight_sup();
    if (!(sup <= bound)) {
        throw numerical_error("weight sup " + format_double(sup) + " exceeds the a-priori bound " +
                              format_double(bound) + " at t=" + format_double(ens.t));
    }
}

void save_snapshot(const particle_ensemble& ens, const std::string& path) {
    std::ostringstream os;
    os << "n_agents,dim,t\n";
    os << ens.n_agents << ',' << ens.dim << ',' << format_double(ens.t) << '\n';
    for (int i = 0; i < ens.n_agents; ++i) {
        for (int c = 0; c < ens.dim; ++c) {
            if (c) os << ',';
            os << format_double(ens.states[static_cast<std::size_t>(i) * ens.dim + c]);
        }
        os << '\n';
    }
    for (int i = 0; i < ens.n_agents; ++i) {
        for (int j = 0; j < ens.n_agents; ++j) {
            if (j) os << ',';
            os << format_double(ens.weight_at(i, j));
        }
        os << '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write file '" + path + "'");
    out << os.str();
}

particle_ensemble load_snapshot(const std::string& path) {
    const csv_table t = read_csv(path);
    if (t.header.size() != 3 || t.header[0] != "n_agents" || t.header[1] != "dim" ||
        t.header[2] != "t") {
        throw config_error("snapshot '" + path + "': missing n_agents,dim,t header");
    }
    if (t.rows.empty()) throw config_error("snapshot '" + path + "': no data");
    const int n = static_cast<int>(t.as_double(0, 0));
    const int d = static_cast<int>(t.as_double(0, 1));
    if (n < 1 || d < 1) throw config_error("snapshot '" + path + "': bad dimensions");
    particle_ensemble ens = particle_ensemble::make(n, d, t.as_double(0, 2));
    if (t.rows.size() != static_cast<std::size_t>(1 + 2 * n)) {
        throw config_error("snapshot '" + path + "': expected " + std::to_string(1 + 2 * n) +
                           " rows, found " + std::to_string(t.rows.size()));
    }
    for (int i = 0; i < n; ++i) {
        if (t.rows[1 + i].size() != static_cast<std::size_t>(d)) {
            throw config_error("snapshot '" + path + "': state row has wrong width");
        }
        for (int c = 0; c < d; ++c) {
            ens.states[static_cast<std::size_t>(i) * d + c] = t.as_double(1 + i, c);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (t.rows[1 + n + i].size() != static_cast<std::size_t>(n)) {
            throw config_error("snapshot '" + path + "': weight row has wrong width");
        }
        for (int j = 0; j < n; ++j) {
            ens.weights[static_cast<std::size_t>(i) * n + j] = t.as_double(1 + n + i, j);
        }
    }
    ens.w0_sup = ens.weight_sup();
    return ens;
}

step_triplet to_triplet(const particle_ensemble& ens) {
    step_triplet t;
    t.n_labels = ens.n_agents;
    t.dim = ens.dim;
    t.masses.assign(static_cast<std::size_t>(ens.n_agents), 1.0 / ens.n_agents);
    t.states = ens.states;
    t.kernel = ens.weights;
    return t;
}

}  // namespace coweave
