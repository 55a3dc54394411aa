#include "coweave/meanfield/picard.hpp"

#include <cmath>

#include "coweave/core/error.hpp"
#include "coweave/core/parallel.hpp"

namespace coweave {

picard_frames constant_guess(const limit_system& init, std::int64_t n_steps) {
    picard_frames f;
    f.states.assign(static_cast<std::size_t>(n_steps) + 1, init.ens.states);
    f.weights.assign(static_cast<std::size_t>(n_steps) + 1, init.ens.weights);
    return f;
}

picard_frames frames_of(const limit_solution& sol) {
    if (sol.weight_frames.size() != sol.state_frames.size()) {
        throw config_error("picard: the solution was recorded without weight frames");
    }
    picard_frames f;
    f.states = sol.state_frames;
    f.weights = sol.weight_frames;
    return f;
}

picard_frames picard_apply(const picard_frames& candidate, const limit_system& init,
                           const coefficient_set& coeffs, const domain& dom,
                           const time_grid& grid, const counter_rng& rng, int threads) {
    const int n = init.n_entities();
    const int dim = init.dim;
    const std::size_t un = static_cast<std::size_t>(n);
    const std::size_t ud = static_cast<std::size_t>(dim);
    const std::size_t frames = static_cast<std::size_t>(grid.n_steps) + 1;
    if (dom.dim != dim) throw config_error("picard: domain dimension mismatch");
    if (candidate.states.size() != frames || candidate.weights.size() != frames) {
        throw config_error("picard: candidate path does not match the grid (" +
                           std::to_string(candidate.states.size()) + " frames, expected " +
                           std::to_string(frames) + ")");
    }
    for (const auto& s : candidate.states) {
        if (s.size() != un * ud) throw config_error("picard: state frame size mismatch");
    }
    for (const auto& w : candidate.weights) {
        if (w.size() != un * un) throw config_error("picard: weight frame size mismatch");
    }
    check_frame_budget(n, dim, grid.n_steps, true);

    const double dt = grid.dt;
    const double half = dt / 2.0;
    const double nu_sq = coeffs.nu * std::sqrt(dt);

    // Drift integrand per frame: D_l(e) = mu(x_e) + sum_{e' != e} m_{e'} w_{ee'} sigma(x_e, x_{e'}).
    std::vector<std::vector<double>> drift(frames, std::vector<double>(un * ud, 0.0));
    parallel_for_index(un, threads, [&](std::size_t e) {
        std::vector<double> sig(ud), mu(ud);
        for (std::size_t l = 0; l < frames; ++l) {
            const double* x = candidate.states[l].data();
            const double* wrow = candidate.weights[l].data() + e * un;
            double* out = drift[l].data() + e * ud;
            coeffs.mu.eval(x + e * ud, dim, mu.data());
            for (std::size_t c = 0; c < ud; ++c) out[c] = mu[c];
            if (coeffs.sigma.tag != kernel_tag::zero) {
                for (std::size_t q = 0; q < un; ++q) {
                    if (q == e) continue;
                    coeffs.sigma.eval(x + e * ud, x + q * ud, dim, sig.data());
                    const double mw = init.entity_masses[q] * wrow[q];
                    for (std::size_t c = 0; c < ud; ++c) out[c] += mw * sig[c];
                }
            }
        }
    });

    picard_frames out;
    out.states.assign(frames, std::vector<double>(un * ud, 0.0));
    out.weights.assign(frames, std::vector<double>(un * un, 0.0));
    out.states[0] = init.ens.states;
    out.weights[0] = init.ens.weights;

    // States: prefix trapezoid of the drift plus the replayed Brownian path.
    parallel_for_index(un, threads, [&](std::size_t e) {
        std::vector<double> acc(ud, 0.0), noise(ud, 0.0);
        for (std::size_t k = 1; k < frames; ++k) {
            for (std::size_t c = 0; c < ud; ++c) {
                acc[c] += half * (drift[k - 1][e * ud + c] + drift[k][e * ud + c]);
                if (nu_sq != 0.0) {
                    noise[c] += rng.normal(e, k - 1, rng_role::state,
                                           static_cast<std::uint32_t>(c));
                }
                out.states[k][e * ud + c] =
                    init.ens.states[e * ud + c] + acc[c] + nu_sq * noise[c];
            }
            dom.reduce(out.states[k].data() + e * ud);
        }
    });

    // Weights: prefix trapezoid of alpha(x_e, x_q) w_{eq} + beta(x_e, x_q).
    parallel_for_index(un, threads, [&](std::size_t e) {
        auto integrand = [&](std::size_t l, std::size_t q) {
            const double* x = candidate.states[l].data();
            const double a = coeffs.alpha(x + e * ud, x + q * ud, dim);
            const double b = coeffs.beta(x + e * ud, x + q * ud, dim);
            return a * candidate.weights[l][e * un + q] + b;
        };
        for (std::size_t q = 0; q < un; ++q) {
            double acc = init.ens.weights[e * un + q];
            double prev = integrand(0, q);
            for (std::size_t k = 1; k < frames; ++k) {
                const double cur = integrand(k, q);
                acc += half * (prev + cur);
                out.weights[k][e * un + q] = acc;
                prev = cur;
            }
        }
    });

    return out;
}

double frames_sup_distance(const picard_frames& a, const picard_frames& b, const domain& dom,
                           int dim) {
    if (a.states.size() != b.states.size() || a.weights.size() != b.weights.size()) {
        throw config_error("picard: comparing paths with different frame counts");
    }
    const std::size_t ud = static_cast<std::size_t>(dim);
    double sup = 0.0;
    for (std::size_t l = 0; l < a.states.size(); ++l) {
        if (a.states[l].size() != b.states[l].size()) {
            throw config_error("picard: state frame size mismatch");
        }
        const std::size_t n = a.states[l].size() / ud;
        for (std::size_t e = 0; e < n; ++e) {
            sup = std::fmax(sup, dom.distance(a.states[l].data() + e * ud,
                                              b.states[l].data() + e * ud));
        }
    }
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (a.weights[l].size() != b.weights[l].size()) {
            throw config_error("picard: weight frame size mismatch");
        }
        for (std::size_t p = 0; p < a.weights[l].size(); ++p) {
            sup = std::fmax(sup, std::fabs(a.weights[l][p] - b.weights[l][p]));
        }
    }
    return sup;
}

}  // namespace coweave
