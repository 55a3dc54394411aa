#include "coweave/sim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "coweave/core/error.hpp"
#include "coweave/core/parallel.hpp"
#include "coweave/sim/accumulate.hpp"

namespace coweave {

dynamics_variant dynamics_variant::decay_ou(double epsilon) {
    dynamics_variant v;
    v.k = kind::decay_ou;
    v.epsilon = epsilon;
    v.validate();
    return v;
}

dynamics_variant dynamics_variant::weight_noise(double eta) {
    dynamics_variant v;
    v.k = kind::weight_noise;
    v.eta = eta;
    v.validate();
    return v;
}

dynamics_variant dynamics_variant::parse(const std::string& name, double epsilon, double eta) {
    if (name == "base") return base();
    if (name == "decay_ou" || name == "decay-ou") return decay_ou(epsilon);
    if (name == "weight_noise" || name == "weight-noise") return weight_noise(eta);
    throw config_error("unknown dynamics variant '" + name +
                       "' (expected base, decay_ou, weight_noise)");
}

std::string dynamics_variant::label() const {
    switch (k) {
        case kind::base: return "base";
        case kind::decay_ou: return "decay_ou";
        case kind::weight_noise: return "weight_noise";
    }
    return "base";
}

void dynamics_variant::validate() const {
    if (k == kind::decay_ou && !(epsilon > 0.0 && std::isfinite(epsilon))) {
        throw config_error("decay-ou: epsilon must be a positive finite number");
    }
    if (k == kind::weight_noise && !(eta >= 0.0 && std::isfinite(eta))) {
        throw config_error("weight-noise: eta must be a finite number >= 0");
    }
}

bool trig_path_applies(const coefficient_set& coeffs) {
    const bool sigma_ok =
        coeffs.sigma.tag == kernel_tag::sine_diff || coeffs.sigma.tag == kernel_tag::zero;
    const bool beta_ok = coeffs.beta.tag == kernel_tag::cosine_diff ||
                         coeffs.beta.tag == kernel_tag::constant ||
                         coeffs.beta.tag == kernel_tag::zero;
    return sigma_ok && beta_ok;
}

void advance_coupled(double* states, double* weights, const double* masses, int n, int dim,
                     const domain& dom, const coefficient_set& coeffs,
                     const dynamics_variant& var, double dt, std::int64_t step_index,
                     const counter_rng& rng, int threads, step_workspace& ws,
                     double* noise_accum, double* noise_sup) {
    if (n < 1) throw config_error("advance: need at least one entity");
    if (dim < 1 || dim != dom.dim) throw config_error("advance: dimension does not match the domain");
    if (!(dt > 0.0)) throw config_error("advance: dt must be > 0");
    var.validate();
    if (var.k == dynamics_variant::kind::weight_noise && var.eta != 0.0 &&
        (noise_accum == nullptr || noise_sup == nullptr)) {
        throw config_error("advance: weight-noise runs need the noise accumulator buffers");
    }

    const std::size_t un = static_cast<std::size_t>(n);
    const std::size_t ud = static_cast<std::size_t>(dim);
    const bool trig = trig_path_applies(coeffs);
    const bool trig_sigma = trig && coeffs.sigma.tag == kernel_tag::sine_diff;
    const bool need_trig = trig_sigma || (trig && coeffs.beta.tag == kernel_tag::cosine_diff);
    const bool alpha_const =
        (coeffs.alpha1.tag == kernel_tag::constant || coeffs.alpha1.tag == kernel_tag::zero) &&
        (coeffs.alpha2.tag == kernel_tag::constant || coeffs.alpha2.tag == kernel_tag::zero);
    const double a1_const = coeffs.alpha1.tag == kernel_tag::constant ? coeffs.alpha1.value : 0.0;
    const double a2_const = coeffs.alpha2.tag == kernel_tag::constant ? coeffs.alpha2.value : 0.0;
    const double alpha_const_value = a1_const * a2_const;
    const bool need_alpha = var.k != dynamics_variant::kind::decay_ou && !alpha_const;
    const double sqdt = std::sqrt(dt);
    const double nu_sq = coeffs.nu * sqdt;
    const auto ustep = static_cast<std::uint64_t>(step_index);

    ws.new_states.resize(un * ud);
    if (need_trig) {
        ws.sin_x.resize(un * ud);
        ws.cos_x.resize(un * ud);
        parallel_for_index(un, threads, [&](std::size_t i) {
            for (std::size_t c = 0; c < ud; ++c) {
                ws.sin_x[i * ud + c] = std::sin(states[i * ud + c]);
                ws.cos_x[i * ud + c] = std::cos(states[i * ud + c]);
            }
        });
    }
    if (trig_sigma) {
        ws.msin.resize(ud * un);
        ws.mcos.resize(ud * un);
        for (std::size_t c = 0; c < ud; ++c) {
            for (std::size_t j = 0; j < un; ++j) {
                ws.msin[c * un + j] = masses[j] * ws.sin_x[j * ud + c];
                ws.mcos[c * un + j] = masses[j] * ws.cos_x[j * ud + c];
            }
        }
    }
    if (need_alpha) {
        ws.a1.resize(un);
        ws.a2.resize(un);
        for (std::size_t i = 0; i < un; ++i) {
            ws.a1[i] = coeffs.alpha1(states + i * ud, dim);
            ws.a2[i] = coeffs.alpha2(states + i * ud, dim);
        }
    }

    const bool mu_zero = coeffs.mu.tag == kernel_tag::zero;

    // Phase 1: state drifts from the frozen (old) states and weights.
    parallel_for_index(un, threads, [&](std::size_t i) {
        const double* xi = states + i * ud;
        const double* wrow = weights + i * un;
        double* out = ws.new_states.data() + i * ud;
        for (std::size_t c = 0; c < ud; ++c) out[c] = 0.0;
        if (trig_sigma) {
            // sum_j m_j w_ij sin(x_j - x_i) = cos(x_i) sum_j m_j w_ij sin(x_j)
            //                               - sin(x_i) sum_j m_j w_ij cos(x_j),
            // accumulated over all j in fixed lanes, then the j == i term
            // (identically zero in exact arithmetic) is subtracted.
            const double wii = wrow[i];
            for (std::size_t c = 0; c < ud; ++c) {
                const double* ms = ws.msin.data() + c * un;
                const double* mc = ws.mcos.data() + c * un;
                double s_sin = 0.0, s_cos = 0.0;
                lane_dot2(wrow, ms, mc, n, s_sin, s_cos);
                s_sin -= wii * ms[i];
                s_cos -= wii * mc[i];
                out[c] = coeffs.sigma.scale *
                         (ws.cos_x[i * ud + c] * s_sin - ws.sin_x[i * ud + c] * s_cos);
            }
        } else if (coeffs.sigma.tag != kernel_tag::zero) {
            std::vector<double> sig(ud);
            for (std::size_t j = 0; j < un; ++j) {
                if (j == i) continue;
                coeffs.sigma.eval(xi, states + j * ud, dim, sig.data());
                const double mw = masses[j] * wrow[j];
                for (std::size_t c = 0; c < ud; ++c) out[c] += mw * sig[c];
            }
        }
        if (!mu_zero) {
            std::vector<double> mu(ud);
            coeffs.mu.eval(xi, dim, mu.data());
            for (std::size_t c = 0; c < ud; ++c) out[c] += mu[c];
        }
        for (std::size_t c = 0; c < ud; ++c) {
            double x = xi[c] + dt * out[c];
            if (nu_sq != 0.0) {
                x += nu_sq * rng.normal(i, ustep, rng_role::state, static_cast<std::uint32_t>(c));
            }
            out[c] = x;
        }
        dom.reduce(out);
        for (std::size_t c = 0; c < ud; ++c) {
            if (!std::isfinite(out[c])) {
                throw numerical_error("non-finite state at step " + std::to_string(step_index) +
                                      ", entity " + std::to_string(i));
            }
        }
    });

    // Phase 2: weights, still from the old states.
    const bool hot_cosine = var.k == dynamics_variant::kind::base && alpha_const &&
                            coeffs.beta.tag == kernel_tag::cosine_diff && dim == 1 && trig &&
                            var.eta == 0.0;
    if (hot_cosine) {
        const double f = 1.0 + dt * alpha_const_value;
        const double gb = dt * coeffs.beta.value;
        const double* sn = ws.sin_x.data();
        const double* cn = ws.cos_x.data();
        parallel_for_index(un, threads, [&](std::size_t i) {
            const double si = sn[i], ci = cn[i];
            double* wrow = weights + i * un;
            for (std::size_t j = 0; j < un; ++j) {
                wrow[j] = wrow[j] * f + gb * (ci * cn[j] + si * sn[j]);
            }
        });
    } else {
        const bool noisy = var.k == dynamics_variant::kind::weight_noise && var.eta != 0.0;
        if (noisy) ws.task_max.assign(un, 0.0);
        const double f_decay = 1.0 - dt / var.epsilon;
        const double g_decay = dt / var.epsilon;
        parallel_for_index(un, threads, [&](std::size_t i) {
            const double* xi = states + i * ud;
            double* wrow = weights + i * un;
            double* arow = noise_accum ? noise_accum + i * un : nullptr;
            double local_max = 0.0;
            const double a1i = need_alpha ? ws.a1[i] : 0.0;
            for (std::size_t j = 0; j < un; ++j) {
                const double b = coeffs.beta(xi, states + j * ud, dim);
                double w = wrow[j];
                if (var.k == dynamics_variant::kind::decay_ou) {
                    w = w * f_decay + g_decay * b;
                } else {
                    const double growth =
                        1.0 + dt * (alpha_const ? alpha_const_value : a1i * ws.a2[j]);
                    w = w * growth + dt * b;
                    if (noisy) {
                        const double g = rng.normal(i * un + j, ustep, rng_role::weight, 0);
                        w += var.eta * sqdt * g;
                        // The pure-noise component compounds with the same
                        // growth factor as the weight itself, so (w - eta *
                        // accum) obeys the noise-free sup bound.
                        arow[j] = arow[j] * growth + sqdt * g;
                        local_max = std::fmax(local_max, std::fabs(arow[j]));
                    }
                }
                wrow[j] = w;
            }
            if (noisy) ws.task_max[i] = local_max;
        });
        if (noisy) {
            for (std::size_t i = 0; i < un; ++i) *noise_sup = std::fmax(*noise_sup, ws.task_max[i]);
        }
    }

    std::copy(ws.new_states.begin(), ws.new_states.end(), states);
}

void step(particle_ensemble& ens, const domain& dom, const coefficient_set& coeffs,
          const dynamics_variant& var, double dt, const counter_rng& rng, int threads,
          step_workspace& ws) {
    const int n = ens.n_agents;
    if (ws.umass.size() != static_cast<std::size_t>(n)) {
        ws.umass.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    }
    double* accum = nullptr;
    if (var.k == dynamics_variant::kind::weight_noise && var.eta != 0.0) {
        const std::size_t need = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
        if (ens.noise_accum.size() != need) ens.noise_accum.assign(need, 0.0);
        accum = ens.noise_accum.data();
    }
    advance_coupled(ens.states.data(), ens.weights.data(), ws.umass.data(), n, ens.dim, dom,
                    coeffs, var, dt, ens.step_index, rng, threads, ws, accum, &ens.noise_sup);
    ens.step_index += 1;
    ens.t += dt;
}

simulation_result simulate(const particle_ensemble& init, const domain& dom,
                           const coefficient_set& coeffs, const dynamics_variant& var,
                           const time_grid& grid, const counter_rng& rng, int threads,
                           const std::vector<double>& snapshot_times, bool check_bound) {
    particle_ensemble ens = init;
    ens.validate(dom);
    if (ens.step_index != 0 || ens.t != 0.0) {
        throw config_error("simulate: runs start at t = 0 (the weight bound is anchored there)");
    }
    ens.w0_sup = ens.weight_sup();

    std::vector<std::int64_t> snaps;
    snaps.reserve(snapshot_times.size());
    for (double t : snapshot_times) snaps.push_back(grid.step_of(t));
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    const double eta = var.k == dynamics_variant::kind::weight_noise ? var.eta : 0.0;
    simulation_result res;
    auto maybe_record = [&](std::int64_t k) {
        if (std::binary_search(snaps.begin(), snaps.end(), k)) {
            ens.validate(dom);
            if (check_bound) check_weight_bound(ens, coeffs, grid.dt, eta);
            res.snapshots.push_back(ens);
        }
    };

    step_workspace ws;
    for (std::int64_t k = 0; k < grid.n_steps; ++k) {
        maybe_record(k);
        step(ens, dom, coeffs, var, grid.dt, rng, threads, ws);
        ens.t = grid.time_at(ens.step_index);
    }
    maybe_record(grid.n_steps);
    ens.validate(dom);
    if (check_bound) check_weight_bound(ens, coeffs, grid.dt, eta);
    res.final_state = std::move(ens);
    return res;
}

std::vector<double> ou_weight_quadrature(const std::vector<std::vector<double>>& state_path,
                                         const std::vector<double>& w0, int n, int dim,
                                         const coefficient_set& coeffs, double epsilon,
                                         double dt) {
    if (state_path.empty()) throw config_error("ou quadrature: empty state path");
    if (!(epsilon > 0.0)) throw config_error("ou quadrature: epsilon must be > 0");
    if (!(dt > 0.0)) throw config_error("ou quadrature: dt must be > 0");
    const std::size_t un = static_cast<std::size_t>(n);
    const std::size_t ud = static_cast<std::size_t>(dim);
    if (w0.size() != un * un) throw config_error("ou quadrature: weight matrix has wrong size");
    for (const auto& frame : state_path) {
        if (frame.size() != un * ud) throw config_error("ou quadrature: state frame has wrong size");
    }

    auto fill_beta = [&](const std::vector<double>& frame, std::vector<double>& b) {
        for (std::size_t i = 0; i < un; ++i) {
            for (std::size_t j = 0; j < un; ++j) {
                b[i * un + j] = coeffs.beta(frame.data() + i * ud, frame.data() + j * ud, dim);
            }
        }
    };

    // w(t_k) = e^{-t_k/eps} w(0) + int_0^{t_k} eps^{-1} e^{-(t_k-s)/eps} beta(s) ds
    // evaluated by the composite trapezoid rule; the one-step recursion below
    // reproduces the composite rule exactly because the kernel factors as
    // e^{-(t_k - s)/eps} = e^{-dt/eps} e^{-(t_{k-1} - s)/eps}.
    const double decay = std::exp(-dt / epsilon);
    const double half = dt / (2.0 * epsilon);
    std::vector<double> w = w0;
    std::vector<double> b_prev(un * un), b_cur(un * un);
    fill_beta(state_path[0], b_prev);
    for (std::size_t k = 1; k < state_path.size(); ++k) {
        fill_beta(state_path[k], b_cur);
        for (std::size_t p = 0; p < un * un; ++p) {
            w[p] = decay * w[p] + half * (decay * b_prev[p] + b_cur[p]);
        }
        b_prev.swap(b_cur);
    }
    return w;
}

}  // namespace coweave
