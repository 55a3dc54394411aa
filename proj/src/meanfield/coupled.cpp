#include "coweave/meanfield/coupled.hpp"

#include <algorithm>
#include <cmath>

#include "coweave/core/error.hpp"
#include "coweave/core/parallel.hpp"
#include "coweave/meanfield/limit.hpp"
#include "coweave/meanfield/sample.hpp"
#include "coweave/sim/accumulate.hpp"
#include "coweave/sim/dynamics.hpp"

namespace coweave {

namespace {

struct replica_slot {
    std::vector<double> state_vals;   // n_snaps x N agent distances
    std::vector<double> weight_vals;  // n_snaps x N^2 weight gaps
};

}  // namespace

propagation_result coupled_propagation_error(const step_triplet& source,
                                             const mixture_spec& mix,
                                             const coefficient_set& coeffs, const domain& dom,
                                             const time_grid& grid, int k_paths, int replicas,
                                             const counter_rng& rng, int threads,
                                             const std::vector<double>& snapshot_times) {
    source.validate();
    mix.validate(source.masses);
    if (dom.dim != source.dim) throw config_error("coupled: domain dimension mismatch");
    if (replicas < 1) throw config_error("coupled: need at least one replica");
    const int n = mix.n_rows;
    if (n < 2) throw config_error("coupled: need at least two agents");
    const int dim = source.dim;
    const std::size_t un = static_cast<std::size_t>(n);
    const std::size_t ud = static_cast<std::size_t>(dim);
    const double dt = grid.dt;

    std::vector<double> times = snapshot_times;
    if (times.empty()) times.push_back(grid.t_end);
    std::vector<std::int64_t> snaps;
    snaps.reserve(times.size());
    for (double t : times) snaps.push_back(grid.step_of(t));
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
    const std::size_t n_snaps = snaps.size();

    // Shared reference trajectory.
    const counter_rng ref_rng(rng.derive(0x7ef, 0, rng_role::replicate));
    const limit_solution ref =
        solve_limit(source, k_paths, coeffs, dom, grid, ref_rng, threads, {}, false);
    const int mk = ref.final_state.n_entities();
    const std::size_t umk = static_cast<std::size_t>(mk);
    const std::size_t frames = ref.state_frames.size();
    const std::vector<double>& ref_masses = ref.final_state.entity_masses;
    std::vector<int> ref_labels(umk);
    for (int e = 0; e < mk; ++e) ref_labels[static_cast<std::size_t>(e)] = e / k_paths;

    const bool trig = trig_path_applies(coeffs);
    const bool trig_sigma = trig && coeffs.sigma.tag == kernel_tag::sine_diff;
    const bool trig_beta = trig && coeffs.beta.tag == kernel_tag::cosine_diff;
    const bool alpha_const =
        (coeffs.alpha1.tag == kernel_tag::constant || coeffs.alpha1.tag == kernel_tag::zero) &&
        (coeffs.alpha2.tag == kernel_tag::constant || coeffs.alpha2.tag == kernel_tag::zero);
    const double a1c = coeffs.alpha1.tag == kernel_tag::constant ? coeffs.alpha1.value : 0.0;
    const double a2c = coeffs.alpha2.tag == kernel_tag::constant ? coeffs.alpha2.value : 0.0;
    const double alpha_cv = a1c * a2c;
    const bool mu_zero = coeffs.mu.tag == kernel_tag::zero;
    const int batch_width = std::max(1, threads);

    {
        const double trig_arrays = (trig_sigma || trig_beta) ? (trig_sigma ? 4.0 : 2.0) : 0.0;
        const double bytes =
            static_cast<double>(frames) * mk * dim * 8.0 * (1.0 + trig_arrays) +
            static_cast<double>(batch_width) * n_snaps * (static_cast<double>(n) * n + n) * 8.0 +
            static_cast<double>(batch_width) *
                (static_cast<double>(n) * mk + 2.0 * static_cast<double>(n) * n) * 8.0;
        if (bytes > 3e9) {
            throw resource_error("coupled: run needs ~" + std::to_string(bytes / 1e9) +
                                 " GB of replica/reference buffers (budget 3 GB)");
        }
    }

    // Per-frame reference trigonometry, component-major for lane sweeps.
    std::vector<std::vector<double>> sinf, cosf, msinf, mcosf;
    if (trig_sigma || trig_beta) {
        sinf.resize(frames);
        cosf.resize(frames);
        if (trig_sigma) {
            msinf.resize(frames);
            mcosf.resize(frames);
        }
        parallel_for_index(frames, threads, [&](std::size_t k) {
            const double* x = ref.state_frames[k].data();
            auto& sv = sinf[k];
            auto& cv = cosf[k];
            sv.resize(umk * ud);
            cv.resize(umk * ud);
            for (std::size_t c = 0; c < ud; ++c) {
                for (std::size_t e = 0; e < umk; ++e) {
                    sv[c * umk + e] = std::sin(x[e * ud + c]);
                    cv[c * umk + e] = std::cos(x[e * ud + c]);
                }
            }
            if (trig_sigma) {
                auto& ms = msinf[k];
                auto& mc = mcosf[k];
                ms.resize(umk * ud);
                mc.resize(umk * ud);
                for (std::size_t c = 0; c < ud; ++c) {
                    for (std::size_t e = 0; e < umk; ++e) {
                        ms[c * umk + e] = ref_masses[e] * sv[c * umk + e];
                        mc[c * umk + e] = ref_masses[e] * cv[c * umk + e];
                    }
                }
            }
        });
    }
    // Reference-side separable growth factor per frame (generic alpha only).
    std::vector<std::vector<double>> a2f;
    if (!alpha_const) {
        a2f.resize(frames);
        parallel_for_index(frames, threads, [&](std::size_t k) {
            const double* x = ref.state_frames[k].data();
            a2f[k].resize(umk);
            for (std::size_t e = 0; e < umk; ++e) a2f[k][e] = coeffs.alpha2(x + e * ud, dim);
        });
    }

    auto run_replica = [&](int r, replica_slot& slot) {
        slot.state_vals.assign(n_snaps * un, 0.0);
        slot.weight_vals.assign(n_snaps * un * un, 0.0);
        const counter_rng crng(rng.derive(static_cast<std::uint64_t>(r), 0, rng_role::replicate));

        mixture_sample ms = sample_mixture(source, mix, crng);
        particle_ensemble& pens = ms.ensemble;
        const std::vector<int>& labels = ms.labels;

        std::vector<double> y = pens.states;
        std::vector<double> y_new(un * ud, 0.0);
        std::vector<double> v = pens.weights;
        std::vector<double> u(un * umk);
        for (std::size_t i = 0; i < un; ++i) {
            for (std::size_t e = 0; e < umk; ++e) {
                u[i * umk + e] = source.kernel_at(labels[i], ref_labels[e]);
            }
        }

        step_workspace ws;
        std::vector<double> sin_y, cos_y;
        if (trig_sigma || trig_beta) {
            sin_y.resize(un * ud);
            cos_y.resize(un * ud);
        }
        std::vector<double> a1y, a2y;
        if (!alpha_const) {
            a1y.resize(un);
            a2y.resize(un);
        }
        std::vector<double> mu_buf(ud), sig(ud);
        const double nu_sq = coeffs.nu * std::sqrt(dt);

        std::size_t snap_pos = 0;
        for (std::int64_t k = 0; k <= grid.n_steps; ++k) {
            if (snap_pos < n_snaps && snaps[snap_pos] == k) {
                const double t_now = grid.time_at(k);
                pens.t = t_now;
                check_weight_bound(pens, coeffs, dt, 0.0);
                double v_sup = 0.0;
                for (double w : v) v_sup = std::fmax(v_sup, std::fabs(w));
                if (!(v_sup <= weight_linf_bound(coeffs.bounds, pens.w0_sup, t_now) + 10.0 * dt)) {
                    throw numerical_error("coupled: shadow weight sup exceeds the a-priori bound");
                }
                double* sv = slot.state_vals.data() + snap_pos * un;
                double* wv = slot.weight_vals.data() + snap_pos * un * un;
                for (std::size_t i = 0; i < un; ++i) {
                    sv[i] = dom.distance(pens.states.data() + i * ud, y.data() + i * ud);
                }
                for (std::size_t p = 0; p < un * un; ++p) {
                    wv[p] = std::fabs(pens.weights[p] - v[p]);
                }
                ++snap_pos;
            }
            if (k == grid.n_steps) break;

            // Particle system: one Euler step (consumes noise keys (i, k)).
            step(pens, dom, coeffs, dynamics_variant::base(), dt, crng, 1, ws);

            // Shadow quantities are all computed from the frozen y at time k.
            if (trig_sigma || trig_beta) {
                for (std::size_t i = 0; i < un * ud; ++i) {
                    sin_y[i] = std::sin(y[i]);
                    cos_y[i] = std::cos(y[i]);
                }
            }
            if (!alpha_const) {
                for (std::size_t i = 0; i < un; ++i) {
                    a1y[i] = coeffs.alpha1(y.data() + i * ud, dim);
                    a2y[i] = coeffs.alpha2(y.data() + i * ud, dim);
                }
            }
            const double* xr = ref.state_frames[static_cast<std::size_t>(k)].data();

            // Shadow states: drift averaged against the reference ensemble
            // with the shadow-to-reference weights u; same Brownian draw as
            // the particle above.
            for (std::size_t i = 0; i < un; ++i) {
                const double* yi = y.data() + i * ud;
                const double* urow = u.data() + i * umk;
                double* out = y_new.data() + i * ud;
                if (mu_zero) {
                    for (std::size_t c = 0; c < ud; ++c) out[c] = 0.0;
                } else {
                    coeffs.mu.eval(yi, dim, mu_buf.data());
                    for (std::size_t c = 0; c < ud; ++c) out[c] = mu_buf[c];
                }
                if (trig_sigma) {
                    const auto& ms_k = msinf[static_cast<std::size_t>(k)];
                    const auto& mc_k = mcosf[static_cast<std::size_t>(k)];
                    for (std::size_t c = 0; c < ud; ++c) {
                        double s_sin = 0.0, s_cos = 0.0;
                        lane_dot2(urow, ms_k.data() + c * umk, mc_k.data() + c * umk, mk, s_sin,
                                  s_cos);
                        out[c] += coeffs.sigma.scale *
                                  (cos_y[i * ud + c] * s_sin - sin_y[i * ud + c] * s_cos);
                    }
                } else if (coeffs.sigma.tag != kernel_tag::zero) {
                    for (std::size_t e = 0; e < umk; ++e) {
                        coeffs.sigma.eval(yi, xr + e * ud, dim, sig.data());
                        const double mw = ref_masses[e] * urow[e];
                        for (std::size_t c = 0; c < ud; ++c) out[c] += mw * sig[c];
                    }
                }
                for (std::size_t c = 0; c < ud; ++c) {
                    double xv = yi[c] + dt * out[c];
                    if (nu_sq != 0.0) {
                        xv += nu_sq * crng.normal(i, static_cast<std::uint64_t>(k),
                                                  rng_role::state, static_cast<std::uint32_t>(c));
                    }
                    out[c] = xv;
                }
                dom.reduce(out);
                for (std::size_t c = 0; c < ud; ++c) {
                    if (!std::isfinite(out[c])) {
                        throw numerical_error("coupled: non-finite shadow state at step " +
                                              std::to_string(k) + ", entity " + std::to_string(i));
                    }
                }
            }

            // Shadow-to-reference weights u (one per agent/reference pair).
            if (trig_beta && dim == 1 && alpha_const) {
                const double f_u = 1.0 + dt * alpha_cv;
                const double gb = dt * coeffs.beta.value;
                const double* se = sinf[static_cast<std::size_t>(k)].data();
                const double* ce = cosf[static_cast<std::size_t>(k)].data();
                for (std::size_t i = 0; i < un; ++i) {
                    const double sy = sin_y[i], cy = cos_y[i];
                    double* urow = u.data() + i * umk;
                    for (std::size_t e = 0; e < umk; ++e) {
                        urow[e] = urow[e] * f_u + gb * (cy * ce[e] + sy * se[e]);
                    }
                }
            } else {
                for (std::size_t i = 0; i < un; ++i) {
                    const double* yi = y.data() + i * ud;
                    double* urow = u.data() + i * umk;
                    for (std::size_t e = 0; e < umk; ++e) {
                        const double a =
                            alpha_const ? alpha_cv : a1y[i] * a2f[static_cast<std::size_t>(k)][e];
                        const double b = coeffs.beta(yi, xr + e * ud, dim);
                        urow[e] = urow[e] * (1.0 + dt * a) + dt * b;
                    }
                }
            }

            // Shadow pair weights v (same growth law between shadow states).
            if (trig_beta && dim == 1 && alpha_const) {
                const double f_v = 1.0 + dt * alpha_cv;
                const double gb = dt * coeffs.beta.value;
                for (std::size_t i = 0; i < un; ++i) {
                    const double sy = sin_y[i], cy = cos_y[i];
                    double* vrow = v.data() + i * un;
                    for (std::size_t j = 0; j < un; ++j) {
                        vrow[j] = vrow[j] * f_v + gb * (cy * cos_y[j] + sy * sin_y[j]);
                    }
                }
            } else {
                for (std::size_t i = 0; i < un; ++i) {
                    const double* yi = y.data() + i * ud;
                    double* vrow = v.data() + i * un;
                    for (std::size_t j = 0; j < un; ++j) {
                        const double a = alpha_const ? alpha_cv : a1y[i] * a2y[j];
                        const double b = coeffs.beta(yi, y.data() + j * ud, dim);
                        vrow[j] = vrow[j] * (1.0 + dt * a) + dt * b;
                    }
                }
            }

            y.swap(y_new);
        }
    };

    // Replicas run in batches of `threads`; partial results always merge in
    // replica order, so sums are identical for every thread count.
    std::vector<double> gs_sum(n_snaps * un, 0.0), gs_sq(n_snaps * un, 0.0);
    std::vector<double> gw_sum(n_snaps * un * un, 0.0), gw_sq(n_snaps * un * un, 0.0);
    std::vector<replica_slot> slots(static_cast<std::size_t>(batch_width));
    for (int r0 = 0; r0 < replicas; r0 += batch_width) {
        const int batch = std::min(batch_width, replicas - r0);
        parallel_for_index(static_cast<std::size_t>(batch), threads,
                           [&](std::size_t b) { run_replica(r0 + static_cast<int>(b), slots[b]); });
        for (int b = 0; b < batch; ++b) {
            const replica_slot& s = slots[static_cast<std::size_t>(b)];
            for (std::size_t idx = 0; idx < gs_sum.size(); ++idx) {
                const double val = s.state_vals[idx];
                gs_sum[idx] += val;
                gs_sq[idx] += val * val;
            }
            for (std::size_t idx = 0; idx < gw_sum.size(); ++idx) {
                const double val = s.weight_vals[idx];
                gw_sum[idx] += val;
                gw_sq[idx] += val * val;
            }
        }
    }

    propagation_result res;
    res.n_agents = n;
    res.m_labels = source.n_labels;
    res.k_paths = k_paths;
    res.replicas = replicas;
    res.low_resolution = static_cast<std::int64_t>(mk) < 4 * static_cast<std::int64_t>(n);
    double kernel_sup = 0.0;
    for (double w : source.kernel) kernel_sup = std::fmax(kernel_sup, std::fabs(w));
    res.w_sup = weight_linf_bound(coeffs.bounds, kernel_sup, grid.t_end);
    const gronwall_pair g = gronwall_constants(coeffs, dim, res.w_sup);
    res.c1 = g.c1;
    res.c2 = g.c2;

    const double big_r = static_cast<double>(replicas);
    for (std::size_t s = 0; s < n_snaps; ++s) {
        propagation_row row;
        row.t = grid.time_at(snaps[s]);
        row.envelope = gronwall_envelope(g, row.t, n);
        {
            double best = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < un; ++i) {
                const double mean = gs_sum[s * un + i] / big_r;
                if (mean > best) {
                    best = mean;
                    arg = i;
                }
            }
            row.g_state = best;
            if (replicas > 1) {
                const double var =
                    (gs_sq[s * un + arg] - big_r * best * best) / (big_r - 1.0);
                row.g_state_stderr = std::sqrt(std::fmax(var, 0.0) / big_r);
            }
        }
        {
            double best = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < un; ++i) {
                for (std::size_t j = 0; j < un; ++j) {
                    if (i == j) continue;
                    const std::size_t p = s * un * un + i * un + j;
                    const double mean = gw_sum[p] / big_r;
                    if (mean > best) {
                        best = mean;
                        arg = p;
                    }
                }
            }
            row.g_weight = best;
            if (replicas > 1) {
                const double var = (gw_sq[arg] - big_r * best * best) / (big_r - 1.0);
                row.g_weight_stderr = std::sqrt(std::fmax(var, 0.0) / big_r);
            }
        }
        res.rows.push_back(row);
    }
    return res;
}

}  // namespace coweave
