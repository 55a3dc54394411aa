#include "coweave/metrics/delta.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "coweave/core/error.hpp"
#include "coweave/graphon/cut_norm.hpp"

namespace coweave {

namespace {

void require_uniform_square(const step_triplet& t1, const step_triplet& t2,
                            const char* who, int max_n) {
    t1.validate();
    t2.validate();
    if (t1.n_labels != t2.n_labels)
        throw config_error(std::string(who) + ": label counts differ");
    if (t1.dim != t2.dim) throw config_error(std::string(who) + ": dimensions differ");
    if (t1.n_labels > max_n)
        throw config_error(std::string(who) + ": needs n <= " + std::to_string(max_n) +
                           ", got " + std::to_string(t1.n_labels));
    const double u = 1.0 / t1.n_labels;
    for (double m : t1.masses)
        if (std::fabs(m - u) > 1e-12)
            throw config_error(std::string(who) + ": masses must be uniform");
    for (double m : t2.masses)
        if (std::fabs(m - u) > 1e-12)
            throw config_error(std::string(who) + ": masses must be uniform");
}

// Lexicographic order on (states, kernel); used to normalize the evaluation
// orientation so delta_exact_small is bitwise symmetric.
bool triplet_less(const step_triplet& a, const step_triplet& b) {
    if (a.states != b.states) return a.states < b.states;
    return a.kernel < b.kernel;
}

step_kernel difference_under_perm(const step_triplet& t1, const step_triplet& t2,
                                  const std::vector<int>& phi) {
    const int n = t1.n_labels;
    step_kernel d = step_kernel::uniform(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            d.values[static_cast<std::size_t>(i) * n + j] =
                t1.kernel_at(i, j) -
                t2.kernel_at(phi[static_cast<std::size_t>(i)],
                             phi[static_cast<std::size_t>(j)]);
        }
    }
    return d;
}

coupling permutation_coupling(const std::vector<int>& phi) {
    const int n = static_cast<int>(phi.size());
    coupling g;
    g.n1 = n;
    g.n2 = n;
    g.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        g.weights[static_cast<std::size_t>(i) * n + phi[static_cast<std::size_t>(i)]] =
            1.0 / n;
    return g;
}

coupling transpose_coupling(const coupling& g) {
    coupling t;
    t.n1 = g.n2;
    t.n2 = g.n1;
    t.weights.resize(g.weights.size());
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            t.weights[static_cast<std::size_t>(j) * g.n1 + i] = g.at(i, j);
    return t;
}

// ---- coupled support machinery for the heuristic ----

struct coupled_support {
    std::vector<int> a;     // label in triplet 1
    std::vector<int> b;     // label in triplet 2
    std::vector<double> g;  // coupling mass
    int size() const { return static_cast<int>(g.size()); }
};

coupled_support support_of(const coupling& plan) {
    coupled_support sp;
    for (int i = 0; i < plan.n1; ++i) {
        for (int j = 0; j < plan.n2; ++j) {
            const double v = plan.at(i, j);
            if (v > 1e-15) {
                sp.a.push_back(i);
                sp.b.push_back(j);
                sp.g.push_back(v);
            }
        }
    }
    return sp;
}

void kernel_matvec(const std::vector<double>& w, int n, const std::vector<double>& x,
                   bool transpose, std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * n;
        if (transpose) {
            const double xi = x[static_cast<std::size_t>(i)];
            if (xi == 0.0) continue;
            for (int j = 0; j < n; ++j) y[static_cast<std::size_t>(j)] += w[row + j] * xi;
        } else {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += w[row + j] * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = acc;
        }
    }
}

// Witness of the cut norm of the coupled difference kernel
//   D(p,q) = w1[a_p, a_q] - w2[b_p, b_q]
// on the support points with masses g.  Margins are evaluated through the
// label-space aggregates tA/tB/sA/sB, which also parameterize the witness
// for any (a, b) pair, in or out of the support.
struct coupled_cut_eval {
    double value = 0.0;
    int sign = 1;
    std::vector<double> t_a, t_b;  // T aggregated onto labels of each side
    std::vector<double> s_a, s_b;  // S aggregated onto labels of each side
};

coupled_cut_eval coupled_cut_heuristic(const coupled_support& sp,
                                       const std::vector<double>& w1, int n1,
                                       const std::vector<double>& w2, int n2,
                                       const counter_rng& rng, int restarts) {
    const int s = sp.size();
    coupled_cut_eval best;
    best.value = -1.0;
    std::vector<char> in_t(static_cast<std::size_t>(s)), in_s(static_cast<std::size_t>(s));
    std::vector<double> ta, tb, sa, sb, u1, u2, v1, v2;

    for (int phase = 0; phase < 2; ++phase) {
        const double sgn = (phase == 0) ? 1.0 : -1.0;
        for (int r = 0; r < restarts; ++r) {
            if (r == 0) {
                std::fill(in_t.begin(), in_t.end(), char(1));
            } else {
                for (int p = 0; p < s; ++p)
                    in_t[static_cast<std::size_t>(p)] = static_cast<char>(
                        rng.bits(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(p),
                                 rng_role::witness, static_cast<std::uint32_t>(phase)) &
                        1u);
            }
            double value = 0.0;
            for (int sweep = 0; sweep < 64; ++sweep) {
                ta.assign(static_cast<std::size_t>(n1), 0.0);
                tb.assign(static_cast<std::size_t>(n2), 0.0);
                for (int p = 0; p < s; ++p) {
                    if (!in_t[static_cast<std::size_t>(p)]) continue;
                    ta[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] +=
                        sp.g[static_cast<std::size_t>(p)];
                    tb[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])] +=
                        sp.g[static_cast<std::size_t>(p)];
                }
                kernel_matvec(w1, n1, ta, false, u1);
                kernel_matvec(w2, n2, tb, false, u2);
                sa.assign(static_cast<std::size_t>(n1), 0.0);
                sb.assign(static_cast<std::size_t>(n2), 0.0);
                for (int p = 0; p < s; ++p) {
                    const double m =
                        sgn * (u1[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] -
                               u2[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])]);
                    in_s[static_cast<std::size_t>(p)] = static_cast<char>(m >= 0.0);
                    if (m >= 0.0) {
                        sa[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                        sb[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                    }
                }
                kernel_matvec(w1, n1, sa, true, v1);
                kernel_matvec(w2, n2, sb, true, v2);
                bool changed = false;
                value = 0.0;
                for (int p = 0; p < s; ++p) {
                    const double m =
                        sgn * (v1[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] -
                               v2[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])]);
                    const char want = static_cast<char>(m >= 0.0);
                    if (want != in_t[static_cast<std::size_t>(p)]) changed = true;
                    in_t[static_cast<std::size_t>(p)] = want;
                    if (want) value += sp.g[static_cast<std::size_t>(p)] * m;
                }
                if (!changed) break;
            }
            if (value > best.value) {
                best.value = value;
                best.sign = (phase == 0) ? 1 : -1;
                // Rebuild aggregates for the winning witness (S from the
                // final sweep, T as just updated).
                best.t_a.assign(static_cast<std::size_t>(n1), 0.0);
                best.t_b.assign(static_cast<std::size_t>(n2), 0.0);
                best.s_a.assign(static_cast<std::size_t>(n1), 0.0);
                best.s_b.assign(static_cast<std::size_t>(n2), 0.0);
                for (int p = 0; p < s; ++p) {
                    if (in_t[static_cast<std::size_t>(p)]) {
                        best.t_a[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                        best.t_b[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                    }
                    if (in_s[static_cast<std::size_t>(p)]) {
                        best.s_a[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                        best.s_b[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)])] +=
                            sp.g[static_cast<std::size_t>(p)];
                    }
                }
            }
        }
    }
    if (best.value < 0.0) best.value = 0.0;
    return best;
}

// Exact cut norm of the coupled difference via subset enumeration on the
// support; only viable for small supports.
constexpr int kExactCoupledSupport = 20;

double coupled_cut_exact(const coupled_support& sp, const std::vector<double>& w1, int n1,
                         const std::vector<double>& w2, int n2) {
    step_kernel k;
    k.n = sp.size();
    k.masses = sp.g;
    k.values.resize(static_cast<std::size_t>(k.n) * k.n);
    for (int p = 0; p < k.n; ++p) {
        for (int q = 0; q < k.n; ++q) {
            k.values[static_cast<std::size_t>(p) * k.n + q] =
                w1[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)]) * n1 +
                   sp.a[static_cast<std::size_t>(q)]] -
                w2[static_cast<std::size_t>(sp.b[static_cast<std::size_t>(p)]) * n2 +
                   sp.b[static_cast<std::size_t>(q)]];
        }
    }
    return cut_norm_exact(k, kExactCoupledSupport).value;
}

}  // namespace

delta_result delta_exact_small(const step_triplet& t1_in, const step_triplet& t2_in,
                               const domain& dom) {
    require_uniform_square(t1_in, t2_in, "delta_exact_small", 8);
    const bool swapped = triplet_less(t2_in, t1_in);
    const step_triplet& t1 = swapped ? t2_in : t1_in;
    const step_triplet& t2 = swapped ? t1_in : t2_in;
    const int n = t1.n_labels;

    std::vector<int> phi(static_cast<std::size_t>(n));
    std::iota(phi.begin(), phi.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    double best_state = 0.0, best_cut = 0.0;
    std::vector<int> best_phi = phi;
    do {
        double state = 0.0;
        for (int i = 0; i < n; ++i)
            state += dom.distance(t1.state_at(i), t2.state_at(phi[static_cast<std::size_t>(i)]));
        state /= n;
        if (state >= best) continue;  // cut part is nonnegative
        const step_kernel diff = difference_under_perm(t1, t2, phi);
        const double cut = cut_norm_exact(diff, 8).value;
        if (state + cut < best) {
            best = state + cut;
            best_state = state;
            best_cut = cut;
            best_phi = phi;
        }
    } while (std::next_permutation(phi.begin(), phi.end()));

    delta_result out;
    out.value = best;
    out.state_part = best_state;
    out.cut_part = best_cut;
    out.plan = permutation_coupling(best_phi);
    if (swapped) out.plan = transpose_coupling(out.plan);
    out.certified = true;
    return out;
}

double cut_distance_exact_small(const step_kernel& k1, const step_kernel& k2) {
    k1.validate();
    k2.validate();
    if (k1.n != k2.n)
        throw config_error("cut_distance_exact_small: label counts differ");
    if (k1.n > 8)
        throw config_error("cut_distance_exact_small: needs n <= 8, got " +
                           std::to_string(k1.n));
    const int n = k1.n;
    const double u = 1.0 / n;
    for (double m : k1.masses)
        if (std::fabs(m - u) > 1e-12)
            throw config_error("cut_distance_exact_small: masses must be uniform");
    for (double m : k2.masses)
        if (std::fabs(m - u) > 1e-12)
            throw config_error("cut_distance_exact_small: masses must be uniform");

    std::vector<int> phi(static_cast<std::size_t>(n));
    std::iota(phi.begin(), phi.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        step_kernel diff = step_kernel::uniform(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                diff.values[static_cast<std::size_t>(i) * n + j] =
                    k1.at(i, j) - k2.at(phi[static_cast<std::size_t>(i)],
                                        phi[static_cast<std::size_t>(j)]);
        best = std::min(best, cut_norm_exact(diff, 8).value);
    } while (std::next_permutation(phi.begin(), phi.end()));
    return best;
}

delta_result delta_heuristic(const step_triplet& t1, const step_triplet& t2,
                             const domain& dom, const counter_rng& rng, int restarts,
                             int max_rounds) {
    t1.validate();
    t2.validate();
    if (t1.dim != t2.dim) throw config_error("delta_heuristic: dimensions differ");
    if (restarts < 1) throw config_error("delta_heuristic: restarts must be >= 1");
    const int n1 = t1.n_labels;
    const int n2 = t2.n_labels;

    std::vector<double> dist(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            dist[static_cast<std::size_t>(i) * n2 + j] =
                dom.distance(t1.state_at(i), t2.state_at(j));

    const bool square_uniform = [&] {
        if (n1 != n2) return false;
        const double u = 1.0 / n1;
        for (double m : t1.masses)
            if (std::fabs(m - u) > 1e-12) return false;
        for (double m : t2.masses)
            if (std::fabs(m - u) > 1e-12) return false;
        return true;
    }();

    struct evaluation {
        double state = 0.0;
        double cut = 0.0;
        double total() const { return state + cut; }
    };
    // Cheap evaluator used inside the descent; `strong` switches to the
    // exact coupled cut norm when the support allows it.
    const auto evaluate = [&](const coupling& plan, const counter_rng& crng,
                              bool strong) -> evaluation {
        evaluation ev;
        const coupled_support sp = support_of(plan);
        for (int p = 0; p < sp.size(); ++p)
            ev.state += sp.g[static_cast<std::size_t>(p)] *
                        dist[static_cast<std::size_t>(sp.a[static_cast<std::size_t>(p)]) * n2 +
                             sp.b[static_cast<std::size_t>(p)]];
        if (strong && sp.size() <= kExactCoupledSupport) {
            ev.cut = coupled_cut_exact(sp, t1.kernel, n1, t2.kernel, n2);
        } else {
            ev.cut = coupled_cut_heuristic(sp, t1.kernel, n1, t2.kernel, n2, crng,
                                           strong ? 8 : 3)
                         .value;
        }
        return ev;
    };

    coupling best_plan;
    evaluation best_ev;
    double best_total = std::numeric_limits<double>::infinity();
    int best_rounds = 0;

    for (int start = 0; start < restarts; ++start) {
        coupling plan;
        if (start == 0) {
            plan = solve_transport(t1.masses, t2.masses, dist).plan;
        } else if (start == 1) {
            plan = product_coupling(t1.masses, t2.masses);
        } else if (start == 2 && square_uniform) {
            std::vector<int> id(static_cast<std::size_t>(n1));
            std::iota(id.begin(), id.end(), 0);
            plan = permutation_coupling(id);
        } else {
            std::vector<double> rc(static_cast<std::size_t>(n1) * n2);
            for (std::size_t e = 0; e < rc.size(); ++e)
                rc[e] = rng.uniform(static_cast<std::uint64_t>(start), e,
                                    rng_role::coupling, 0);
            plan = solve_transport(t1.masses, t2.masses, rc).plan;
        }

        const counter_rng crng(rng.derive(static_cast<std::uint64_t>(start), 0,
                                            rng_role::witness));
        evaluation ev = evaluate(plan, crng, false);
        int round = 0;
        for (; round < max_rounds; ++round) {
            const coupled_support sp = support_of(plan);
            const coupled_cut_eval wit = coupled_cut_heuristic(sp, t1.kernel, n1, t2.kernel,
                                                               n2, crng, 3);
            // Transport cost = state distance + the witness terms a cell
            // would contribute if added to the coupling.
            std::vector<double> u1, u2, v1, v2;
            kernel_matvec(t1.kernel, n1, wit.t_a, false, u1);
            kernel_matvec(t2.kernel, n2, wit.t_b, false, u2);
            kernel_matvec(t1.kernel, n1, wit.s_a, true, v1);
            kernel_matvec(t2.kernel, n2, wit.s_b, true, v2);
            std::vector<double> cost(static_cast<std::size_t>(n1) * n2);
            for (int i = 0; i < n1; ++i) {
                for (int j = 0; j < n2; ++j) {
                    const double rm = wit.sign * (u1[static_cast<std::size_t>(i)] -
                                                  u2[static_cast<std::size_t>(j)]);
                    const double cm = wit.sign * (v1[static_cast<std::size_t>(i)] -
                                                  v2[static_cast<std::size_t>(j)]);
                    cost[static_cast<std::size_t>(i) * n2 + j] =
                        dist[static_cast<std::size_t>(i) * n2 + j] + std::max(rm, 0.0) +
                        std::max(cm, 0.0);
                }
            }
            const coupling vertex = solve_transport(t1.masses, t2.masses, cost).plan;
            coupling blend;
            blend.n1 = n1;
            blend.n2 = n2;
            blend.weights.resize(vertex.weights.size());
            for (std::size_t e = 0; e < vertex.weights.size(); ++e)
                blend.weights[e] = 0.5 * (plan.weights[e] + vertex.weights[e]);

            const evaluation ev_v = evaluate(vertex, crng, false);
            const evaluation ev_b = evaluate(blend, crng, false);
            const evaluation& cand = (ev_v.total() <= ev_b.total()) ? ev_v : ev_b;
            const coupling& cand_plan = (ev_v.total() <= ev_b.total()) ? vertex : blend;
            if (cand.total() < ev.total() - 1e-9) {
                ev = cand;
                plan = cand_plan;
            } else {
                break;
            }
        }
        if (ev.total() < best_total) {
            best_total = ev.total();
            best_plan = plan;
            best_ev = ev;
            best_rounds = round;
        }
    }

    // Local 2-swap polish when the best coupling is a relabeling.
    if (square_uniform && n1 <= 12) {
        const double u = 1.0 / n1;
        std::vector<int> phi(static_cast<std::size_t>(n1), -1);
        bool is_perm = true;
        for (int i = 0; i < n1 && is_perm; ++i) {
            for (int j = 0; j < n2; ++j) {
                const double v = best_plan.at(i, j);
                if (v > 1e-12 && std::fabs(v - u) > 1e-9) is_perm = false;
                if (std::fabs(v - u) <= 1e-9) {
                    if (phi[static_cast<std::size_t>(i)] >= 0) is_perm = false;
                    phi[static_cast<std::size_t>(i)] = j;
                }
            }
            if (phi[static_cast<std::size_t>(i)] < 0) is_perm = false;
        }
        if (is_perm) {
            const counter_rng crng(rng.derive(0xF01, 0, rng_role::witness));
            const auto perm_eval = [&](const std::vector<int>& p) {
                return evaluate(permutation_coupling(p), crng, true);
            };
            evaluation cur = perm_eval(phi);
            bool improved = true;
            while (improved) {
                improved = false;
                for (int i = 0; i < n1 && !improved; ++i) {
                    for (int j = i + 1; j < n1; ++j) {
                        std::swap(phi[static_cast<std::size_t>(i)],
                                  phi[static_cast<std::size_t>(j)]);
                        const evaluation sw = perm_eval(phi);
                        if (sw.total() < cur.total() - 1e-12) {
                            cur = sw;
                            improved = true;
                            break;
                        }
                        std::swap(phi[static_cast<std::size_t>(i)],
                                  phi[static_cast<std::size_t>(j)]);
                    }
                }
            }
            if (cur.total() <= best_total) {
                best_total = cur.total();
                best_plan = permutation_coupling(phi);
                best_ev = cur;
            }
        }
    }

    // Final honest evaluation of the winning coupling.
    const counter_rng final_rng(rng.derive(0xF00, 0, rng_role::witness));
    const evaluation final_ev = evaluate(best_plan, final_rng, true);

    delta_result out;
    out.state_part = final_ev.state;
    out.cut_part = final_ev.cut;
    out.value = final_ev.state + final_ev.cut;
    out.plan = best_plan;
    out.certified = false;
    out.rounds = best_rounds;
    return out;
}

}  // namespace coweave
