#include "coweave/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

#include "coweave/core/csv.hpp"
#include "coweave/core/error.hpp"
#include "coweave/core/parallel.hpp"
#include "coweave/graphon/cut_norm.hpp"
#include "coweave/graphon/sample.hpp"
#include "coweave/harness/fit.hpp"
#include "coweave/harness/toy.hpp"
#include "coweave/meanfield/coupled.hpp"
#include "coweave/meanfield/limit.hpp"
#include "coweave/meanfield/sample.hpp"
#include "coweave/metrics/delta.hpp"
#include "coweave/metrics/gamma.hpp"
#include "coweave/sim/dynamics.hpp"

namespace coweave {

namespace {

constexpr const char* kToolkitVersion = "0.1.0";

using json = nlohmann::json;

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buf;
}

// Accumulates everything run_experiment later packages: data/plot files in
// emission order, the per-label seeds, human-readable notes, and the claim
// the kind is exercising.
struct run_context {
    std::vector<output_file> data;
    std::vector<output_file> plots;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::string> notes;
    std::string claim;
    json extra = json::object();
};

void guard_memory(const experiment_spec& spec, int n, double projected_bytes) {
    if (projected_bytes > spec.memory_cap_bytes) {
        throw resource_error("experiment: sweep size N=" + std::to_string(n) + " projects ~" +
                             std::to_string(projected_bytes / 1e9) + " GB of working set (cap " +
                             std::to_string(spec.memory_cap_bytes / 1e9) + " GB)");
    }
}

std::uint64_t size_seed(const experiment_spec& spec, int n) {
    return counter_rng(spec.base.seed).derive(static_cast<std::uint64_t>(n), 0,
                                              rng_role::replicate);
}

// Snapshot times at the quarter points of the grid (deduplicated for very
// short grids); used whenever the spec does not pin its own list.
std::vector<double> default_snapshots(const time_grid& grid) {
    std::vector<double> out;
    for (int q = 1; q <= 4; ++q) {
        const std::int64_t idx = (grid.n_steps * q) / 4;
        const double t = grid.time_at(idx);
        if (out.empty() || t > out.back()) out.push_back(t);
    }
    return out;
}

std::vector<double> snapshots_for(const experiment_spec& spec) {
    return spec.snapshot_times.empty() ? default_snapshots(spec.base.grid)
                                       : spec.snapshot_times;
}

step_triplet empirical_triplet(const particle_ensemble& ens) { return to_triplet(ens); }

step_triplet limit_triplet(const limit_system& sys) {
    step_triplet t;
    t.n_labels = sys.n_entities();
    t.dim = sys.dim;
    t.masses = sys.entity_masses;
    t.states = sys.ens.states;
    t.kernel = sys.ens.weights;
    return t;
}

mixture_spec mixture_for(const run_config& cfg, int n_rows, const step_triplet& source) {
    if (cfg.system.mixture == "stratified") return mixture_spec::stratified(n_rows, source.n_labels);
    return mixture_spec::iid(n_rows, source.masses);
}

double sample_stderr(double sum, double sum_sq, int count) {
    if (count < 2) return 0.0;
    const double mean = sum / count;
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1));
    return std::sqrt(var / count);
}

json series(const std::string& file, const std::string& x, const std::string& y,
            const std::string& label, const std::string& error = "") {
    json s = {{"file", file}, {"x", x}, {"y", y}, {"label", label}};
    if (!error.empty()) s["error"] = error;
    return s;
}

json axis(const std::string& label, bool log) { return {{"label", label}, {"log", log}}; }

output_file plot_file(const std::string& name, const std::string& title, json x, json y,
                      json series_arr, json reference_lines = json::array()) {
    json p = {{"title", title},          {"x", std::move(x)},
              {"y", std::move(y)},       {"series", std::move(series_arr)},
              {"reference_lines", std::move(reference_lines)}};
    return {name, p.dump(2) + "\n"};
}

json fit_to_json(const rate_fit& fit) {
    json j;
    j["degenerate"] = fit.degenerate;
    j["reason"] = fit.reason;
    if (!fit.degenerate) {
        j["slope"] = fit.slope;
        j["intercept"] = fit.intercept;
        j["r2"] = fit.r2;
        j["slope_stderr"] = fit.slope_stderr;
    }
    json pts = json::array();
    for (const fit_point& p : fit.points) {
        pts.push_back({{"log_n", p.log_n}, {"log_error", p.log_error}, {"weight", p.weight}});
    }
    j["points"] = std::move(pts);
    return j;
}

// Attempts the rate fit, short-circuiting to a degenerate report when any
// mean is nonpositive (fit_rate would refuse log of those).
rate_fit try_fit(const std::vector<rate_point>& points) {
    if (points.size() < 3) {
        rate_fit out;
        out.degenerate = true;
        out.reason = "degenerate: fewer than 3 sweep points";
        return out;
    }
    return fit_rate(points);
}

// ---------------------------------------------------------------------------
// propagation_rate: per size N, replicas of the coupled particle/shadow run;
// emits one G(t) file per N, a summary over the sweep, and the rate fit on
// the final-time state means.
void run_propagation(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "the particle/shadow gap G(t) stays below exp(C1 t) C2 t / sqrt(N) and its "
        "final-time mean shrinks like a power of N";
    const step_triplet source = build_source_triplet(rc, spec.m_labels);
    const std::vector<double> snaps = snapshots_for(spec);
    const std::string hash = hash_hex(rc.hash);

    const bool trig = trig_path_applies(rc.coeffs);
    const double trig_arrays =
        trig ? (rc.coeffs.sigma.tag == kernel_tag::sine_diff ? 4.0 : 2.0) : 0.0;
    const double frames = static_cast<double>(rc.grid.n_steps) + 1.0;
    const double mk = static_cast<double>(source.n_labels) * spec.k_paths;
    const double batch = std::max(1, spec.threads);

    csv_writer summary({"N", "m_labels", "k_paths", "replicas", "t", "G_state", "G_state_stderr",
                        "G_weight", "G_weight_stderr", "gronwall_bound", "within_bound",
                        "low_resolution", "seed", "config_hash"});
    std::vector<rate_point> fit_points;
    json per_size = json::array();

    for (int n : spec.sweep) {
        const double nn = static_cast<double>(n);
        guard_memory(spec, n,
                     frames * mk * rc.dom.dim * 8.0 * (1.0 + trig_arrays) +
                         batch * snaps.size() * (nn * nn + nn) * 8.0 +
                         batch * (nn * mk + 2.0 * nn * nn) * 8.0);
        const std::uint64_t seed = size_seed(spec, n);
        ctx.seeds["N=" + std::to_string(n)] = seed;
        const propagation_result res = coupled_propagation_error(
            source, mixture_for(rc, n, source), rc.coeffs, rc.dom, rc.grid, spec.k_paths,
            spec.replicas, counter_rng(seed), spec.threads, snaps);

        csv_writer g({"t", "N", "G_state", "G_state_stderr", "G_weight", "G_weight_stderr", "C1",
                      "C2", "gronwall_bound", "seed", "config_hash"});
        for (const propagation_row& row : res.rows) {
            g.begin_row();
            g.push(row.t);
            g.push(n);
            g.push(row.g_state);
            g.push(row.g_state_stderr);
            g.push(row.g_weight);
            g.push(row.g_weight_stderr);
            g.push(res.c1);
            g.push(res.c2);
            g.push(row.envelope);
            g.push(seed);
            g.push(hash);
        }
        ctx.data.push_back({"g_t_N" + std::to_string(n) + ".csv", g.str()});

        const propagation_row& last = res.rows.back();
        summary.begin_row();
        summary.push(n);
        summary.push(res.m_labels);
        summary.push(res.k_paths);
        summary.push(res.replicas);
        summary.push(last.t);
        summary.push(last.g_state);
        summary.push(last.g_state_stderr);
        summary.push(last.g_weight);
        summary.push(last.g_weight_stderr);
        summary.push(last.envelope);
        summary.push(last.g_state <= last.envelope);
        summary.push(res.low_resolution);
        summary.push(seed);
        summary.push(hash);
        fit_points.push_back({nn, last.g_state, last.g_state_stderr});
        per_size.push_back({{"N", n},
                            {"C1", res.c1},
                            {"C2", res.c2},
                            {"w_sup", res.w_sup},
                            {"low_resolution", res.low_resolution}});
        if (res.low_resolution) {
            ctx.notes.push_back("N=" + std::to_string(n) +
                                ": reference resolution M*K < 4N; reference bias may dominate");
        }
    }
    ctx.data.push_back({"summary.csv", summary.str()});

    const rate_fit fit = try_fit(fit_points);
    ctx.data.push_back({"rate_fit.json", fit_to_json(fit).dump(2) + "\n"});
    ctx.extra["per_size"] = std::move(per_size);
    ctx.extra["rate_fit"] = fit_to_json(fit);
    ctx.notes.push_back(
        "the limit reference is solved once per sweep size and shared across replicas; its "
        "O(1/sqrt(M K)) sampling bias is not part of the reported standard errors");

    json refs = json::array();
    if (!fit.degenerate) {
        refs.push_back({{"slope", fit.slope},
                        {"anchor_x", spec.sweep.front()},
                        {"anchor_y", fit_points.front().error},
                        {"label", "fitted slope"}});
    }
    refs.push_back({{"slope", -0.5},
                    {"anchor_x", spec.sweep.front()},
                    {"anchor_y", fit_points.front().error},
                    {"label", "slope -1/2"}});
    ctx.plots.push_back(plot_file(
        "plot_g_vs_n.json", "final-time particle/shadow gap vs system size", axis("N", true),
        axis("G(t_end)", true),
        json::array({series("summary.csv", "N", "G_state", "state gap", "G_state_stderr"),
                     series("summary.csv", "N", "gronwall_bound", "a-priori envelope")}),
        refs));
    json by_time = json::array();
    for (int n : spec.sweep) {
        by_time.push_back(series("g_t_N" + std::to_string(n) + ".csv", "t", "G_state",
                                 "N=" + std::to_string(n), "G_state_stderr"));
    }
    ctx.plots.push_back(plot_file("plot_g_vs_t.json", "particle/shadow gap over time",
                                  axis("t", false), axis("G(t)", false), by_time));
}

// ---------------------------------------------------------------------------
// empirical_convergence: distance of the empirical triplet of a finished
// N-agent run to the discretized limit at the same time.
void run_empirical(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "the state/weight distance between the empirical data of an N-agent run and the "
        "discretized limit decreases as N grows";
    const step_triplet source = build_source_triplet(rc, spec.m_labels);
    const std::string hash = hash_hex(rc.hash);
    const double frames = static_cast<double>(rc.grid.n_steps) + 1.0;
    const double mk = static_cast<double>(source.n_labels) * spec.k_paths;

    const std::uint64_t ref_seed = counter_rng(spec.base.seed).derive(0x7ef, 1, rng_role::replicate);
    ctx.seeds["reference"] = ref_seed;
    const limit_solution ref = solve_limit(source, spec.k_paths, rc.coeffs, rc.dom, rc.grid,
                                           counter_rng(ref_seed), spec.threads);
    const step_triplet target = limit_triplet(ref.final_state);
    const dynamics_variant var =
        dynamics_variant::parse(rc.system.variant, rc.system.epsilon, rc.system.eta);

    csv_writer table({"N", "replicas", "mean_delta", "delta_stderr", "m_labels", "k_paths",
                      "seed", "config_hash"});
    std::vector<rate_point> fit_points;
    for (int n : spec.sweep) {
        const double nn = static_cast<double>(n);
        guard_memory(spec, n,
                     frames * mk * rc.dom.dim * 8.0 +
                         std::max(1, spec.threads) * (3.0 * nn * nn + nn * mk) * 8.0);
        const std::uint64_t seed = size_seed(spec, n);
        ctx.seeds["N=" + std::to_string(n)] = seed;
        std::vector<double> values(static_cast<std::size_t>(spec.replicas), 0.0);
        parallel_for_index(values.size(), spec.threads, [&](std::size_t r) {
            const std::uint64_t cell =
                counter_rng(seed).derive(r, 0, rng_role::replicate);
            const counter_rng rng(cell);
            particle_ensemble init = sample_mixture(source, mixture_for(rc, n, source), rng).ensemble;
            const simulation_result sim =
                simulate(init, rc.dom, rc.coeffs, var, rc.grid, rng, 1, {});
            const delta_result d = delta_heuristic(empirical_triplet(sim.final_state), target,
                                                   rc.dom, rng, 2, 8);
            values[r] = d.value;
        });
        double sum = 0.0, sum_sq = 0.0;
        for (double v : values) {
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / spec.replicas;
        const double se = sample_stderr(sum, sum_sq, spec.replicas);
        table.begin_row();
        table.push(n);
        table.push(spec.replicas);
        table.push(mean);
        table.push(se);
        table.push(source.n_labels);
        table.push(spec.k_paths);
        table.push(seed);
        table.push(hash);
        fit_points.push_back({nn, mean, se});
    }
    ctx.data.push_back({"empirical.csv", table.str()});
    const rate_fit fit = try_fit(fit_points);
    ctx.data.push_back({"rate_fit.json", fit_to_json(fit).dump(2) + "\n"});
    ctx.extra["rate_fit"] = fit_to_json(fit);
    ctx.notes.push_back(
        "distances are heuristic upper bounds (alternating witness/transport descent), and the "
        "shared discretized reference carries its own O(1/sqrt(M K)) error");
    json refs = json::array();
    if (!fit.degenerate) {
        refs.push_back({{"slope", fit.slope},
                        {"anchor_x", spec.sweep.front()},
                        {"anchor_y", fit_points.front().error},
                        {"label", "fitted slope"}});
    }
    ctx.plots.push_back(plot_file(
        "plot_empirical.json", "empirical-to-limit distance vs system size", axis("N", true),
        axis("delta", true),
        json::array({series("empirical.csv", "N", "mean_delta", "mean distance", "delta_stderr")}),
        refs));
}

// ---------------------------------------------------------------------------
// stability: perturb the initial triplet, integrate both systems on shared
// noise, and report final vs initial distance with the additive sampling
// surrogate 8 sup|w| / sqrt(log N) broken out.
void run_stability(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "runs started from nearby initial triplets stay close: the final distance is "
        "controlled by the initial distance plus a sampling term of order 1/sqrt(log N)";
    const std::string hash = hash_hex(rc.hash);
    const dynamics_variant var =
        dynamics_variant::parse(rc.system.variant, rc.system.epsilon, rc.system.eta);

    csv_writer table({"N", "perturbation", "replica", "delta_initial", "delta_final", "surrogate",
                      "ratio", "seed", "config_hash"});
    csv_writer summary({"N", "perturbation", "replicas", "mean_initial", "mean_final",
                        "mean_ratio", "seed", "config_hash"});

    struct cell_out {
        double d0 = 0.0, df = 0.0, surrogate = 0.0, ratio = 0.0;
        std::uint64_t seed = 0;
    };

    for (int n : spec.sweep) {
        guard_memory(
            spec, n,
            std::max(1, spec.threads) * 8.0 * static_cast<double>(n) * n * 8.0);
        const step_triplet base_triplet = build_source_triplet(rc, n);
        if (base_triplet.n_labels != n) {
            throw config_error("stability: source triplet has " +
                               std::to_string(base_triplet.n_labels) + " labels but the sweep asks for " +
                               std::to_string(n));
        }
        const std::uint64_t seed_n = size_seed(spec, n);
        ctx.seeds["N=" + std::to_string(n)] = seed_n;

        for (std::size_t pi = 0; pi < spec.perturbations.size(); ++pi) {
            const double p = spec.perturbations[pi];
            std::vector<cell_out> cells(static_cast<std::size_t>(spec.replicas));
            parallel_for_index(cells.size(), spec.threads, [&](std::size_t r) {
                const std::uint64_t cell_seed = counter_rng(seed_n).derive(
                    pi, static_cast<std::int64_t>(r), rng_role::replicate);
                const counter_rng rng(cell_seed);
                step_triplet other = base_triplet;
                for (int i = 0; i < n; ++i) {
                    for (int c = 0; c < other.dim; ++c) {
                        const double u =
                            rng.uniform(static_cast<std::uint64_t>(i), 0, rng_role::init, c);
                        double x = other.states[static_cast<std::size_t>(i) * other.dim + c] +
                                   p * (2.0 * u - 1.0);
                        if (rc.dom.geom == geometry::torus) x = domain::reduce_coord(x);
                        other.states[static_cast<std::size_t>(i) * other.dim + c] = x;
                    }
                    for (int j = 0; j < n; ++j) {
                        const double u = rng.uniform(
                            static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + j, 1,
                            rng_role::init, 0);
                        other.kernel[static_cast<std::size_t>(i) * n + j] += p * (2.0 * u - 1.0);
                    }
                }
                const delta_result d0 =
                    n <= 6 ? delta_exact_small(base_triplet, other, rc.dom)
                           : delta_heuristic(base_triplet, other, rc.dom, rng, 4, 12);
                particle_ensemble e1 =
                    sample_mixture(base_triplet, mixture_spec::dirac(n), rng).ensemble;
                particle_ensemble e2 = sample_mixture(other, mixture_spec::dirac(n), rng).ensemble;
                const simulation_result s1 =
                    simulate(e1, rc.dom, rc.coeffs, var, rc.grid, rng, 1, {});
                const simulation_result s2 =
                    simulate(e2, rc.dom, rc.coeffs, var, rc.grid, rng, 1, {});
                const step_triplet f1 = empirical_triplet(s1.final_state);
                const step_triplet f2 = empirical_triplet(s2.final_state);
                const delta_result df =
                    n <= 6 ? delta_exact_small(f1, f2, rc.dom)
                           : delta_heuristic(f1, f2, rc.dom, rng, 4, 12);
                double sup_w = 0.0;
                for (double w : base_triplet.kernel) sup_w = std::max(sup_w, std::fabs(w));
                for (double w : other.kernel) sup_w = std::max(sup_w, std::fabs(w));
                cell_out out;
                out.d0 = d0.value;
                out.df = df.value;
                out.surrogate = 8.0 * sup_w / std::sqrt(std::log(static_cast<double>(n)));
                // Amplification of the initial distance over the run; the
                // surrogate sampling term is reported alongside, not mixed in.
                out.ratio = out.d0 > 0.0 ? out.df / out.d0 : 0.0;
                out.seed = cell_seed;
                cells[r] = out;
            });
            double s0 = 0.0, sf = 0.0, sr = 0.0;
            for (std::size_t r = 0; r < cells.size(); ++r) {
                const cell_out& c = cells[r];
                table.begin_row();
                table.push(n);
                table.push(p);
                table.push(static_cast<std::int64_t>(r));
                table.push(c.d0);
                table.push(c.df);
                table.push(c.surrogate);
                table.push(c.ratio);
                table.push(c.seed);
                table.push(hash);
                s0 += c.d0;
                sf += c.df;
                sr += c.ratio;
            }
            summary.begin_row();
            summary.push(n);
            summary.push(p);
            summary.push(spec.replicas);
            summary.push(s0 / spec.replicas);
            summary.push(sf / spec.replicas);
            summary.push(sr / spec.replicas);
            summary.push(seed_n);
            summary.push(hash);
        }
    }
    ctx.data.push_back({"stability.csv", table.str()});
    ctx.data.push_back({"stability_summary.csv", summary.str()});
    ctx.notes.push_back(
        "the surrogate column 8 sup|w| / sqrt(log N) is the sampling-term scale and dominates "
        "at desk sizes, so ratio = final/initial is descriptive rather than a pass/fail "
        "bound; both runs of a pair share Brownian increments");
    json srs = json::array();
    for (int n : spec.sweep) {
        srs.push_back(series("stability_summary.csv", "mean_initial", "mean_final",
                             "N=" + std::to_string(n)));
    }
    ctx.plots.push_back(plot_file("plot_stability.json", "final vs initial triplet distance",
                                  axis("initial delta", false), axis("final delta", false), srs,
                                  json::array({{{"slope", 1.0},
                                                {"anchor_x", 0.0},
                                                {"anchor_y", 0.0},
                                                {"label", "identity"}}})));
}

// ---------------------------------------------------------------------------
// sampling_rate: cut-norm deviation of n-samples of a 2-block kernel, with a
// constant-kernel control whose deviation vanishes identically.
void run_sampling(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "the exact cut norm of an n-sample concentrates at the source kernel's cut norm as n "
        "grows; sampling a constant kernel reproduces it exactly";
    const std::string hash = hash_hex(rc.hash);

    step_kernel source;
    if (!rc.system.source.empty()) {
        source = step_triplet::load(rc.system.source).as_step_kernel();
    } else {
        source.n = 2;
        source.masses = {0.5, 0.5};
        source.values = {1.0, 0.0, 0.0, 1.0};
    }
    source.validate();
    const double source_cut = cut_norm_exact(source).value;

    csv_writer table({"n", "replicas", "mean_deviation", "deviation_stderr", "mean_control",
                      "max_control", "source_cut_norm", "seed", "config_hash"});
    std::vector<rate_point> fit_points;
    for (int n : spec.sweep) {
        guard_memory(spec, n,
                     std::max(1, spec.threads) * 4.0 * static_cast<double>(n) * n * 8.0);
        const std::uint64_t seed = size_seed(spec, n);
        ctx.seeds["n=" + std::to_string(n)] = seed;
        const step_kernel control = step_kernel::uniform(n, 0.5);
        const double control_cut = cut_norm_exact(control).value;
        const mixture_spec mix = mixture_spec::iid(n, source.masses);
        const mixture_spec control_mix = mixture_spec::iid(n, control.masses);

        std::vector<double> devs(static_cast<std::size_t>(spec.replicas), 0.0);
        std::vector<double> controls(static_cast<std::size_t>(spec.replicas), 0.0);
        parallel_for_index(devs.size(), spec.threads, [&](std::size_t r) {
            const std::uint64_t cell = counter_rng(seed).derive(r, 0, rng_role::replicate);
            const counter_rng rng(cell);
            const sampled_kernel s = sample_kernel(source, mix, rng);
            devs[r] = std::fabs(cut_norm_exact(s.kernel).value - source_cut);
            const sampled_kernel sc = sample_kernel(control, control_mix, rng);
            controls[r] = std::fabs(cut_norm_exact(sc.kernel).value - control_cut);
        });
        double sum = 0.0, sum_sq = 0.0, csum = 0.0, cmax = 0.0;
        for (std::size_t r = 0; r < devs.size(); ++r) {
            sum += devs[r];
            sum_sq += devs[r] * devs[r];
            csum += controls[r];
            cmax = std::max(cmax, controls[r]);
        }
        const double mean = sum / spec.replicas;
        table.begin_row();
        table.push(n);
        table.push(spec.replicas);
        table.push(mean);
        table.push(sample_stderr(sum, sum_sq, spec.replicas));
        table.push(csum / spec.replicas);
        table.push(cmax);
        table.push(source_cut);
        table.push(seed);
        table.push(hash);
        fit_points.push_back({static_cast<double>(n), mean,
                              sample_stderr(sum, sum_sq, spec.replicas)});
    }
    ctx.data.push_back({"sampling.csv", table.str()});
    const rate_fit fit = try_fit(fit_points);
    ctx.data.push_back({"rate_fit.json", fit_to_json(fit).dump(2) + "\n"});
    ctx.extra["rate_fit"] = fit_to_json(fit);
    ctx.extra["source_cut_norm"] = source_cut;
    json refs = json::array();
    if (!fit.degenerate) {
        refs.push_back({{"slope", fit.slope},
                        {"anchor_x", spec.sweep.front()},
                        {"anchor_y", fit_points.front().error},
                        {"label", "fitted slope"}});
    }
    ctx.plots.push_back(plot_file(
        "plot_sampling.json", "cut-norm deviation of n-samples", axis("n", true),
        axis("|cut(sample) - cut(source)|", true),
        json::array({series("sampling.csv", "n", "mean_deviation", "mean deviation",
                            "deviation_stderr")}),
        refs));
}

// ---------------------------------------------------------------------------
// toy_model: the matched-interaction pair; verifies the state trajectories
// coincide while the weight matrices stay apart, evaluates the operator
// coupling objective at the residue coupling, and freezes the exact distance
// of the reduced 6-agent instance.
void run_toy(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "two systems with identical per-class interaction totals but different weight "
        "matrices evolve identical states; the residue coupling exhibits a zero value of the "
        "operator-coupling objective while the relabeling distance stays positive";
    if (rc.coeffs.nu != 0.0)
        throw config_error("toy_model: requires nu = 0 (noise-free state dynamics)");
    if (rc.dom.dim != 1)
        throw config_error("toy_model: the pair is built with 1-D states, [domain] dim must be 1");
    const dynamics_variant var =
        dynamics_variant::parse(rc.system.variant, rc.system.epsilon, rc.system.eta);
    if (var.k == dynamics_variant::kind::weight_noise && var.eta != 0.0)
        throw config_error("toy_model: requires eta = 0 (noise-free weight dynamics)");
    const std::string hash = hash_hex(rc.hash);
    const std::vector<double> snaps = snapshots_for(spec);

    csv_writer summary({"n", "sup_state_diff", "gamma_initial", "gamma_final",
                        "delta_reduced_6", "seed", "config_hash"});

    const toy_pair reduced = make_toy_pair(6);
    const double delta6 = delta_exact_small(reduced.bipartite, reduced.cycle, rc.dom).value;
    ctx.extra["delta_reduced_6"] = delta6;

    for (int n : spec.sweep) {
        guard_memory(spec, n, 8.0 * static_cast<double>(n) * n * 8.0);
        const std::uint64_t seed = size_seed(spec, n);
        ctx.seeds["n=" + std::to_string(n)] = seed;
        const counter_rng rng(seed);
        const toy_pair pair = make_toy_pair(n);
        const double gamma0 =
            gamma_objective(pair.bipartite, pair.cycle, rc.dom, toy_periodic_coupling(n));

        particle_ensemble e1 = sample_mixture(pair.bipartite, mixture_spec::dirac(n), rng).ensemble;
        particle_ensemble e2 = sample_mixture(pair.cycle, mixture_spec::dirac(n), rng).ensemble;
        step_workspace ws1, ws2;
        std::vector<std::size_t> snap_idx;
        for (double t : snaps) snap_idx.push_back(static_cast<std::size_t>(rc.grid.step_of(t)));

        csv_writer trace({"t", "state_diff", "weight_diff", "weight_cut_heuristic", "seed",
                          "config_hash"});
        double sup_diff = 0.0;
        const auto state_diff = [&]() {
            double d = 0.0;
            for (int i = 0; i < n; ++i)
                d = std::max(d, rc.dom.distance(e1.state_at(i), e2.state_at(i)));
            return d;
        };
        const auto record = [&](double t) {
            check_weight_bound(e1, rc.coeffs, rc.grid.dt, var.eta);
            check_weight_bound(e2, rc.coeffs, rc.grid.dt, var.eta);
            double wdiff = 0.0;
            for (std::size_t p = 0; p < e1.weights.size(); ++p)
                wdiff = std::max(wdiff, std::fabs(e1.weights[p] - e2.weights[p]));
            const step_kernel kd =
                kernel_difference(empirical_triplet(e1).as_step_kernel(),
                                  empirical_triplet(e2).as_step_kernel());
            const double cut = cut_norm_heuristic(kd, 8, rng).value;
            trace.begin_row();
            trace.push(t);
            trace.push(state_diff());
            trace.push(wdiff);
            trace.push(cut);
            trace.push(seed);
            trace.push(hash);
        };
        record(0.0);
        for (std::int64_t k = 0; k < rc.grid.n_steps; ++k) {
            step(e1, rc.dom, rc.coeffs, var, rc.grid.dt, rng, spec.threads, ws1);
            step(e2, rc.dom, rc.coeffs, var, rc.grid.dt, rng, spec.threads, ws2);
            e1.t = rc.grid.time_at(k + 1);
            e2.t = rc.grid.time_at(k + 1);
            sup_diff = std::max(sup_diff, state_diff());
            if (std::find(snap_idx.begin(), snap_idx.end(),
                          static_cast<std::size_t>(k + 1)) != snap_idx.end()) {
                record(rc.grid.time_at(k + 1));
            }
        }
        ctx.data.push_back({"toy_trace_N" + std::to_string(n) + ".csv", trace.str()});

        const double gamma_final =
            gamma_objective(empirical_triplet(e1), empirical_triplet(e2), rc.dom,
                            toy_periodic_coupling(n));
        summary.begin_row();
        summary.push(n);
        summary.push(sup_diff);
        summary.push(gamma0);
        summary.push(gamma_final);
        summary.push(delta6);
        summary.push(seed);
        summary.push(hash);
    }
    ctx.data.push_back({"toy_summary.csv", summary.str()});
    ctx.notes.push_back(
        "state trajectories agree up to floating-point accumulation only; the reported "
        "sup_state_diff quantifies the residual");
    ctx.plots.push_back(plot_file(
        "plot_toy.json", "matched-interaction pair over time", axis("t", false),
        axis("difference", false),
        json::array({series("toy_trace_N" + std::to_string(spec.sweep.front()) + ".csv", "t",
                            "state_diff", "sup state difference"),
                     series("toy_trace_N" + std::to_string(spec.sweep.front()) + ".csv", "t",
                            "weight_cut_heuristic", "cut norm of weight difference")})));
}

// ---------------------------------------------------------------------------
// conjecture_sweep: multiplicative weight noise of increasing strength on a
// shared Brownian environment, measured against the noise-free run.
void run_conjecture(const experiment_spec& spec, run_context& ctx) {
    const run_config& rc = spec.base;
    ctx.claim =
        "exploratory: small multiplicative weight noise is not expected to move the final "
        "empirical triplet far from the noise-free run";
    const std::string hash = hash_hex(rc.hash);

    csv_writer table({"N", "eta", "replicas", "mean_delta_vs_zero", "delta_stderr",
                      "mean_weight_sup", "seed", "config_hash"});
    for (int n : spec.sweep) {
        guard_memory(spec, n,
                     std::max(1, spec.threads) *
                         (static_cast<double>(spec.etas.size()) + 4.0) *
                         static_cast<double>(n) * n * 8.0);
        const std::uint64_t seed = size_seed(spec, n);
        ctx.seeds["N=" + std::to_string(n)] = seed;
        run_config cell_cfg = rc;
        cell_cfg.system.n_agents = n;

        const std::size_t n_etas = spec.etas.size();
        std::vector<std::vector<double>> deltas(n_etas,
                                                std::vector<double>(spec.replicas, 0.0));
        std::vector<std::vector<double>> wsups(n_etas,
                                               std::vector<double>(spec.replicas, 0.0));
        parallel_for_index(static_cast<std::size_t>(spec.replicas), spec.threads,
                           [&](std::size_t r) {
            const std::uint64_t cell = counter_rng(seed).derive(r, 0, rng_role::replicate);
            const counter_rng rng(cell);
            const particle_ensemble init = build_initial_ensemble(cell_cfg, rng);
            std::vector<step_triplet> finals;
            finals.reserve(n_etas);
            for (std::size_t e = 0; e < n_etas; ++e) {
                const double eta = spec.etas[e];
                const dynamics_variant var = eta == 0.0 ? dynamics_variant::base()
                                                        : dynamics_variant::weight_noise(eta);
                const simulation_result sim =
                    simulate(init, rc.dom, rc.coeffs, var, rc.grid, rng, 1, {});
                finals.push_back(empirical_triplet(sim.final_state));
                double ws = 0.0;
                for (double w : sim.final_state.weights) ws = std::max(ws, std::fabs(w));
                wsups[e][r] = ws;
            }
            for (std::size_t e = 0; e < n_etas; ++e) {
                deltas[e][r] = e == 0 ? 0.0
                                      : delta_heuristic(finals[e], finals[0], rc.dom, rng, 2, 8)
                                            .value;
            }
        });
        for (std::size_t e = 0; e < n_etas; ++e) {
            double sum = 0.0, sum_sq = 0.0, wsum = 0.0;
            for (int r = 0; r < spec.replicas; ++r) {
                sum += deltas[e][r];
                sum_sq += deltas[e][r] * deltas[e][r];
                wsum += wsups[e][r];
            }
            table.begin_row();
            table.push(n);
            table.push(spec.etas[e]);
            table.push(spec.replicas);
            table.push(sum / spec.replicas);
            table.push(sample_stderr(sum, sum_sq, spec.replicas));
            table.push(wsum / spec.replicas);
            table.push(seed);
            table.push(hash);
        }
    }
    ctx.data.push_back({"conjecture.csv", table.str()});
    ctx.notes.push_back(
        "exploratory sweep: all noise strengths of a replica share the same Brownian "
        "environment and initial data, so differences isolate the weight-noise channel");
    json srs = json::array();
    for (int n : spec.sweep) {
        srs.push_back(
            series("conjecture.csv", "eta", "mean_delta_vs_zero", "N=" + std::to_string(n)));
    }
    ctx.plots.push_back(plot_file("plot_conjecture.json",
                                  "distance to the noise-free run vs noise strength",
                                  axis("eta", false), axis("delta", false), srs));
}

}  // namespace

std::string experiment_kind_name(experiment_kind kind) {
    switch (kind) {
        case experiment_kind::propagation_rate: return "propagation_rate";
        case experiment_kind::empirical_convergence: return "empirical_convergence";
        case experiment_kind::stability: return "stability";
        case experiment_kind::sampling_rate: return "sampling_rate";
        case experiment_kind::toy_model: return "toy_model";
        case experiment_kind::conjecture_sweep: return "conjecture_sweep";
    }
    return "propagation_rate";
}

experiment_kind parse_experiment_kind(const std::string& name) {
    if (name == "propagation_rate") return experiment_kind::propagation_rate;
    if (name == "empirical_convergence") return experiment_kind::empirical_convergence;
    if (name == "stability") return experiment_kind::stability;
    if (name == "sampling_rate") return experiment_kind::sampling_rate;
    if (name == "toy_model") return experiment_kind::toy_model;
    if (name == "conjecture_sweep") return experiment_kind::conjecture_sweep;
    throw config_error("unknown experiment kind '" + name +
                       "' (expected propagation_rate, empirical_convergence, stability, "
                       "sampling_rate, toy_model, conjecture_sweep)");
}

void experiment_spec::validate() const {
    if (sweep.empty()) throw config_error("experiment: sweep must not be empty");
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (sweep[i] < 2 || sweep[i] > 8192)
            throw config_error("experiment: sweep entries must lie in [2, 8192]");
        if (i > 0 && sweep[i] <= sweep[i - 1])
            throw config_error("experiment: sweep must be strictly increasing");
    }
    if (replicas < 8) throw config_error("experiment: replicas must be >= 8");
    if (m_labels < 1 || k_paths < 1 || static_cast<long long>(m_labels) * k_paths > 8192)
        throw config_error("experiment: m_labels * k_paths must lie in [1, 8192]");
    if (threads < 1) throw config_error("experiment: threads must be >= 1");
    if (!(memory_cap_bytes > 0.0)) throw config_error("experiment: memory cap must be positive");
    if (kind == experiment_kind::sampling_rate && sweep.back() > 24)
        throw config_error("experiment: sampling_rate needs exact cut norms, sweep max is 24");
    if (kind == experiment_kind::toy_model) {
        for (int n : sweep)
            if (n % 6 != 0)
                throw config_error("experiment: toy_model sweep entries must be multiples of 6");
    }
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        if (!(perturbations[i] > 0.0))
            throw config_error("experiment: perturbations must be positive");
        if (i > 0 && perturbations[i] <= perturbations[i - 1])
            throw config_error("experiment: perturbations must be strictly increasing");
    }
    if (kind == experiment_kind::stability && perturbations.empty())
        throw config_error("experiment: stability needs a nonempty perturbation grid");
    if (kind == experiment_kind::conjecture_sweep) {
        if (etas.empty() || etas.front() != 0.0)
            throw config_error("experiment: conjecture_sweep etas must start at 0");
        for (std::size_t i = 1; i < etas.size(); ++i)
            if (etas[i] <= etas[i - 1])
                throw config_error("experiment: etas must be strictly increasing");
    }
    for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
        base.grid.step_of(snapshot_times[i]);  // throws when off the grid
        if (i > 0 && snapshot_times[i] <= snapshot_times[i - 1])
            throw config_error("experiment: snapshot_times must be strictly increasing");
    }
}

experiment_spec parse_experiment(const toml_doc& doc, std::int64_t seed_override,
                                 const std::string& out_dir, int threads) {
    experiment_spec spec;
    spec.base = validate_config(doc, seed_override);
    spec.kind = parse_experiment_kind(doc.get_string_or("experiment", "kind", "propagation_rate"));
    spec.out_dir = out_dir;
    spec.threads = threads;

    if (doc.has("experiment", "sweep")) {
        for (std::int64_t v : doc.get_i64_array("experiment", "sweep"))
            spec.sweep.push_back(static_cast<int>(v));
    } else {
        switch (spec.kind) {
            case experiment_kind::propagation_rate: spec.sweep = {50, 100, 200, 400}; break;
            case experiment_kind::empirical_convergence: spec.sweep = {16, 32, 64}; break;
            case experiment_kind::stability: spec.sweep = {12, 24}; break;
            case experiment_kind::sampling_rate: spec.sweep = {8, 12, 16, 20}; break;
            case experiment_kind::toy_model: spec.sweep = {12}; break;
            case experiment_kind::conjecture_sweep: spec.sweep = {12, 24}; break;
        }
    }
    const bool small_reference = spec.kind == experiment_kind::empirical_convergence;
    spec.m_labels =
        static_cast<int>(doc.get_i64_or("experiment", "m_labels", small_reference ? 16 : 64));
    spec.k_paths =
        static_cast<int>(doc.get_i64_or("experiment", "k_paths", small_reference ? 8 : 64));
    const std::int64_t default_replicas =
        spec.kind == experiment_kind::propagation_rate
            ? 64
            : (spec.kind == experiment_kind::sampling_rate ? 200 : 8);
    spec.replicas = static_cast<int>(doc.get_i64_or("experiment", "replicas", default_replicas));
    if (doc.has("experiment", "snapshot_times"))
        spec.snapshot_times = doc.get_f64_array("experiment", "snapshot_times");
    if (doc.has("experiment", "perturbations"))
        spec.perturbations = doc.get_f64_array("experiment", "perturbations");
    else
        spec.perturbations = {0.05, 0.1, 0.2, 0.4};
    if (doc.has("experiment", "etas"))
        spec.etas = doc.get_f64_array("experiment", "etas");
    else
        spec.etas = {0.0, 0.05, 0.1, 0.2};
    spec.memory_cap_bytes = doc.get_f64_or("experiment", "memory_cap_gb", 4.0) * 1e9;
    spec.validate();
    return spec;
}

step_triplet build_source_triplet(const run_config& cfg, int m_labels) {
    if (!cfg.system.source.empty()) {
        step_triplet t = step_triplet::load(cfg.system.source);
        if (t.dim != cfg.dom.dim)
            throw config_error("source triplet '" + cfg.system.source + "' has dimension " +
                               std::to_string(t.dim) + " but [domain] dim is " +
                               std::to_string(cfg.dom.dim));
        return t;
    }
    if (m_labels < 1) throw config_error("source triplet: label count must be >= 1");
    step_triplet t = step_triplet::uniform(m_labels, cfg.dom.dim);
    const double window = cfg.dom.geom == geometry::torus ? kTwoPi : 1.0;
    const counter_rng rng(cfg.seed);
    for (int m = 0; m < m_labels; ++m) {
        for (int c = 0; c < cfg.dom.dim; ++c) {
            double x;
            if (cfg.system.state_init == "uniform") {
                x = window * rng.uniform(static_cast<std::uint64_t>(m), 0, rng_role::init, c);
            } else {
                x = window * static_cast<double>(m) / m_labels;
            }
            t.states[static_cast<std::size_t>(m) * cfg.dom.dim + c] =
                cfg.dom.reduce_coord(x);
        }
    }
    for (double& w : t.kernel) w = cfg.system.weight_init;
    t.validate();
    return t;
}

particle_ensemble build_initial_ensemble(const run_config& cfg, const counter_rng& rng) {
    const int n = cfg.system.n_agents;
    if (!cfg.system.source.empty()) {
        const step_triplet source = step_triplet::load(cfg.system.source);
        if (source.dim != cfg.dom.dim)
            throw config_error("source triplet '" + cfg.system.source + "' has dimension " +
                               std::to_string(source.dim) + " but [domain] dim is " +
                               std::to_string(cfg.dom.dim));
        const mixture_spec mix = cfg.system.mixture == "stratified"
                                     ? mixture_spec::stratified(n, source.n_labels)
                                     : mixture_spec::iid(n, source.masses);
        return sample_mixture(source, mix, rng).ensemble;
    }
    particle_ensemble ens = particle_ensemble::make(n, cfg.dom.dim);
    const double window = cfg.dom.geom == geometry::torus ? kTwoPi : 1.0;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < cfg.dom.dim; ++c) {
            double x;
            if (cfg.system.state_init == "uniform") {
                x = window * rng.uniform(static_cast<std::uint64_t>(i), 0, rng_role::init, c);
            } else {
                x = window * static_cast<double>(i) / n;
            }
            ens.states[static_cast<std::size_t>(i) * cfg.dom.dim + c] = cfg.dom.reduce_coord(x);
        }
    }
    std::fill(ens.weights.begin(), ens.weights.end(), cfg.system.weight_init);
    ens.w0_sup = std::fabs(cfg.system.weight_init);
    ens.validate(cfg.dom);
    return ens;
}

experiment_bundle run_experiment(const experiment_spec& spec) {
    spec.validate();
    run_context ctx;
    switch (spec.kind) {
        case experiment_kind::propagation_rate: run_propagation(spec, ctx); break;
        case experiment_kind::empirical_convergence: run_empirical(spec, ctx); break;
        case experiment_kind::stability: run_stability(spec, ctx); break;
        case experiment_kind::sampling_rate: run_sampling(spec, ctx); break;
        case experiment_kind::toy_model: run_toy(spec, ctx); break;
        case experiment_kind::conjecture_sweep: run_conjecture(spec, ctx); break;
    }

    experiment_bundle bundle;
    bundle.kind = spec.kind;
    bundle.data_files = std::move(ctx.data);
    bundle.plot_specs = std::move(ctx.plots);

    json meta;
    meta["kind"] = experiment_kind_name(spec.kind);
    meta["claim"] = ctx.claim;
    meta["config_hash"] = hash_hex(spec.base.hash);
    meta["root_seed"] = spec.base.seed;
    json seeds = json::object();
    for (const auto& [label, seed] : ctx.seeds) seeds[label] = seed;
    meta["seeds"] = std::move(seeds);
    meta["sweep"] = spec.sweep;
    meta["replicas"] = spec.replicas;
    meta["threads"] = spec.threads;
    meta["m_labels"] = spec.m_labels;
    meta["k_paths"] = spec.k_paths;
    meta["versions"] = {{"toolkit", kToolkitVersion}, {"compiler", __VERSION__}};
    meta["generated_at"] = iso_utc_now();
    json outputs = json::array();
    for (const output_file& f : bundle.data_files) outputs.push_back(f.name);
    for (const output_file& f : bundle.plot_specs) outputs.push_back(f.name);
    meta["outputs"] = std::move(outputs);
    meta["notes"] = ctx.notes;
    if (!ctx.extra.empty()) meta["details"] = std::move(ctx.extra);
    bundle.metadata_json = meta.dump(2) + "\n";
    return bundle;
}

void emit_outputs(const experiment_bundle& bundle, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw config_error("cannot create output directory '" + out_dir + "': " + ec.message());
    const auto write = [&](const output_file& f) {
        const std::string path = out_dir + "/" + f.name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write file '" + path + "'");
        out << f.contents;
        if (!out) throw config_error("write failed for '" + path + "'");
    };
    for (const output_file& f : bundle.data_files) write(f);
    for (const output_file& f : bundle.plot_specs) write(f);
    write({"metadata.json", bundle.metadata_json});
}

}  // namespace coweave
