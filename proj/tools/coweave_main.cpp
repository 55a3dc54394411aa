// coweave command line: run particle simulations and discretized-limit
// solves, compare state/weight data under the toolkit's metrics, sample
// kernels and triplets, orchestrate experiments, and fit convergence rates.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 resource guard,
// 4 numerical failure, 1 unexpected internal error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coweave/core/config.hpp"
#include "coweave/core/csv.hpp"
#include "coweave/core/error.hpp"
#include "coweave/core/parallel.hpp"
#include "coweave/graphon/cut_norm.hpp"
#include "coweave/graphon/sample.hpp"
#include "coweave/harness/experiment.hpp"
#include "coweave/harness/fit.hpp"
#include "coweave/meanfield/limit.hpp"
#include "coweave/meanfield/sample.hpp"
#include "coweave/metrics/delta.hpp"
#include "coweave/metrics/gamma.hpp"
#include "coweave/metrics/wasserstein.hpp"
#include "coweave/sim/dynamics.hpp"

namespace {

using namespace coweave;

struct global_options {
    std::string config_path;
    std::int64_t seed_override = -1;
    int threads = default_thread_count();
    std::string out_dir = ".";
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory '" + dir + "': " + ec.message());
}

toml_doc load_config(const global_options& g) {
    if (g.config_path.empty()) throw config_error("--config <path> is required");
    return toml_doc::parse_file(g.config_path);
}

std::vector<double> snapshot_times_from(const toml_doc& doc, const time_grid& grid) {
    if (!doc.has("time", "snapshot_times")) return {grid.t_end};
    std::vector<double> times = doc.get_f64_array("time", "snapshot_times");
    for (double t : times) grid.step_of(t);  // throws when off the grid
    return times;
}

std::string snapshot_name(const std::string& prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.csv", prefix.c_str(), index);
    return buf;
}

int run_simulate(const global_options& g) {
    const toml_doc doc = load_config(g);
    const run_config cfg = validate_config(doc, g.seed_override);
    const counter_rng rng(cfg.seed);
    const particle_ensemble init = build_initial_ensemble(cfg, rng);
    const dynamics_variant var =
        dynamics_variant::parse(cfg.system.variant, cfg.system.epsilon, cfg.system.eta);
    const std::vector<double> times = snapshot_times_from(doc, cfg.grid);
    const simulation_result result =
        simulate(init, cfg.dom, cfg.coeffs, var, cfg.grid, rng, g.threads, times);
    ensure_out_dir(g.out_dir);
    for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
        save_snapshot(result.snapshots[s], g.out_dir + "/" + snapshot_name("snapshot", s));
    }
    save_snapshot(result.final_state, g.out_dir + "/final_state.csv");
    std::cout << "simulate: " << cfg.system.n_agents << " agents, " << cfg.grid.n_steps
              << " steps; wrote " << result.snapshots.size() << " snapshots and final_state.csv to "
              << g.out_dir << "\n";
    return 0;
}

int run_limit(const global_options& g) {
    const toml_doc doc = load_config(g);
    const run_config cfg = validate_config(doc, g.seed_override);
    const int m_labels = static_cast<int>(doc.get_i64_or("experiment", "m_labels", 64));
    const int k_paths = static_cast<int>(doc.get_i64_or("experiment", "k_paths", 64));
    const step_triplet source = build_source_triplet(cfg, m_labels);
    const std::vector<double> times = snapshot_times_from(doc, cfg.grid);
    const limit_solution sol = solve_limit(source, k_paths, cfg.coeffs, cfg.dom, cfg.grid,
                                           counter_rng(cfg.seed), g.threads, times);
    ensure_out_dir(g.out_dir);
    for (std::size_t s = 0; s < sol.snapshots.size(); ++s) {
        save_snapshot(sol.snapshots[s], g.out_dir + "/" + snapshot_name("limit_snapshot", s));
    }
    save_snapshot(sol.final_state.ens, g.out_dir + "/limit_final.csv");
    std::cout << "limit: " << source.n_labels << " labels x " << k_paths << " paths, "
              << cfg.grid.n_steps << " steps; wrote " << sol.snapshots.size()
              << " snapshots and limit_final.csv to " << g.out_dir << "\n";
    return 0;
}

std::string base_name(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// Accepts either a triplet CSV ("n_labels,dim" header) or a simulation
// snapshot ("n_agents,dim,t" header, converted to its uniform-mass triplet).
step_triplet load_comparison_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("metric: cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    in.close();
    if (header.rfind("n_agents", 0) == 0) return to_triplet(load_snapshot(path));
    return step_triplet::load(path);
}

int run_metric(const global_options& g, const std::string& kind, const std::string& file_a,
               const std::string& file_b, int restarts) {
    const step_triplet a = load_comparison_file(file_a);
    const step_triplet b = load_comparison_file(file_b);
    domain dom{geometry::euclidean, a.dim};
    if (!g.config_path.empty()) {
        const run_config cfg = validate_config(toml_doc::parse_file(g.config_path), g.seed_override);
        if (cfg.dom.dim != a.dim)
            throw config_error("metric: [domain] dim " + std::to_string(cfg.dom.dim) +
                               " does not match triplet dimension " + std::to_string(a.dim));
        dom = cfg.dom;
    }
    if (a.dim != b.dim) throw config_error("metric: triplet dimensions differ");
    const std::uint64_t seed = g.seed_override >= 0 ? static_cast<std::uint64_t>(g.seed_override) : 0;
    const counter_rng rng(seed);

    double value = 0.0, state_part = 0.0, cut_part = 0.0;
    bool certified = false;
    if (kind == "w1") {
        const w1_result r = wasserstein1(a.states, a.masses, b.states, b.masses, dom);
        value = r.value;
        state_part = r.value;
        certified = r.certified;
    } else if (kind == "cut") {
        const step_kernel diff = kernel_difference(a.as_step_kernel(), b.as_step_kernel());
        if (diff.n <= 20) {
            value = cut_norm_exact(diff).value;
            certified = true;
        } else {
            value = cut_norm_heuristic(diff, restarts, rng).value;
        }
        cut_part = value;
    } else if (kind == "delta") {
        const bool exact = a.n_labels == b.n_labels && a.n_labels <= 6;
        const delta_result r = exact ? delta_exact_small(a, b, dom)
                                     : delta_heuristic(a, b, dom, rng, restarts);
        value = r.value;
        state_part = r.state_part;
        cut_part = r.cut_part;
        certified = r.certified;
    } else if (kind == "gamma") {
        const gamma_result r = gamma_heuristic(a, b, dom, rng, restarts);
        value = r.value;
        state_part = r.state_part;
        cut_part = r.op_part_left + r.op_part_right;
    } else {
        throw config_error("metric: unknown kind '" + kind + "' (expected w1, cut, delta, gamma)");
    }

    ensure_out_dir(g.out_dir);
    csv_writer report({"pair_id", "metric", "value", "certified", "state_part", "cut_part",
                       "restarts", "seed"});
    report.begin_row();
    report.push(base_name(file_a) + "_vs_" + base_name(file_b));
    report.push(kind);
    report.push(value);
    report.push(certified);
    report.push(state_part);
    report.push(cut_part);
    report.push(restarts);
    report.push(seed);
    report.save(g.out_dir + "/metric.csv");
    std::cout << kind << " = " << format_double(value) << (certified ? " (certified)" : "")
              << "; report written to " << g.out_dir << "/metric.csv\n";
    return 0;
}

int run_sample(const global_options& g, const std::string& source_path, int n_rows,
               const std::string& mixture) {
    const std::uint64_t seed = g.seed_override >= 0 ? static_cast<std::uint64_t>(g.seed_override) : 0;
    const counter_rng rng(seed);
    ensure_out_dir(g.out_dir);

    bool is_triplet = true;
    step_triplet source;
    try {
        source = step_triplet::load(source_path);
    } catch (const config_error&) {
        is_triplet = false;
    }

    std::vector<int> labels;
    if (is_triplet) {
        const mixture_spec mix = mixture == "stratified"
                                     ? mixture_spec::stratified(n_rows, source.n_labels)
                                     : mixture_spec::iid(n_rows, source.masses);
        const mixture_sample s = sample_mixture(source, mix, rng);
        labels = s.labels;
        save_snapshot(s.ensemble, g.out_dir + "/sampled_snapshot.csv");
        std::cout << "sample: drew " << n_rows << " agents from " << source.n_labels
                  << " labels; wrote sampled_snapshot.csv and labels.csv to " << g.out_dir << "\n";
    } else {
        const step_kernel kernel = step_kernel::load(source_path);
        const mixture_spec mix = mixture == "stratified"
                                     ? mixture_spec::stratified(n_rows, kernel.n)
                                     : mixture_spec::iid(n_rows, kernel.masses);
        const sampled_kernel s = sample_kernel(kernel, mix, rng);
        labels = s.labels;
        s.kernel.save(g.out_dir + "/sampled_kernel.csv");
        std::cout << "sample: drew " << n_rows << " labels from " << kernel.n
                  << "; wrote sampled_kernel.csv and labels.csv to " << g.out_dir << "\n";
    }
    csv_writer label_table({"row", "label", "seed"});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        label_table.begin_row();
        label_table.push(static_cast<std::int64_t>(i));
        label_table.push(labels[i]);
        label_table.push(seed);
    }
    label_table.save(g.out_dir + "/labels.csv");
    return 0;
}

int run_experiment_cmd(const global_options& g) {
    const toml_doc doc = load_config(g);
    const experiment_spec spec = parse_experiment(doc, g.seed_override, g.out_dir, g.threads);
    const experiment_bundle bundle = run_experiment(spec);
    emit_outputs(bundle, g.out_dir);
    std::cout << "experiment " << experiment_kind_name(spec.kind) << ": wrote "
              << bundle.data_files.size() << " data files, " << bundle.plot_specs.size()
              << " plot specs, and metadata.json to " << g.out_dir << "\n";
    return 0;
}

int run_fit(const global_options& g, const std::string& points_path) {
    const csv_table table = read_csv(points_path);
    int col_n = table.column("n");
    if (col_n < 0) col_n = table.column("N");
    // Error column: exact names first, then the first column whose name
    // mentions an error/deviation/mean statistic without being its stderr.
    int col_e = table.column("error");
    if (col_e < 0) col_e = table.column("mean_error");
    int col_s = table.column("stderr");
    if (col_s < 0) col_s = table.column("error_stderr");
    for (std::size_t c = 0; c < table.header.size() && (col_e < 0 || col_s < 0); ++c) {
        const std::string& name = table.header[c];
        const bool is_stderr = name.find("stderr") != std::string::npos;
        if (col_s < 0 && is_stderr) {
            col_s = static_cast<int>(c);
            continue;
        }
        const bool error_like = name.find("error") != std::string::npos ||
                                name.find("deviation") != std::string::npos ||
                                name.find("delta") != std::string::npos ||
                                name.rfind("mean", 0) == 0 || name.rfind("G_", 0) == 0;
        const bool excluded = is_stderr || name.find("control") != std::string::npos ||
                              name.find("bound") != std::string::npos;
        if (col_e < 0 && error_like && !excluded) col_e = static_cast<int>(c);
    }
    if (col_n < 0 || col_e < 0) {
        if (table.header.size() < 2)
            throw config_error("fit: '" + points_path +
                               "' needs columns (n, error[, stderr]) or at least two unnamed columns");
        col_n = 0;
        col_e = 1;
        if (table.header.size() >= 3 && col_s < 0) col_s = 2;
    }
    std::vector<rate_point> points;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        rate_point p;
        p.n = table.as_double(r, col_n);
        p.error = table.as_double(r, col_e);
        p.stderr_ = col_s >= 0 ? table.as_double(r, col_s) : 0.0;
        points.push_back(p);
    }
    const rate_fit fit = fit_rate(points);
    ensure_out_dir(g.out_dir);
    csv_writer report({"degenerate", "reason", "slope", "intercept", "r2", "slope_stderr",
                       "n_points"});
    report.begin_row();
    report.push(fit.degenerate);
    report.push(fit.reason);
    report.push(fit.slope);
    report.push(fit.intercept);
    report.push(fit.r2);
    report.push(fit.slope_stderr);
    report.push(static_cast<std::int64_t>(fit.points.size()));
    report.save(g.out_dir + "/rate_fit.csv");
    if (fit.degenerate) {
        std::cout << "fit: " << fit.reason << "; report written to " << g.out_dir
                  << "/rate_fit.csv\n";
    } else {
        std::cout << "fit: slope " << format_double(fit.slope) << ", intercept "
                  << format_double(fit.intercept) << ", r2 " << format_double(fit.r2)
                  << "; report written to " << g.out_dir << "/rate_fit.csv\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coweave: co-evolving state/weight systems, their discretized limit, and "
                 "graph-limit metrics"};
    app.require_subcommand(1);
    app.fallthrough();

    global_options g;
    app.add_option("--config", g.config_path, "TOML configuration file");
    app.add_option("--seed", g.seed_override, "seed override for [rng] seed")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--threads", g.threads, "worker thread count")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out_dir, "output directory (default '.')");

    CLI::App* sim = app.add_subcommand("simulate", "integrate the N-agent system");
    CLI::App* lim = app.add_subcommand("limit", "integrate the discretized limit system");

    CLI::App* met = app.add_subcommand("metric", "distance between two triplet files");
    std::string metric_kind = "delta", file_a, file_b;
    int restarts = 8;
    met->add_option("--kind", metric_kind, "w1 | cut | delta | gamma");
    met->add_option("--a", file_a, "first triplet CSV")->required();
    met->add_option("--b", file_b, "second triplet CSV")->required();
    met->add_option("--restarts", restarts, "heuristic restarts")->check(CLI::PositiveNumber);

    CLI::App* smp = app.add_subcommand("sample", "draw labels from a kernel or triplet file");
    std::string sample_source, sample_mixture_kind = "iid";
    int sample_n = 0;
    smp->add_option("--source", sample_source, "kernel or triplet CSV")->required();
    smp->add_option("--n", sample_n, "number of rows to draw")
        ->required()
        ->check(CLI::PositiveNumber);
    smp->add_option("--mixture", sample_mixture_kind, "iid | stratified");

    CLI::App* exp = app.add_subcommand("experiment", "run the [experiment] section of the config");

    CLI::App* fit = app.add_subcommand("fit", "rate fit on a CSV of (n, error[, stderr]) points");
    std::string fit_points_path;
    fit->add_option("--points", fit_points_path, "CSV of sweep points")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return run_simulate(g);
        if (lim->parsed()) return run_limit(g);
        if (met->parsed()) return run_metric(g, metric_kind, file_a, file_b, restarts);
        if (smp->parsed()) return run_sample(g, sample_source, sample_n, sample_mixture_kind);
        if (exp->parsed()) return run_experiment_cmd(g);
        if (fit->parsed()) return run_fit(g, fit_points_path);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const resource_error& e) {
        std::cerr << "resource guard: " << e.what() << "\n";
        return 3;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
