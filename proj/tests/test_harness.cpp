#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "coweave/core/config.hpp"
#include "coweave/core/csv.hpp"
#include "coweave/core/error.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/toml.hpp"
#include "coweave/harness/experiment.hpp"
#include "coweave/harness/fit.hpp"
#include "coweave/harness/toy.hpp"
#include "coweave/metrics/delta.hpp"
#include "coweave/metrics/gamma.hpp"

using namespace coweave;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case; removed on destruction.
struct scratch_dir {
    fs::path path;
    explicit scratch_dir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("coweave_harness_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~scratch_dir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << contents;
}

const std::string kToyConfig =
    "[domain]\n"
    "geometry = \"torus\"\n"
    "dim = 1\n"
    "[coefficients]\n"
    "preset = \"kuramoto-adaptive\"\n"
    "nu = 0.0\n"
    "[time]\n"
    "t_end = 0.2\n"
    "dt = 0.01\n"
    "[rng]\n"
    "seed = 11\n"
    "[experiment]\n"
    "kind = \"toy_model\"\n"
    "sweep = [6, 12]\n";

const output_file* find_file(const std::vector<output_file>& files, const std::string& name) {
    for (const output_file& f : files)
        if (f.name == name) return &f;
    return nullptr;
}

double summary_cell(const csv_table& t, std::size_t row, const std::string& col) {
    const int c = t.column(col);
    REQUIRE(c >= 0);
    return t.as_double(row, c);
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(COWEAVE_BINARY_DIR) + "/coweave " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

// ---------------------------------------------------------------------------
// Rate fitting

TEST_CASE("rate fit recovers an exact power law") {
    std::vector<rate_point> pts;
    for (double n : {16.0, 64.0, 256.0}) pts.push_back({n, 2.0 / std::sqrt(n), 0.0});
    const rate_fit fit = fit_rate(pts);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.slope == Catch::Approx(-0.5).margin(1e-12));
    CHECK(fit.intercept == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(fit.r2 == 1.0);
    CHECK(fit.slope_stderr == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(fit.points.size() == 3);
    // A zero standard error forces the uniform-weight fallback.
    for (const fit_point& p : fit.points) CHECK(p.weight == 1.0);
    CHECK(fit.points[0].log_n == Catch::Approx(std::log(16.0)).margin(1e-15));
    CHECK(fit.points[0].log_error == Catch::Approx(std::log(0.5)).margin(1e-15));
}

TEST_CASE("rate fit honors inverse-variance weights") {
    std::vector<rate_point> pts;
    for (double n : {16.0, 81.0, 256.0, 625.0}) {
        const double err = 3.0 * std::pow(n, -0.25);
        pts.push_back({n, err, 0.01 * err});
    }
    const rate_fit fit = fit_rate(pts);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.slope == Catch::Approx(-0.25).margin(1e-12));
    CHECK(fit.intercept == Catch::Approx(std::log(3.0)).margin(1e-12));
    CHECK(fit.r2 == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(fit.points.size() == 4);
    const double se0 = 0.01 * 3.0 * std::pow(16.0, -0.25);
    CHECK(fit.points[0].weight == Catch::Approx(1.0 / (se0 * se0)).epsilon(1e-12));
}

TEST_CASE("rate fit tolerates multiplicative noise") {
    const std::vector<double> jitter = {1.06, 0.94, 1.03, 0.96, 1.01};
    const std::vector<double> sizes = {8.0, 16.0, 32.0, 64.0, 128.0};
    std::vector<rate_point> pts;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double err = jitter[i] * 2.0 / std::sqrt(sizes[i]);
        pts.push_back({sizes[i], err, 0.05 * err});
    }
    const rate_fit fit = fit_rate(pts);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.slope > -0.65);
    CHECK(fit.slope < -0.35);
    CHECK(fit.r2 > 0.9);
    CHECK(fit.slope_stderr > 0.0);
}

TEST_CASE("rate fit reports degeneracies instead of fitting") {
    SECTION("all errors zero") {
        const rate_fit fit = fit_rate({{10.0, 0.0, 0.0}, {20.0, 0.0, 0.0}, {40.0, 0.0, 0.0}});
        CHECK(fit.degenerate);
        CHECK(fit.reason == "degenerate: zero error");
    }
    SECTION("some errors nonpositive") {
        const rate_fit fit = fit_rate({{10.0, 0.5, 0.0}, {20.0, 0.0, 0.0}, {40.0, 0.1, 0.0}});
        CHECK(fit.degenerate);
        CHECK(fit.reason == "degenerate: nonpositive error");
    }
    SECTION("coinciding sweep sizes") {
        const rate_fit fit = fit_rate({{50.0, 0.5, 0.0}, {50.0, 0.4, 0.0}, {50.0, 0.3, 0.0}});
        CHECK(fit.degenerate);
        CHECK(fit.reason == "degenerate: sweep sizes coincide");
        CHECK(fit.points.empty());
    }
    SECTION("too few points is a configuration error") {
        CHECK_THROWS_AS(fit_rate({{10.0, 0.5, 0.0}, {20.0, 0.3, 0.0}}), config_error);
    }
    SECTION("invalid inputs are configuration errors") {
        CHECK_THROWS_AS(fit_rate({{0.0, 0.5, 0.0}, {20.0, 0.3, 0.0}, {40.0, 0.2, 0.0}}),
                        config_error);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(fit_rate({{10.0, nan, 0.0}, {20.0, 0.3, 0.0}, {40.0, 0.2, 0.0}}),
                        config_error);
        CHECK_THROWS_AS(fit_rate({{10.0, 0.5, -1.0}, {20.0, 0.3, 0.0}, {40.0, 0.2, 0.0}}),
                        config_error);
    }
}

// ---------------------------------------------------------------------------
// Experiment specs

TEST_CASE("experiment kind names round trip") {
    const std::vector<std::string> names = {"propagation_rate", "empirical_convergence",
                                            "stability",        "sampling_rate",
                                            "toy_model",        "conjecture_sweep"};
    for (const std::string& name : names)
        CHECK(experiment_kind_name(parse_experiment_kind(name)) == name);
    CHECK_THROWS_AS(parse_experiment_kind("unknown"), config_error);
}

TEST_CASE("experiment spec validation rejects bad fields") {
    const auto base_spec = [] {
        experiment_spec s;
        s.sweep = {8, 16};
        s.base = validate_config(toml_doc::parse(""));
        return s;
    };
    {
        experiment_spec s = base_spec();
        s.sweep.clear();
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.sweep = {1, 8};
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.sweep = {8, 9000};
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.sweep = {16, 8};
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.replicas = 7;
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.m_labels = 256;
        s.k_paths = 64;  // product above the frame budget
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.threads = 0;
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.memory_cap_bytes = 0.0;
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.kind = experiment_kind::sampling_rate;
        s.sweep = {8, 32};  // exact cut norms cap the sweep at 24
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.kind = experiment_kind::toy_model;
        s.sweep = {8};  // multiples of 6 only
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.kind = experiment_kind::stability;
        s.perturbations.clear();
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.perturbations = {0.2, 0.1};
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.kind = experiment_kind::conjecture_sweep;
        s.etas = {0.1, 0.2};  // must start at zero
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.snapshot_times = {0.00037};  // off the time grid
        CHECK_THROWS_AS(s.validate(), config_error);
    }
    {
        experiment_spec s = base_spec();
        s.snapshot_times = {0.5, 0.25};
        CHECK_THROWS_AS(s.validate(), config_error);
    }
}

TEST_CASE("experiment parsing fills documented defaults") {
    SECTION("propagation defaults") {
        const experiment_spec s = parse_experiment(toml_doc::parse(""));
        CHECK(s.kind == experiment_kind::propagation_rate);
        CHECK(s.sweep == std::vector<int>{50, 100, 200, 400});
        CHECK(s.replicas == 64);
        CHECK(s.m_labels == 64);
        CHECK(s.k_paths == 64);
        CHECK(s.perturbations == std::vector<double>{0.05, 0.1, 0.2, 0.4});
        CHECK(s.etas == std::vector<double>{0.0, 0.05, 0.1, 0.2});
        CHECK(s.memory_cap_bytes == Catch::Approx(4e9));
        CHECK(s.out_dir == ".");
        CHECK(s.threads == 1);
    }
    SECTION("empirical defaults shrink the reference") {
        const experiment_spec s =
            parse_experiment(toml_doc::parse("[experiment]\nkind = \"empirical_convergence\"\n"));
        CHECK(s.sweep == std::vector<int>{16, 32, 64});
        CHECK(s.m_labels == 16);
        CHECK(s.k_paths == 8);
        CHECK(s.replicas == 8);
    }
    SECTION("sampling defaults use many replicas") {
        const experiment_spec s =
            parse_experiment(toml_doc::parse("[experiment]\nkind = \"sampling_rate\"\n"));
        CHECK(s.sweep == std::vector<int>{8, 12, 16, 20});
        CHECK(s.replicas == 200);
    }
    SECTION("explicit keys win over defaults") {
        const experiment_spec s = parse_experiment(
            toml_doc::parse("[experiment]\n"
                            "sweep = [10, 20, 30]\n"
                            "replicas = 16\n"
                            "m_labels = 8\n"
                            "k_paths = 4\n"
                            "memory_cap_gb = 2.5\n"),
            99, "out_here", 4);
        CHECK(s.sweep == std::vector<int>{10, 20, 30});
        CHECK(s.replicas == 16);
        CHECK(s.m_labels == 8);
        CHECK(s.k_paths == 4);
        CHECK(s.memory_cap_bytes == Catch::Approx(2.5e9));
        CHECK(s.base.seed == 99);
        CHECK(s.out_dir == "out_here");
        CHECK(s.threads == 4);
    }
}

// ---------------------------------------------------------------------------
// Toy pair

TEST_CASE("toy pair matches its documented layout") {
    CHECK_THROWS_AS(make_toy_pair(8), config_error);
    CHECK_THROWS_AS(make_toy_pair(0), config_error);
    CHECK_THROWS_AS(toy_periodic_coupling(9), config_error);

    const int n = 12;
    const toy_pair pair = make_toy_pair(n);
    REQUIRE(pair.bipartite.n_labels == n);
    REQUIRE(pair.cycle.n_labels == n);
    for (int i = 0; i < n; ++i) {
        const double expect = (i % 2 == 0) ? 0.7 : 2.3;
        CHECK(pair.bipartite.states[static_cast<std::size_t>(i)] == expect);
        CHECK(pair.cycle.states[static_cast<std::size_t>(i)] == expect);
        for (int j = 0; j < n; ++j) {
            const double b = (i < 6) != (j < 6) ? 2.0 : 0.0;
            const double c = ((i / 4 + 1) % 3 == j / 4) ? 3.0 : 0.0;
            CHECK(pair.bipartite.kernel[static_cast<std::size_t>(i) * n + j] == b);
            CHECK(pair.cycle.kernel[static_cast<std::size_t>(i) * n + j] == c);
        }
    }

    const coupling g = toy_periodic_coupling(n);
    CHECK_NOTHROW(g.validate(pair.bipartite.masses, pair.cycle.masses));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double expect = (i % 2 == j % 2) ? 1.0 / 72.0 : 0.0;
            CHECK(g.at(i, j) == Catch::Approx(expect).margin(1e-15));
        }

    const domain dom{geometry::torus, 1};
    // Matched per-class interaction totals: the periodic coupling certifies a
    // zero value of the operator-coupling objective despite distinct kernels.
    CHECK(gamma_objective(pair.bipartite, pair.cycle, dom, g) ==
          Catch::Approx(0.0).margin(1e-12));

    const toy_pair small = make_toy_pair(6);
    const double d6 = delta_exact_small(small.bipartite, small.cycle, dom).value;
    CHECK(d6 == Catch::Approx(2.0 / 9.0).margin(1e-12));
    CHECK(d6 > 0.1);
}

// ---------------------------------------------------------------------------
// Experiment bundles

TEST_CASE("toy experiment bundle is deterministic and self-consistent") {
    const experiment_spec spec = parse_experiment(toml_doc::parse(kToyConfig));
    const experiment_bundle a = run_experiment(spec);
    const experiment_bundle b = run_experiment(spec);

    REQUIRE(a.data_files.size() == b.data_files.size());
    for (std::size_t i = 0; i < a.data_files.size(); ++i) {
        CHECK(a.data_files[i].name == b.data_files[i].name);
        CHECK(a.data_files[i].contents == b.data_files[i].contents);
    }
    REQUIRE(a.plot_specs.size() == b.plot_specs.size());
    for (std::size_t i = 0; i < a.plot_specs.size(); ++i)
        CHECK(a.plot_specs[i].contents == b.plot_specs[i].contents);

    const output_file* summary = find_file(a.data_files, "toy_summary.csv");
    REQUIRE(summary != nullptr);
    const csv_table table = parse_csv(summary->contents);
    REQUIRE(table.rows.size() == 2);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        CHECK(summary_cell(table, r, "sup_state_diff") <= 1e-12);
        CHECK(summary_cell(table, r, "gamma_initial") <= 1e-12);
        CHECK(summary_cell(table, r, "gamma_final") <= 1e-10);
        CHECK(summary_cell(table, r, "delta_reduced_6") ==
              Catch::Approx(2.0 / 9.0).margin(1e-12));
    }
    CHECK(find_file(a.data_files, "toy_trace_N6.csv") != nullptr);
    CHECK(find_file(a.data_files, "toy_trace_N12.csv") != nullptr);
    CHECK(find_file(a.plot_specs, "plot_toy.json") != nullptr);

    // Metadata lists every emitted file and records the per-size seeds.
    CHECK(a.metadata_json.find("\"toy_summary.csv\"") != std::string::npos);
    CHECK(a.metadata_json.find("\"n=6\"") != std::string::npos);
    CHECK(a.metadata_json.find("\"n=12\"") != std::string::npos);
    CHECK(a.metadata_json.find("generated_at") != std::string::npos);
}

TEST_CASE("memory guard names the offending size") {
    experiment_spec spec = parse_experiment(toml_doc::parse(kToyConfig));
    spec.memory_cap_bytes = 10.0;
    CHECK_THROWS_AS(run_experiment(spec), resource_error);
    CHECK_THROWS_WITH(run_experiment(spec), Catch::Matchers::ContainsSubstring("N=6"));
}

TEST_CASE("outputs land on disk with exact bytes") {
    SECTION("data, plots, and metadata") {
        const scratch_dir dir("emit");
        experiment_bundle bundle;
        bundle.data_files.push_back({"x.csv", "a,b\n1,2\n"});
        bundle.plot_specs.push_back({"p.json", "{\"k\":1}\n"});
        bundle.metadata_json = "{}\n";
        emit_outputs(bundle, dir.path.string());
        CHECK(read_file(dir.file("x.csv")) == "a,b\n1,2\n");
        CHECK(read_file(dir.file("p.json")) == "{\"k\":1}\n");
        CHECK(read_file(dir.file("metadata.json")) == "{}\n");
    }
    SECTION("an empty bundle writes only metadata") {
        const scratch_dir dir("emit_empty");
        experiment_bundle bundle;
        bundle.metadata_json = "{}\n";
        const std::string sub = (dir.path / "nested" / "deeper").string();
        emit_outputs(bundle, sub);
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(sub))
            names.push_back(entry.path().filename().string());
        CHECK(names == std::vector<std::string>{"metadata.json"});
    }
}

// ---------------------------------------------------------------------------
// Initial data builders

TEST_CASE("initial data builders honor the config") {
    SECTION("grid states and constant kernel without a source") {
        const run_config cfg = validate_config(toml_doc::parse("[system]\nn_agents = 8\n"));
        const step_triplet t = build_source_triplet(cfg, 4);
        REQUIRE(t.n_labels == 4);
        for (int m = 0; m < 4; ++m)
            CHECK(t.states[static_cast<std::size_t>(m)] == Catch::Approx(m / 4.0).margin(1e-15));
        for (double w : t.kernel) CHECK(w == 1.0);

        const particle_ensemble ens = build_initial_ensemble(cfg, counter_rng(cfg.seed));
        REQUIRE(ens.n_agents == 8);
        for (int i = 0; i < 8; ++i)
            CHECK(ens.states[static_cast<std::size_t>(i)] ==
                  Catch::Approx(i / 8.0).margin(1e-15));
        for (double w : ens.weights) CHECK(w == 1.0);
        CHECK(ens.w0_sup == 1.0);
    }
    SECTION("uniform states are reproducible") {
        const run_config cfg = validate_config(
            toml_doc::parse("[system]\nn_agents = 6\nstate_init = \"uniform\"\n"));
        const particle_ensemble e1 = build_initial_ensemble(cfg, counter_rng(cfg.seed));
        const particle_ensemble e2 = build_initial_ensemble(cfg, counter_rng(cfg.seed));
        CHECK(e1.states == e2.states);
        bool on_grid = true;
        for (int i = 0; i < 6; ++i)
            if (e1.states[static_cast<std::size_t>(i)] != i / 6.0) on_grid = false;
        CHECK_FALSE(on_grid);
    }
    SECTION("a source file round trips and checks its dimension") {
        const scratch_dir dir("source");
        step_triplet src = step_triplet::uniform(3, 1);
        src.states = {0.1, 0.5, 0.9};
        for (double& w : src.kernel) w = 0.25;
        src.save(dir.file("src.csv"));

        run_config cfg = validate_config(toml_doc::parse("[system]\nn_agents = 6\n"));
        cfg.system.source = dir.file("src.csv");
        const step_triplet loaded = build_source_triplet(cfg, 64);
        CHECK(loaded.states == src.states);
        CHECK(loaded.kernel == src.kernel);

        cfg.dom = domain{geometry::euclidean, 2};
        CHECK_THROWS_AS(build_source_triplet(cfg, 64), config_error);
        CHECK_THROWS_AS(build_initial_ensemble(cfg, counter_rng(0)), config_error);
    }
}

// ---------------------------------------------------------------------------
// Command-line entry point

TEST_CASE("command line runs an experiment end to end") {
    const scratch_dir dir("cli");
    write_file(dir.file("toy.toml"), kToyConfig);

    REQUIRE(run_cli("experiment --config " + dir.file("toy.toml") + " --out " + dir.file("out1")) == 0);
    CHECK(fs::exists(dir.file("out1") + "/metadata.json"));
    CHECK(fs::exists(dir.file("out1") + "/toy_summary.csv"));

    REQUIRE(run_cli("experiment --config " + dir.file("toy.toml") + " --out " + dir.file("out2")) == 0);
    CHECK(read_file(dir.file("out1") + "/toy_summary.csv") ==
          read_file(dir.file("out2") + "/toy_summary.csv"));
    CHECK(read_file(dir.file("out1") + "/toy_trace_N12.csv") ==
          read_file(dir.file("out2") + "/toy_trace_N12.csv"));
}

TEST_CASE("command line distinguishes failure classes") {
    const scratch_dir dir("cli_fail");
    CHECK(run_cli("experiment --config " + dir.file("missing.toml") + " --out " + dir.file("o")) == 2);

    write_file(dir.file("bad.toml"), kToyConfig + "replicas = 3\n");
    CHECK(run_cli("experiment --config " + dir.file("bad.toml") + " --out " + dir.file("o")) == 2);

    write_file(dir.file("oom.toml"), kToyConfig + "memory_cap_gb = 1e-9\n");
    CHECK(run_cli("experiment --config " + dir.file("oom.toml") + " --out " + dir.file("o")) == 3);

    CHECK(run_cli("no-such-command") != 0);
}
