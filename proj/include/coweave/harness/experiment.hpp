#pragma once

// Experiment orchestration: each kind runs a sweep of system sizes with
// independent per-(size, replica) seeds, collects error statistics, fits
// rates where a rate is claimed, and packages everything as deterministic
// CSV bytes plus declarative plot descriptions and one metadata document.
// Re-running a spec with the same seed reproduces the data files byte for
// byte; wall-clock timestamps live only in the metadata file.

#include <cstdint>
#include <string>
#include <vector>

#include "coweave/core/config.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/core/toml.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/sim/ensemble.hpp"

namespace coweave {

enum class experiment_kind {
    propagation_rate,      // particle-vs-limit gap G(t) over a size sweep
    empirical_convergence, // state/weight distance of empirical data to the limit
    stability,             // distance growth from perturbed initial data
    sampling_rate,         // cut-norm deviation of sampled kernels
    toy_model,             // matched-interaction pair with distinct weights
    conjecture_sweep,      // weight-noise strength sweep (exploratory)
};

std::string experiment_kind_name(experiment_kind kind);
experiment_kind parse_experiment_kind(const std::string& name);

struct experiment_spec {
    experiment_kind kind = experiment_kind::propagation_rate;
    std::vector<int> sweep;  // strictly increasing sizes
    int replicas = 8;        // >= 8
    run_config base;
    int m_labels = 64;  // reference label count (size-sweep kinds)
    int k_paths = 64;   // reference paths per label
    std::vector<double> snapshot_times;   // default: quarter points of t_end
    std::vector<double> perturbations;    // stability grid
    std::vector<double> etas;             // conjecture_sweep noise strengths
    double memory_cap_bytes = 4e9;        // projected working-set guard
    std::string out_dir = ".";
    int threads = 1;

    void validate() const;  // throws config_error on bad fields
};

// Reads [experiment] plus the core sections. Keys: kind, sweep, replicas,
// m_labels, k_paths, snapshot_times, perturbations, etas, memory_cap_gb.
experiment_spec parse_experiment(const toml_doc& doc, std::int64_t seed_override = -1,
                                 const std::string& out_dir = ".", int threads = 1);

struct output_file {
    std::string name;      // relative to the output directory
    std::string contents;  // exact bytes
};

struct experiment_bundle {
    experiment_kind kind = experiment_kind::propagation_rate;
    std::vector<output_file> data_files;  // CSV payloads, deterministic
    std::vector<output_file> plot_specs;  // JSON plot descriptions, deterministic
    std::string metadata_json;            // seeds, config hash, versions, timestamp
};

// Executes the sweep. Throws resource_error naming the first size whose
// projected working set exceeds the memory cap.
experiment_bundle run_experiment(const experiment_spec& spec);

// Writes data files, plot specs, and metadata.json under out_dir (created
// if absent). An empty bundle produces only metadata.json.
void emit_outputs(const experiment_bundle& bundle, const std::string& out_dir);

// Initial data shared by the CLI and the experiment kinds: a source triplet
// (loaded from [system] source, else built with m_labels grid states and a
// constant kernel) and a particle ensemble (sampled from the source when one
// is configured, else built directly on n_agents).
step_triplet build_source_triplet(const run_config& cfg, int m_labels);
particle_ensemble build_initial_ensemble(const run_config& cfg, const counter_rng& rng);

}  // namespace coweave
