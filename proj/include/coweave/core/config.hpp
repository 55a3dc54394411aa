// Validated run configuration assembled from a TOML document with sections
// [domain], [coefficients], [time], [rng], [system], [experiment].
// Validation errors carry section/key context and map to CLI exit code 2.
#pragma once

#include <cstdint>
#include <string>

#include "coweave/core/coefficients.hpp"
#include "coweave/core/domain.hpp"
#include "coweave/core/time_grid.hpp"
#include "coweave/core/toml.hpp"

namespace coweave {

struct system_config {
  int n_agents = 2;
  std::string variant = "base";  // base | decay_ou | weight_noise
  double epsilon = 1.0;          // decay_ou relaxation time (> 0)
  double eta = 0.0;              // weight_noise strength (>= 0)
  std::string source;            // optional step-triplet CSV for initial data
  std::string mixture = "iid";   // iid | stratified (used with source)
  std::string state_init = "grid";  // grid | uniform (used without source)
  double weight_init = 1.0;      // constant initial weight (used without source)
};

struct run_config {
  domain dom;
  coefficient_set coeffs;
  time_grid grid;
  std::uint64_t seed = 0;
  system_config system;
  std::uint64_t hash = 0;  // config_hash of the source document
};

// Parse and validate the core sections. `seed_override`, when >= 0, replaces
// [rng] seed (CLI --seed flag).
run_config validate_config(const toml_doc& doc, std::int64_t seed_override = -1);

}  // namespace coweave
