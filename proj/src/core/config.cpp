#include "coweave/core/config.hpp"

namespace coweave {

run_config validate_config(const toml_doc& doc, std::int64_t seed_override) {
  run_config cfg;
  cfg.hash = config_hash(doc);

  cfg.dom = domain::parse(doc.get_string_or("domain", "geometry", "euclidean"),
                          static_cast<int>(doc.get_i64_or("domain", "dim", 1)));

  const std::string preset = doc.get_string_or("coefficients", "preset", "zero");
  const double a = doc.get_f64_or("coefficients", "a", 1.0);
  cfg.coeffs = lookup_coefficients(preset, a);
  cfg.coeffs.nu = doc.get_f64_or("coefficients", "nu", 0.0);
  if (cfg.coeffs.nu < 0.0) throw config_error("config: [coefficients] nu must be >= 0");

  cfg.grid = time_grid::make(doc.get_f64_or("time", "t_end", 1.0), doc.get_f64_or("time", "dt", 1e-3));

  const std::int64_t seed =
      seed_override >= 0 ? seed_override : doc.get_i64_or("rng", "seed", 0);
  cfg.seed = static_cast<std::uint64_t>(seed);

  system_config& sys = cfg.system;
  sys.n_agents = static_cast<int>(doc.get_i64_or("system", "n_agents", 2));
  if (sys.n_agents < 2) throw config_error("config: [system] n_agents must be >= 2");
  if (sys.n_agents > 8192) {
    throw resource_error("config: [system] n_agents " + std::to_string(sys.n_agents) +
                         " exceeds the dense-weight cap 8192");
  }
  sys.variant = doc.get_string_or("system", "variant", "base");
  if (sys.variant != "base" && sys.variant != "decay_ou" && sys.variant != "weight_noise") {
    throw config_error("config: [system] variant must be base, decay_ou, or weight_noise");
  }
  sys.epsilon = doc.get_f64_or("system", "epsilon", 1.0);
  if (sys.variant == "decay_ou" && !(sys.epsilon > 0.0)) {
    throw config_error("config: [system] epsilon must be > 0 for decay_ou");
  }
  sys.eta = doc.get_f64_or("system", "eta", 0.0);
  if (sys.eta < 0.0) throw config_error("config: [system] eta must be >= 0");
  sys.source = doc.get_string_or("system", "source", "");
  sys.mixture = doc.get_string_or("system", "mixture", "iid");
  if (sys.mixture != "iid" && sys.mixture != "stratified") {
    throw config_error("config: [system] mixture must be iid or stratified");
  }
  sys.state_init = doc.get_string_or("system", "state_init", "grid");
  if (sys.state_init != "grid" && sys.state_init != "uniform") {
    throw config_error("config: [system] state_init must be grid or uniform");
  }
  sys.weight_init = doc.get_f64_or("system", "weight_init", 1.0);

  return cfg;
}

}  // namespace coweave
