// Counter-based random number generation (Philox4x32-10).
//
// Every draw is a pure function of (seed, entity id, step index, role, slot),
// so results are independent of thread count, evaluation order, and how many
// draws other entities consume. This is what makes simulations reproducible
// under --threads and lets a shadow process replay another entity's noise.
#pragma once

#include <array>
#include <cstdint>

namespace coweave {

// Role tags keep independent noise purposes from colliding on the same
// (entity, step) key.
enum class rng_role : std::uint32_t {
  state = 1,         // Brownian increments for state dynamics
  weight = 2,        // Brownian increments for weight noise (one per pair)
  init = 3,          // randomized initial data
  label = 4,         // mixture label sampling
  witness = 5,       // cut-norm heuristic restarts
  coupling = 6,      // metric heuristic restarts
  replicate = 7,     // per-replica experiment derivations
  generic = 8,
};

// Raw Philox4x32-10 block function: 128-bit counter, 64-bit key -> 128 bits.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// Stateless stream view over a single 64-bit seed.
class counter_rng {
public:
  explicit counter_rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // 64 uniform bits for (entity, step, role, slot).
  std::uint64_t bits(std::uint64_t entity, std::uint64_t step, rng_role role,
                     std::uint32_t slot) const;

  // Uniform double in (0, 1] (never 0, safe for log()).
  double uniform(std::uint64_t entity, std::uint64_t step, rng_role role,
                 std::uint32_t slot) const;

  // Standard normal via Box-Muller; consumes slots (2*slot, 2*slot+1).
  double normal(std::uint64_t entity, std::uint64_t step, rng_role role,
                std::uint32_t slot) const;

  // Uniform integer in [0, n) by scaled rejection-free mapping (n <= 2^32).
  std::uint64_t uniform_index(std::uint64_t entity, std::uint64_t step, rng_role role,
                              std::uint32_t slot, std::uint64_t n) const;

  // Derive a child seed for an independent sub-experiment (e.g. one
  // (N, replica) cell). Mixes via an extra Philox evaluation.
  std::uint64_t derive(std::uint64_t entity, std::uint64_t step, rng_role role) const;

private:
  std::uint64_t seed_;
};

}  // namespace coweave
