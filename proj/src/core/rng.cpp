#include "coweave/core/rng.hpp"

#include <cmath>

namespace coweave {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    philox_round(c, k);
  }
  return c;
}

std::uint64_t counter_rng::bits(std::uint64_t entity, std::uint64_t step, rng_role role,
                                std::uint32_t slot) const {
  // counter = (entity lo, entity hi, step lo, step hi ^ role ^ slot-lane).
  // Step indices stay below 2^24 in practice, so folding role/slot into the
  // top word never collides with the step bits.
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(entity),
      static_cast<std::uint32_t>(entity >> 32),
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>((step >> 32) ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(role)) << 8) ^
                                 (static_cast<std::uint64_t>(slot) << 12)),
  };
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32),
  };
  const auto out = philox4x32(counter, key);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double counter_rng::uniform(std::uint64_t entity, std::uint64_t step, rng_role role,
                            std::uint32_t slot) const {
  // Map to (0, 1]: (x + 1) * 2^-64.
  const std::uint64_t x = bits(entity, step, role, slot);
  return (static_cast<double>(x) + 1.0) * 0x1.0p-64;
}

double counter_rng::normal(std::uint64_t entity, std::uint64_t step, rng_role role,
                           std::uint32_t slot) const {
  const double u1 = uniform(entity, step, role, 2 * slot);
  const double u2 = uniform(entity, step, role, 2 * slot + 1);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

std::uint64_t counter_rng::uniform_index(std::uint64_t entity, std::uint64_t step, rng_role role,
                                         std::uint32_t slot, std::uint64_t n) const {
  // 128-bit multiply-shift; bias < 2^-32 for n <= 2^32, irrelevant here.
  const std::uint64_t x = bits(entity, step, role, slot);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * n) >> 64);
}

std::uint64_t counter_rng::derive(std::uint64_t entity, std::uint64_t step, rng_role role) const {
  return bits(entity, step, role, 0xC0FFEEu);
}

}  // namespace coweave
