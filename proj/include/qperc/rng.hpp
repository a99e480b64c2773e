#pragma once
// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011). Every bond
// variable is a pure function of (master seed, realization, edge), so results
// do not depend on iteration order or thread count.

#include <array>
#include <cstdint>

namespace qperc {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// Uniform double in [0, 1) with 53 random bits for one bond variable.
constexpr double bond_uniform(std::uint64_t master_seed, std::uint64_t realization,
                              std::uint64_t edge) {
  const PhiloxBlock ctr{static_cast<std::uint32_t>(edge), static_cast<std::uint32_t>(edge >> 32),
                        static_cast<std::uint32_t>(realization),
                        static_cast<std::uint32_t>(realization >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32)};
  const PhiloxBlock out = philox4x32_10(ctr, key);
  const std::uint64_t bits = ((static_cast<std::uint64_t>(out[0]) << 32) | out[1]) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace qperc
