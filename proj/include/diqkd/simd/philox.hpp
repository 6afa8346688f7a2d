#pragma once

// Philox4x32-10 (Salmon et al., SC'11): ten rounds of the 4x32 multiply-xor
// bijection keyed by a Weyl sequence.

#include <array>
#include <cstdint>

#include "diqkd/simd/kernels.hpp"

namespace diqkd::simd {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
inline constexpr int kPhiloxRounds = 10;

inline std::array<std::uint32_t, 4> philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept {
    auto c = counter.words;
    std::uint32_t k0 = key.k0;
    std::uint32_t k1 = key.k1;
    for (int round = 0; round < kPhiloxRounds; ++round) {
        if (round > 0) {
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    }
    return c;
}

inline PhiloxCounter advance(PhiloxCounter counter, std::uint32_t blocks) noexcept {
    counter.words[0] += blocks;
    return counter;
}

}  // namespace diqkd::simd
