#pragma once

// Data-parallel inner loops of the sampler: Philox4x32-10 counter blocks,
// Box-Muller complex Gaussians, and the normalize-then-reduce step that turns
// an (ancilla x 4) amplitude array into a two-qubit density matrix.
//
// Every kernel exists as a scalar reference and, on x86-64, an AVX2 variant.
// Both evaluate the same operation sequence without fused multiply-add, so
// their outputs are bit-identical; equivalence tests assert exactly that.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace diqkd::simd {

enum class Level { scalar, avx2 };

std::string_view level_name(Level level) noexcept;

struct PhiloxKey {
    std::uint32_t k0 = 0;
    std::uint32_t k1 = 0;
};

/// 128-bit counter; word 0 is advanced per block, without carry.
struct PhiloxCounter {
    std::array<std::uint32_t, 4> words{};
};

inline constexpr std::size_t kMaxAmplitudes = 16;

/// 4x4 complex matrix as split real/imaginary row-major planes.
struct DensityPlanes {
    alignas(32) std::array<double, 16> re{};
    alignas(32) std::array<double, 16> im{};
};

struct KernelTable {
    Level level;
    /// out[4*b + w] = word w of Philox4x32-10(key, first + b).
    void (*philox_blocks)(PhiloxKey key, PhiloxCounter first, std::size_t blocks, std::uint32_t* out);
    /// Box-Muller over 4-word blocks: words (0,1) give the radius uniform,
    /// words (2,3) the angle uniform; one complex sample per block.
    void (*box_muller)(const std::uint32_t* words, std::size_t count, double* re, double* im);
    /// Fused philox_blocks + box_muller over `count` consecutive blocks.
    void (*complex_gaussians)(PhiloxKey key, PhiloxCounter first, std::size_t count, double* re, double* im);
    /// Sum of |c|^2 over `rows` rows of 4 amplitudes.
    double (*squared_norm)(const double* re, const double* im, std::size_t rows);
    /// rho_ij = sum_a (s c_ai) conj(s c_aj) over `rows` ancilla rows.
    void (*reduce_gram)(const double* re, const double* im, std::size_t rows, double scale, DensityPlanes& rho);
};

[[nodiscard]] bool level_supported(Level level) noexcept;
[[nodiscard]] Level best_available_level() noexcept;

/// Throws ContractViolation when the level is not supported on this CPU/build.
const KernelTable& kernels(Level level);

/// Process-wide selection used by the sampler; defaults to the best level.
const KernelTable& active_kernels() noexcept;
Level active_level() noexcept;
void set_active_level(Level level);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(DIQKD_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace diqkd::simd
