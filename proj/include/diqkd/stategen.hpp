#pragma once

// Haar-random two-qubit states of rank 1..4. A rank-k state is the reduced
// matrix of a Haar-random pure state on C^k (x) C^2 (x) C^2 after tracing out
// the leading k-dimensional factor; k = 1 is the pure case.

#include <cstdint>
#include <vector>

#include "diqkd/linalg.hpp"
#include "diqkd/simd/kernels.hpp"

namespace diqkd::stategen {

using linalg::Complex;
using linalg::ComplexMatrix;

inline constexpr int kMinRank = 1;
inline constexpr int kMaxRank = 4;
/// Draws whose norm is below this are discarded and redrawn.
inline constexpr double kDegenerateNorm = 1e-12;
inline constexpr double kRankEigenvalueThreshold = 1e-8;

struct RandomStateSpec {
    int rank = 1;
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;
};

/// Counter-based stream of complex standard normals. The Philox key is the
/// seed; the counter holds (position, domain, stream_id lo, stream_id hi), so
/// any (seed, stream_id, domain) triple is an independent, replayable stream.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t domain = 0, std::uint32_t position = 0);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }
    [[nodiscard]] std::uint32_t domain() const noexcept { return domain_; }
    [[nodiscard]] std::uint32_t position() const noexcept { return position_; }

    /// Fills count values, advancing the position by count.
    void fill(double* re, double* im, std::size_t count, const simd::KernelTable& k);
    void fill(double* re, double* im, std::size_t count) { fill(re, im, count, simd::active_kernels()); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint32_t domain_;
    std::uint32_t position_;
};

/// Real and imaginary parts i.i.d. N(0, 1). Requires count >= 1.
std::vector<Complex> sample_complex_gaussian(GaussianStream& stream, std::size_t count);

struct TwoQubitState {
    ComplexMatrix rho;
    int declared_rank = 1;
};

TwoQubitState generate_pure(const RandomStateSpec& spec);
TwoQubitState generate_rank2(const RandomStateSpec& spec);
TwoQubitState generate_rank3(const RandomStateSpec& spec);
TwoQubitState generate_rank4(const RandomStateSpec& spec);
/// Dispatches on spec.rank.
TwoQubitState generate(const RandomStateSpec& spec);
TwoQubitState generate(const RandomStateSpec& spec, const simd::KernelTable& k);

/// Sampler core: normalized amplitudes of the rank-k purification reduced
/// straight into split planes. Same numbers as generate().
void generate_planes(const RandomStateSpec& spec, simd::DensityPlanes& rho, const simd::KernelTable& k);

/// The normalized 4k purification amplitudes (ancilla index major).
std::vector<Complex> purification(const RandomStateSpec& spec, const simd::KernelTable& k);

/// Reference route: projector on the full C^k (x) C^4 space followed by a
/// general partial trace over the ancilla.
TwoQubitState generate_by_partial_trace(const RandomStateSpec& spec);

ComplexMatrix to_matrix(const simd::DensityPlanes& planes);

}  // namespace diqkd::stategen
