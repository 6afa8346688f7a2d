#include "diqkd/stategen.hpp"

#include <array>
#include <cmath>
#include <string>

#include "diqkd/errors.hpp"

namespace diqkd::stategen {

namespace {

void require_rank(int rank) {
    require(rank >= kMinRank && rank <= kMaxRank, "rank must be in {1,2,3,4}, got " + std::to_string(rank));
}

struct Amplitudes {
    std::array<double, simd::kMaxAmplitudes> re{};
    std::array<double, simd::kMaxAmplitudes> im{};
    double scale = 1.0;
};

// Unnormalized amplitudes plus the normalizing factor.
Amplitudes draw(const RandomStateSpec& spec, const simd::KernelTable& k) {
    require_rank(spec.rank);
    const auto rows = static_cast<std::size_t>(spec.rank);
    GaussianStream stream(spec.seed, spec.sample_index, static_cast<std::uint32_t>(spec.rank));
    Amplitudes amp;
    for (;;) {
        stream.fill(amp.re.data(), amp.im.data(), 4 * rows, k);
        const double norm2 = k.squared_norm(amp.re.data(), amp.im.data(), rows);
        if (norm2 >= kDegenerateNorm * kDegenerateNorm) {
            amp.scale = 1.0 / std::sqrt(norm2);
            return amp;
        }
    }
}

TwoQubitState generate_checked(const RandomStateSpec& spec, int expected_rank) {
    require(spec.rank == expected_rank,
            "generator for rank " + std::to_string(expected_rank) + " called with rank " + std::to_string(spec.rank));
    return generate(spec);
}

}  // namespace

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t domain,
                               std::uint32_t position)
    : seed_(seed), stream_id_(stream_id), domain_(domain), position_(position) {}

void GaussianStream::fill(double* re, double* im, std::size_t count, const simd::KernelTable& k) {
    const simd::PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const simd::PhiloxCounter counter{
        {position_, domain_, static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)}};
    k.complex_gaussians(key, counter, count, re, im);
    position_ += static_cast<std::uint32_t>(count);
}

std::vector<Complex> sample_complex_gaussian(GaussianStream& stream, std::size_t count) {
    require(count >= 1, "sample_complex_gaussian: count must be >= 1");
    std::vector<double> re(count);
    std::vector<double> im(count);
    stream.fill(re.data(), im.data(), count);
    std::vector<Complex> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = Complex(re[i], im[i]);
    return out;
}

void generate_planes(const RandomStateSpec& spec, simd::DensityPlanes& rho, const simd::KernelTable& k) {
    const Amplitudes amp = draw(spec, k);
    k.reduce_gram(amp.re.data(), amp.im.data(), static_cast<std::size_t>(spec.rank), amp.scale, rho);
}

std::vector<Complex> purification(const RandomStateSpec& spec, const simd::KernelTable& k) {
    const Amplitudes amp = draw(spec, k);
    std::vector<Complex> psi(static_cast<std::size_t>(4 * spec.rank));
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = Complex(amp.re[i] * amp.scale, amp.im[i] * amp.scale);
    return psi;
}

ComplexMatrix to_matrix(const simd::DensityPlanes& planes) {
    ComplexMatrix m(4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const auto i = static_cast<std::size_t>(4 * r + c);
            m(r, c) = Complex(planes.re[i], planes.im[i]);
        }
    return m;
}

TwoQubitState generate(const RandomStateSpec& spec, const simd::KernelTable& k) {
    simd::DensityPlanes planes;
    generate_planes(spec, planes, k);
    return TwoQubitState{to_matrix(planes), spec.rank};
}

TwoQubitState generate(const RandomStateSpec& spec) { return generate(spec, simd::active_kernels()); }

TwoQubitState generate_pure(const RandomStateSpec& spec) { return generate_checked(spec, 1); }
TwoQubitState generate_rank2(const RandomStateSpec& spec) { return generate_checked(spec, 2); }
TwoQubitState generate_rank3(const RandomStateSpec& spec) { return generate_checked(spec, 3); }
TwoQubitState generate_rank4(const RandomStateSpec& spec) { return generate_checked(spec, 4); }

TwoQubitState generate_by_partial_trace(const RandomStateSpec& spec) {
    const auto psi = purification(spec, simd::kernels(simd::Level::scalar));
    const ComplexMatrix full = ComplexMatrix::projector(psi);
    switch (spec.rank) {
        case 1: return TwoQubitState{full, 1};
        case 2: {
            const int dims[] = {2, 2, 2};
            const int keep[] = {1, 2};
            return TwoQubitState{linalg::partial_trace(full, dims, keep), 2};
        }
        case 3: {
            const int dims[] = {3, 2, 2};
            const int keep[] = {1, 2};
            return TwoQubitState{linalg::partial_trace(full, dims, keep), 3};
        }
        default: {
            const int dims[] = {2, 2, 2, 2};
            const int keep[] = {2, 3};
            return TwoQubitState{linalg::partial_trace(full, dims, keep), 4};
        }
    }
}

}  // namespace diqkd::stategen
