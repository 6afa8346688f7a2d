#include "diqkd/simd/kernels.hpp"
#include "diqkd/simd/philox.hpp"
#include "diqkd/simd/scalar_math.hpp"

namespace diqkd::simd::detail {

namespace {

void philox_blocks(PhiloxKey key, PhiloxCounter first, std::size_t blocks, std::uint32_t* out) {
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto words = philox4x32(advance(first, static_cast<std::uint32_t>(b)), key);
        for (int w = 0; w < 4; ++w) out[4 * b + static_cast<std::size_t>(w)] = words[static_cast<std::size_t>(w)];
    }
}

void box_muller(const std::uint32_t* words, std::size_t count, double* re, double* im) {
    for (std::size_t b = 0; b < count; ++b) math::box_muller_block(words + 4 * b, re[b], im[b]);
}

void complex_gaussians(PhiloxKey key, PhiloxCounter first, std::size_t count, double* re, double* im) {
    for (std::size_t b = 0; b < count; ++b) {
        const auto words = philox4x32(advance(first, static_cast<std::uint32_t>(b)), key);
        math::box_muller_block(words.data(), re[b], im[b]);
    }
}

double squared_norm(const double* re, const double* im, std::size_t rows) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t i = 0; i < 4; ++i) {
            const double r = re[4 * a + i];
            const double m = im[4 * a + i];
            acc[i] = acc[i] + (r * r + m * m);
        }
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void reduce_gram(const double* re, const double* im, std::size_t rows, double scale, DensityPlanes& rho) {
    rho.re.fill(0.0);
    rho.im.fill(0.0);
    for (std::size_t a = 0; a < rows; ++a) {
        double sr[4];
        double si[4];
        for (std::size_t j = 0; j < 4; ++j) {
            sr[j] = re[4 * a + j] * scale;
            si[j] = im[4 * a + j] * scale;
        }
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                rho.re[4 * i + j] = rho.re[4 * i + j] + (sr[i] * sr[j] + si[i] * si[j]);
                rho.im[4 * i + j] = rho.im[4 * i + j] + (si[i] * sr[j] - sr[i] * si[j]);
            }
        }
    }
}

constexpr KernelTable kScalarTable{
    Level::scalar, &philox_blocks, &box_muller, &complex_gaussians, &squared_norm, &reduce_gram,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalarTable; }

}  // namespace diqkd::simd::detail
