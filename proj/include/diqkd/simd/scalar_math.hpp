#pragma once

// Portable elementary functions with a fixed evaluation order. log and
// sincos use the fdlibm minimax coefficients; the AVX2 kernels replay the
// same arithmetic lane by lane.

#include <bit>
#include <cmath>
#include <cstdint>

namespace diqkd::simd::math {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.41421356237309514547e+00;
inline constexpr double kPiOver2 = 1.57079632679489655800e+00;

inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;

inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;

inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr double kHalfUlpOfOne = 0x1p-53;

/// Uniform on the open interval (0, 1) from 52 bits of two 32-bit words.
inline double open_unit_uniform(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t mantissa = (static_cast<std::uint64_t>(hi) << 20) | (lo >> 12);
    return (std::bit_cast<double>(kOneBits | mantissa) - 1.0) + kHalfUlpOfOne;
}

/// Natural log for positive normal x.
inline double log_positive(double x) noexcept {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    double dk = static_cast<double>(static_cast<int>((bits >> 52) & 0x7FF) - 1023);
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) | kOneBits);
    if (m > kSqrt2) {
        m = m * 0.5;
        dk = dk + 1.0;
    }
    const double f = m - 1.0;
    const double s = f / (2.0 + f);
    const double z = s * s;
    const double w = z * z;
    const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
    const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
    const double r = t2 + t1;
    const double hfsq = 0.5 * f * f;
    return dk * kLn2Hi - ((hfsq - (s * (hfsq + r) + dk * kLn2Lo)) - f);
}

/// cos and sin of 2*pi*u for u in [0, 1].
inline void sincos_turns(double u, double& c, double& s) noexcept {
    const double v = 4.0 * u;
    const double q = std::nearbyint(v);
    const double x = (v - q) * kPiOver2;
    const double z = x * x;

    const double sr = kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)));
    const double sn = x + (z * x) * (kS1 + z * sr);

    const double cr = z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));
    const double hz = 0.5 * z;
    const double w = 1.0 - hz;
    const double cs = w + (((1.0 - w) - hz) + z * cr);

    switch (static_cast<int>(q) & 3) {
        case 0: c = cs; s = sn; break;
        case 1: c = -sn; s = cs; break;
        case 2: c = -cs; s = -sn; break;
        default: c = sn; s = -cs; break;
    }
}

/// One complex standard normal (each component N(0,1)) from a Philox block.
inline void box_muller_block(const std::uint32_t* w, double& re, double& im) noexcept {
    const double u1 = open_unit_uniform(w[0], w[1]);
    const double u2 = open_unit_uniform(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * log_positive(u1));
    double c = 0.0, s = 0.0;
    sincos_turns(u2, c, s);
    re = radius * c;
    im = radius * s;
}

}  // namespace diqkd::simd::math
