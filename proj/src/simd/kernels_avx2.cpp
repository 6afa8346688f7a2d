// Compiled with -mavx2 (and deliberately without -mfma): results must match
// kernels_scalar.cpp bit for bit.

#include <immintrin.h>

#include "diqkd/simd/kernels.hpp"
#include "diqkd/simd/philox.hpp"
#include "diqkd/simd/scalar_math.hpp"

namespace diqkd::simd::detail {

namespace {

struct Words4 {
    __m256i w0, w1, w2, w3;  // word k of four consecutive blocks, one per 64-bit lane
};

inline __m256i broadcast_u32(std::uint32_t x) { return _mm256_set1_epi64x(static_cast<long long>(x)); }

inline Words4 philox_x4(PhiloxKey key, PhiloxCounter first, std::uint32_t offset) {
    const std::uint32_t base = first.words[0] + offset;
    Words4 c{
        _mm256_set_epi64x(static_cast<long long>(static_cast<std::uint32_t>(base + 3u)),
                          static_cast<long long>(static_cast<std::uint32_t>(base + 2u)),
                          static_cast<long long>(static_cast<std::uint32_t>(base + 1u)),
                          static_cast<long long>(base)),
        broadcast_u32(first.words[1]),
        broadcast_u32(first.words[2]),
        broadcast_u32(first.words[3]),
    };
    const __m256i m0 = broadcast_u32(kPhiloxM0);
    const __m256i m1 = broadcast_u32(kPhiloxM1);
    const __m256i low32 = _mm256_set1_epi64x(0xFFFFFFFFLL);
    std::uint32_t k0 = key.k0;
    std::uint32_t k1 = key.k1;
    for (int round = 0; round < kPhiloxRounds; ++round) {
        if (round > 0) {
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        const __m256i p0 = _mm256_mul_epu32(c.w0, m0);
        const __m256i p1 = _mm256_mul_epu32(c.w2, m1);
        const __m256i hi0 = _mm256_srli_epi64(p0, 32);
        const __m256i lo0 = _mm256_and_si256(p0, low32);
        const __m256i hi1 = _mm256_srli_epi64(p1, 32);
        const __m256i lo1 = _mm256_and_si256(p1, low32);
        c = Words4{
            _mm256_xor_si256(_mm256_xor_si256(hi1, c.w1), broadcast_u32(k0)),
            lo1,
            _mm256_xor_si256(_mm256_xor_si256(hi0, c.w3), broadcast_u32(k1)),
            lo0,
        };
    }
    return c;
}

inline __m256d set1(double x) { return _mm256_set1_pd(x); }

inline __m256d open_unit_uniform(__m256i hi, __m256i lo) {
    const __m256i mantissa = _mm256_or_si256(_mm256_slli_epi64(hi, 20), _mm256_srli_epi64(lo, 12));
    const __m256i bits = _mm256_or_si256(mantissa, _mm256_set1_epi64x(static_cast<long long>(math::kOneBits)));
    return _mm256_add_pd(_mm256_sub_pd(_mm256_castsi256_pd(bits), set1(1.0)), set1(math::kHalfUlpOfOne));
}

inline __m256d log_positive(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i biased = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7FF));
    const __m256d magic = set1(4503599627370496.0);  // 2^52
    __m256d dk = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_castpd_si256(magic))), magic);
    dk = _mm256_sub_pd(dk, set1(1023.0));
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), _mm256_set1_epi64x(static_cast<long long>(math::kOneBits))));
    const __m256d big = _mm256_cmp_pd(m, set1(math::kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
    dk = _mm256_add_pd(dk, _mm256_and_pd(big, set1(1.0)));

    const __m256d f = _mm256_sub_pd(m, set1(1.0));
    const __m256d s = _mm256_div_pd(f, _mm256_add_pd(set1(2.0), f));
    const __m256d z = _mm256_mul_pd(s, s);
    const __m256d w = _mm256_mul_pd(z, z);
    const __m256d t1 = _mm256_mul_pd(
        w, _mm256_add_pd(set1(math::kLg2),
                         _mm256_mul_pd(w, _mm256_add_pd(set1(math::kLg4), _mm256_mul_pd(w, set1(math::kLg6))))));
    const __m256d t2 = _mm256_mul_pd(
        z, _mm256_add_pd(
               set1(math::kLg1),
               _mm256_mul_pd(w, _mm256_add_pd(set1(math::kLg3),
                                              _mm256_mul_pd(w, _mm256_add_pd(set1(math::kLg5),
                                                                             _mm256_mul_pd(w, set1(math::kLg7))))))));
    const __m256d r = _mm256_add_pd(t2, t1);
    const __m256d hfsq = _mm256_mul_pd(_mm256_mul_pd(set1(0.5), f), f);
    const __m256d inner =
        _mm256_add_pd(_mm256_mul_pd(s, _mm256_add_pd(hfsq, r)), _mm256_mul_pd(dk, set1(math::kLn2Lo)));
    return _mm256_sub_pd(_mm256_mul_pd(dk, set1(math::kLn2Hi)), _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline __m256d negate(__m256d x) { return _mm256_xor_pd(x, set1(-0.0)); }

inline void sincos_turns(__m256d u, __m256d& c, __m256d& s) {
    const __m256d v = _mm256_mul_pd(set1(4.0), u);
    const __m256d q = _mm256_round_pd(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d x = _mm256_mul_pd(_mm256_sub_pd(v, q), set1(math::kPiOver2));
    const __m256d z = _mm256_mul_pd(x, x);

    const __m256d sr = _mm256_add_pd(
        set1(math::kS2),
        _mm256_mul_pd(
            z, _mm256_add_pd(set1(math::kS3),
                             _mm256_mul_pd(z, _mm256_add_pd(set1(math::kS4),
                                                            _mm256_mul_pd(z, _mm256_add_pd(set1(math::kS5),
                                                                                           _mm256_mul_pd(z, set1(math::kS6)))))))));
    const __m256d sn =
        _mm256_add_pd(x, _mm256_mul_pd(_mm256_mul_pd(z, x), _mm256_add_pd(set1(math::kS1), _mm256_mul_pd(z, sr))));

    const __m256d cpoly = _mm256_add_pd(
        set1(math::kC1),
        _mm256_mul_pd(
            z,
            _mm256_add_pd(
                set1(math::kC2),
                _mm256_mul_pd(
                    z, _mm256_add_pd(set1(math::kC3),
                                     _mm256_mul_pd(z, _mm256_add_pd(set1(math::kC4),
                                                                    _mm256_mul_pd(z, _mm256_add_pd(set1(math::kC5),
                                                                                                   _mm256_mul_pd(z, set1(math::kC6)))))))))));
    const __m256d cr = _mm256_mul_pd(z, cpoly);
    const __m256d hz = _mm256_mul_pd(set1(0.5), z);
    const __m256d w = _mm256_sub_pd(set1(1.0), hz);
    const __m256d cs =
        _mm256_add_pd(w, _mm256_add_pd(_mm256_sub_pd(_mm256_sub_pd(set1(1.0), w), hz), _mm256_mul_pd(z, cr)));

    const __m256d q1 = _mm256_cmp_pd(q, set1(1.0), _CMP_EQ_OQ);
    const __m256d q2 = _mm256_cmp_pd(q, set1(2.0), _CMP_EQ_OQ);
    const __m256d q3 = _mm256_cmp_pd(q, set1(3.0), _CMP_EQ_OQ);
    c = cs;
    s = sn;
    c = _mm256_blendv_pd(c, negate(sn), q1);
    s = _mm256_blendv_pd(s, cs, q1);
    c = _mm256_blendv_pd(c, negate(cs), q2);
    s = _mm256_blendv_pd(s, negate(sn), q2);
    c = _mm256_blendv_pd(c, sn, q3);
    s = _mm256_blendv_pd(s, negate(cs), q3);
}

inline void box_muller_x4(const Words4& w, double* re, double* im) {
    const __m256d u1 = open_unit_uniform(w.w0, w.w1);
    const __m256d u2 = open_unit_uniform(w.w2, w.w3);
    const __m256d radius = _mm256_sqrt_pd(_mm256_mul_pd(set1(-2.0), log_positive(u1)));
    __m256d c, s;
    sincos_turns(u2, c, s);
    _mm256_storeu_pd(re, _mm256_mul_pd(radius, c));
    _mm256_storeu_pd(im, _mm256_mul_pd(radius, s));
}

void philox_blocks(PhiloxKey key, PhiloxCounter first, std::size_t blocks, std::uint32_t* out) {
    std::size_t b = 0;
    for (; b + 4 <= blocks; b += 4) {
        const Words4 w = philox_x4(key, first, static_cast<std::uint32_t>(b));
        alignas(32) std::uint64_t lanes[4][4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes[0]), w.w0);
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes[1]), w.w1);
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes[2]), w.w2);
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes[3]), w.w3);
        for (std::size_t lane = 0; lane < 4; ++lane)
            for (std::size_t word = 0; word < 4; ++word)
                out[4 * (b + lane) + word] = static_cast<std::uint32_t>(lanes[word][lane]);
    }
    for (; b < blocks; ++b) {
        const auto words = philox4x32(advance(first, static_cast<std::uint32_t>(b)), key);
        for (std::size_t word = 0; word < 4; ++word) out[4 * b + word] = words[word];
    }
}

inline __m256i gather_word(const std::uint32_t* words, std::size_t word) {
    return _mm256_set_epi64x(static_cast<long long>(words[12 + word]), static_cast<long long>(words[8 + word]),
                             static_cast<long long>(words[4 + word]), static_cast<long long>(words[word]));
}

void box_muller(const std::uint32_t* words, std::size_t count, double* re, double* im) {
    std::size_t b = 0;
    for (; b + 4 <= count; b += 4) {
        const std::uint32_t* blk = words + 4 * b;
        box_muller_x4(Words4{gather_word(blk, 0), gather_word(blk, 1), gather_word(blk, 2), gather_word(blk, 3)},
                      re + b, im + b);
    }
    for (; b < count; ++b) math::box_muller_block(words + 4 * b, re[b], im[b]);
}

void complex_gaussians(PhiloxKey key, PhiloxCounter first, std::size_t count, double* re, double* im) {
    std::size_t b = 0;
    for (; b + 4 <= count; b += 4) box_muller_x4(philox_x4(key, first, static_cast<std::uint32_t>(b)), re + b, im + b);
    for (; b < count; ++b) {
        const auto words = philox4x32(advance(first, static_cast<std::uint32_t>(b)), key);
        math::box_muller_block(words.data(), re[b], im[b]);
    }
}

double squared_norm(const double* re, const double* im, std::size_t rows) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t a = 0; a < rows; ++a) {
        const __m256d r = _mm256_loadu_pd(re + 4 * a);
        const __m256d m = _mm256_loadu_pd(im + 4 * a);
        acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_mul_pd(r, r), _mm256_mul_pd(m, m)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void reduce_gram(const double* re, const double* im, std::size_t rows, double scale, DensityPlanes& rho) {
    __m256d acc_re[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
    __m256d acc_im[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
    const __m256d vscale = set1(scale);
    for (std::size_t a = 0; a < rows; ++a) {
        const __m256d r = _mm256_mul_pd(_mm256_loadu_pd(re + 4 * a), vscale);
        const __m256d m = _mm256_mul_pd(_mm256_loadu_pd(im + 4 * a), vscale);
        alignas(32) double sr[4];
        alignas(32) double si[4];
        _mm256_store_pd(sr, r);
        _mm256_store_pd(si, m);
        for (std::size_t i = 0; i < 4; ++i) {
            const __m256d br = set1(sr[i]);
            const __m256d bi = set1(si[i]);
            acc_re[i] = _mm256_add_pd(acc_re[i], _mm256_add_pd(_mm256_mul_pd(br, r), _mm256_mul_pd(bi, m)));
            acc_im[i] = _mm256_add_pd(acc_im[i], _mm256_sub_pd(_mm256_mul_pd(bi, r), _mm256_mul_pd(br, m)));
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        _mm256_store_pd(rho.re.data() + 4 * i, acc_re[i]);
        _mm256_store_pd(rho.im.data() + 4 * i, acc_im[i]);
    }
}

constexpr KernelTable kAvx2Table{
    Level::avx2, &philox_blocks, &box_muller, &complex_gaussians, &squared_norm, &reduce_gram,
};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2Table; }

}  // namespace diqkd::simd::detail
