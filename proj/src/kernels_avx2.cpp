// AVX2 backend: four paths per vector. Compiled with -mavx2 only (no FMA:
// the whole project keeps plain mul/add sequences so lanes match the scalar
// reference bit for bit).

#include <cstdint>
#include <immintrin.h>

#include "circlesim/detail/kernel_core.hpp"
#include "circlesim/kernels.hpp"

namespace circlesim {
namespace {

struct Avx2Pack {
    static constexpr int W = 4;
    using D = __m256d;
    using U = __m256i;
    using M = __m256d;

    static D dset1(double v) { return _mm256_set1_pd(v); }
    static D dadd(D a, D b) { return _mm256_add_pd(a, b); }
    static D dsub(D a, D b) { return _mm256_sub_pd(a, b); }
    static D dmul(D a, D b) { return _mm256_mul_pd(a, b); }
    static D ddiv(D a, D b) { return _mm256_div_pd(a, b); }
    static D dsqrt(D a) { return _mm256_sqrt_pd(a); }
    static D dfloor(D a) { return _mm256_floor_pd(a); }
    static D dround(D a) {
        return _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    }
    static D dneg(D a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }
    static M dcmp_gt(D a, D b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
    static M dcmp_ge(D a, D b) { return _mm256_cmp_pd(a, b, _CMP_GE_OQ); }
    static M dcmp_eq(D a, D b) { return _mm256_cmp_pd(a, b, _CMP_EQ_OQ); }
    static D dblend(D a, D b, M m) { return _mm256_blendv_pd(a, b, m); }
    static void dstore(double* p, D v) { _mm256_storeu_pd(p, v); }
    static D dload(const double* p) { return _mm256_loadu_pd(p); }

    static U uset1(std::uint64_t v) {
        return _mm256_set1_epi64x(static_cast<long long>(v));
    }
    static U uload(const std::uint64_t* p) {
        return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p));
    }
    static U uadd64(U a, U b) { return _mm256_add_epi64(a, b); }
    static U uadd32(U a, U b) { return _mm256_add_epi32(a, b); }
    static U uxor(U a, U b) { return _mm256_xor_si256(a, b); }
    static U uand(U a, U b) { return _mm256_and_si256(a, b); }
    static U uor(U a, U b) { return _mm256_or_si256(a, b); }
    static U ushr(U a, int n) { return _mm256_srli_epi64(a, n); }
    static U umul32(U a, U b) { return _mm256_mul_epu32(a, b); }
    /// Exact conversion of 64-bit lanes holding values < 2^52.
    static D u_to_d(U v) {
        const U magic = _mm256_set1_epi64x(0x4330000000000000ll);
        return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic)),
                             _mm256_set1_pd(0x1p52));
    }
    static U d_bits(D v) { return _mm256_castpd_si256(v); }
    static D bits_d(U v) { return _mm256_castsi256_pd(v); }
};

} // namespace

namespace detail {

const KernelOps& avx2_kernel_ops() {
    static const KernelOps ops = {
        "avx2",
        &record_batch_core<Avx2Pack>,
        &record_until_batch_core<Avx2Pack>,
        &first_cycle_batch_core<Avx2Pack>,
        &counting_batch_core<Avx2Pack>,
    };
    return ops;
}

} // namespace detail
} // namespace circlesim
