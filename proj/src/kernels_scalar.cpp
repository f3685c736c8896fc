#include <cmath>
#include <cstdint>

#include "circlesim/detail/kernel_core.hpp"
#include "circlesim/kernels.hpp"

namespace circlesim {
namespace {

/// Reference lane pack: one path per "vector". The AVX2 pack mirrors every
/// one of these operations per lane, which is what makes the backends
/// bit-identical.
struct ScalarPack {
    static constexpr int W = 1;
    using D = double;
    using U = std::uint64_t;
    using M = bool;

    static D dset1(double v) { return v; }
    static D dadd(D a, D b) { return a + b; }
    static D dsub(D a, D b) { return a - b; }
    static D dmul(D a, D b) { return a * b; }
    static D ddiv(D a, D b) { return a / b; }
    static D dsqrt(D a) { return std::sqrt(a); }
    static D dfloor(D a) { return std::floor(a); }
    static D dround(D a) { return std::nearbyint(a); }
    static D dneg(D a) { return -a; }
    static M dcmp_gt(D a, D b) { return a > b; }
    static M dcmp_ge(D a, D b) { return a >= b; }
    static M dcmp_eq(D a, D b) { return a == b; }
    static D dblend(D a, D b, M m) { return m ? b : a; }
    static void dstore(double* p, D v) { *p = v; }
    static D dload(const double* p) { return *p; }

    static U uset1(std::uint64_t v) { return v; }
    static U uload(const std::uint64_t* p) { return *p; }
    static U uadd64(U a, U b) { return a + b; }
    static U uadd32(U a, U b) { return (a + b) & 0xFFFFFFFFull; }
    static U uxor(U a, U b) { return a ^ b; }
    static U uand(U a, U b) { return a & b; }
    static U uor(U a, U b) { return a | b; }
    static U ushr(U a, int n) { return a >> n; }
    static U umul32(U a, U b) { return (a & 0xFFFFFFFFull) * (b & 0xFFFFFFFFull); }
    static D u_to_d(U v) { return static_cast<double>(v); }
    static U d_bits(D v) { return vm::double_to_bits(v); }
    static D bits_d(U v) { return vm::bits_to_double(v); }
};

} // namespace

namespace detail {

const KernelOps& scalar_kernel_ops() {
    static const KernelOps ops = {
        "scalar",
        &record_batch_core<ScalarPack>,
        &record_until_batch_core<ScalarPack>,
        &first_cycle_batch_core<ScalarPack>,
        &counting_batch_core<ScalarPack>,
    };
    return ops;
}

} // namespace detail
} // namespace circlesim
