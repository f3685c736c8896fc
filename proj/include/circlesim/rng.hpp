#pragma once

// Counter-based RNG: Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). A draw is a pure function of (seed, domain, path,
// step), so batches are reproducible under any scheduling and the SIMD
// kernels replay exactly the same streams lane by lane.

#include <array>
#include <cstdint>

namespace circlesim {

/// Stream domains. Distinct domains never share counters, so adding a new
/// consumer cannot perturb existing streams.
enum class RngDomain : std::uint32_t {
    path_increments = 0,  // one block per (path, step): the Gaussian increment
    bridge_crossing = 1,  // per (path, step) uniform for the bridge correction
    start_sampling = 2,   // per path: stationary initial condition
    bootstrap = 3,        // per (resample, draw)
    permutation = 4,      // per (shuffle, position)
    gillespie = 5,        // per (path, event) for the discrete-chain simulator
};

struct Philox4x32 {
    std::array<std::uint32_t, 4> ctr;
    std::array<std::uint32_t, 2> key;
};

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace detail

/// One 128-bit Philox4x32-10 block.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(ctr, key);
        key[0] += detail::kPhiloxW0;
        key[1] += detail::kPhiloxW1;
    }
    return ctr;
}

/// Counter layout used throughout: c = (lo(step), hi(step), lo(path), hi(path)),
/// key = (lo(seed) ^ domain_mix, hi(seed)).
inline std::array<std::uint32_t, 4> philox_block(std::uint64_t seed, RngDomain domain,
                                                 std::uint64_t path, std::uint64_t step) {
    const std::uint32_t dm = 0x9E3779B9u * (static_cast<std::uint32_t>(domain) + 1u);
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed) ^ dm,
        static_cast<std::uint32_t>(seed >> 32),
    };
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(step),
        static_cast<std::uint32_t>(step >> 32),
        static_cast<std::uint32_t>(path),
        static_cast<std::uint32_t>(path >> 32),
    };
    return philox4x32_10(ctr, key);
}

/// Map two 32-bit words to a double strictly inside (0, 1): the 53-bit word
/// k becomes k * 2^-53 + 2^-55, so the largest value rounds down to
/// 1 - 2^-53 and the smallest is 2^-55. SIMD lanes reproduce the same
/// primitive operations.
inline double uniform_open01(std::uint32_t x0, std::uint32_t x1) {
    const double hi = static_cast<double>(x0) * 0x1p-32;
    const double lo = static_cast<double>(x1 >> 11) * 0x1p-53;
    return (hi + lo) + 0x1p-55;
}

/// Two independent uniforms from one block.
inline void uniform_pair(const std::array<std::uint32_t, 4>& blk, double& u1, double& u2) {
    u1 = uniform_open01(blk[0], blk[1]);
    u2 = uniform_open01(blk[2], blk[3]);
}

/// Uniform in (0,1) for utility streams (bootstrap, permutations, ...).
inline double uniform_stream(std::uint64_t seed, RngDomain domain, std::uint64_t major,
                             std::uint64_t minor) {
    const auto blk = philox_block(seed, domain, major, minor);
    return uniform_open01(blk[0], blk[1]);
}

/// Uniform integer in [0, n) drawn from a utility stream.
inline std::uint64_t uniform_index(std::uint64_t seed, RngDomain domain, std::uint64_t major,
                                   std::uint64_t minor, std::uint64_t n) {
    const auto blk = philox_block(seed, domain, major, minor);
    const std::uint64_t r = (static_cast<std::uint64_t>(blk[0]) << 32) | blk[1];
    // 128-bit multiply-shift; bias < 2^-64, irrelevant at our sample sizes.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(r) * n) >> 64);
}

} // namespace circlesim
