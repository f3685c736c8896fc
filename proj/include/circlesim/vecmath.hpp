#pragma once

// Scalar reference kernels for the math used inside the hot simulation loops.
// The AVX2 kernels replay the same operation sequences lane-wise, so a path
// simulated by either backend is bit-identical. libm is deliberately not used
// here: its sin/cos/log differ between scalar and vectorized call sites.
//
// Accuracy targets (verified in tests/test_vecmath.cpp against libm):
//   log_mantissa_poly route: < 4 ulp over (0,1]
//   sincos_2pi_frac:         < 2e-16 absolute

#include <cmath>
#include <cstdint>
#include <cstring>

namespace circlesim::vm {

namespace detail {

// 2/(2k+1), k = 0..10: atanh series for log((1+r)/(1-r)), r^2 <= 0.02944.
inline constexpr double kLogCoeff[11] = {
    2.0,
    2.0 / 3.0,
    2.0 / 5.0,
    2.0 / 7.0,
    2.0 / 9.0,
    2.0 / 11.0,
    2.0 / 13.0,
    2.0 / 15.0,
    2.0 / 17.0,
    2.0 / 19.0,
    2.0 / 21.0,
};

// Taylor coefficients of sin(2*pi*r) = r * sum s_k (r^2)^k, |r| <= 1/8.
// s_k = (-1)^k (2*pi)^(2k+1) / (2k+1)!
inline constexpr double kSinCoeff[9] = {
    6.283185307179586,
    -41.34170224039976,
    81.60524927607506,
    -76.70585975306139,
    42.058693944897655,
    -15.09464257682299,
    3.819952584848282,
    -0.7181223017785006,
    0.10422916220813984,
};

// Taylor coefficients of cos(2*pi*r) = sum c_k (r^2)^k, |r| <= 1/8.
// c_k = (-1)^k (2*pi)^(2k) / (2k)!
inline constexpr double kCosCoeff[9] = {
    1.0,
    -19.739208802178716,
    64.9393940226683,
    -85.45681720669373,
    60.24464137187666,
    -26.4262567833744,
    7.903536371318469,
    -1.714390711088672,
    0.28200596845579123,
};

constexpr double kLn2 = 0.6931471805599453;
constexpr double kSqrt2 = 1.4142135623730951;

} // namespace detail

inline double bits_to_double(std::uint64_t b) {
    double d;
    std::memcpy(&d, &b, sizeof(d));
    return d;
}

inline std::uint64_t double_to_bits(double d) {
    std::uint64_t b;
    std::memcpy(&b, &d, sizeof(b));
    return b;
}

/// Natural log for normal positive doubles (no subnormals, infs, NaNs —
/// callers feed uniforms in (0,1) or values of order one).
inline double log_pos(double x) {
    const std::uint64_t bits = double_to_bits(x);
    double e = static_cast<double>(static_cast<std::int64_t>((bits >> 52) & 0x7FF) - 1023);
    double m = bits_to_double((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
    if (m > detail::kSqrt2) {
        m *= 0.5;
        e += 1.0;
    }
    const double r = (m - 1.0) / (m + 1.0);
    const double s = r * r;
    double p = detail::kLogCoeff[10];
    for (int k = 9; k >= 0; --k) p = p * s + detail::kLogCoeff[k];
    return e * detail::kLn2 + r * p;
}

/// Fractional part in [0, 1). May return a value that rounds to 1.0 for
/// tiny negative inputs; sincos_2pi_frac handles that continuation.
inline double frac(double x) {
    return x - std::floor(x);
}

/// sin(2*pi*u) and cos(2*pi*u) for u in [0, 1].
/// Quadrant reduction is exact: r = u - k/4 with k = nearbyint(4u).
inline void sincos_2pi_frac(double u, double& s_out, double& c_out) {
    double k = std::nearbyint(4.0 * u);  // ties to even, matches _mm256_round_pd
    const double r = u - k * 0.25;       // exact, |r| <= 1/8
    if (k >= 4.0) k = 0.0;               // u == 1 wraps to 0
    const double z = r * r;
    double ps = detail::kSinCoeff[8];
    for (int i = 7; i >= 0; --i) ps = ps * z + detail::kSinCoeff[i];
    double pc = detail::kCosCoeff[8];
    for (int i = 7; i >= 0; --i) pc = pc * z + detail::kCosCoeff[i];
    const double s = r * ps;
    const double c = pc;
    // quadrant k: (s, c) <- (s, c), (c, -s), (-s, -c), (-c, s)
    if (k == 0.0) {
        s_out = s;
        c_out = c;
    } else if (k == 1.0) {
        s_out = c;
        c_out = -s;
    } else if (k == 2.0) {
        s_out = -s;
        c_out = -c;
    } else {
        s_out = -c;
        c_out = s;
    }
}

/// Standard normal via Box-Muller (cosine half): z = sqrt(-2 log u1) cos(2 pi u2).
inline double normal_from_uniforms(double u1, double u2) {
    const double radius = std::sqrt(-2.0 * log_pos(u1));
    double s, c;
    sincos_2pi_frac(u2, s, c);
    return radius * c;
}

} // namespace circlesim::vm
