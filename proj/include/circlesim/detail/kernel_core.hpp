#pragma once

// Backend-independent stepping core. A Pack supplies W-lane double and
// 64-bit-integer vectors plus the IEEE primitive operations; every formula
// here is written as an explicit operation sequence so that any two packs
// produce bit-identical lanes. No libm inside the per-step hot path (the
// bridge correction, off by default, goes through a shared scalar helper so
// both backends execute the identical code for the identical lanes).

#include <array>
#include <cmath>
#include <cstdint>

#include "circlesim/kernels.hpp"
#include "circlesim/rng.hpp"
#include "circlesim/vecmath.hpp"

namespace circlesim::detail {

// ---------------------------------------------------------------------------
// Per-lane crossing bookkeeping (plain double math shared by all packs).

struct CrossEvent {
    double lambda;  // position along the step, in [0, 1]
    int sign;
};

/// Scan a linear segment [xs, xe] for level crossings relative to `ref`
/// (levels ref +- 1). Each crossing shifts ref by +-1; a large step can cross
/// several levels. Returns the number of events (capped at max_ev).
inline int scan_crossings(double xs, double xe, double& ref, CrossEvent* ev, int max_ev) {
    int n = 0;
    while (n < max_ev) {
        const double up = ref + 1.0;
        const double lo = ref - 1.0;
        if (xe >= up && xs < up) {
            ev[n].lambda = (up - xs) / (xe - xs);
            ev[n].sign = +1;
            ref = up;
        } else if (xe <= lo && xs > lo) {
            ev[n].lambda = (lo - xs) / (xe - xs);
            ev[n].sign = -1;
            ref = lo;
        } else {
            break;
        }
        ++n;
    }
    return n;
}

inline double bridge_probability(double d1, double d2, double sigma0, double h) {
    const double denom = sigma0 * sigma0 * h;
    if (denom <= 0.0) return 0.0;
    const double expo = -2.0 * d1 * d2 / denom;
    return expo < -745.0 ? 0.0 : std::exp(expo);
}

/// Opt-in Brownian-bridge correction for a step whose segment did not reach
/// a level. A touch can cascade into a crossing of the shifted far level
/// within the same step. Returns the number of events appended.
inline int bridge_events(double xs, double xe, double& ref, double sigma0, double h,
                         std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                         CrossEvent* ev, int max_ev) {
    const double up = ref + 1.0;
    const double lo = ref - 1.0;
    const double guard = 6.0 * sigma0 * std::sqrt(h);
    double pu = 0.0, pl = 0.0;
    if (up - xs < guard || up - xe < guard) pu = bridge_probability(up - xs, up - xe, sigma0, h);
    if (xs - lo < guard || xe - lo < guard) pl = bridge_probability(xs - lo, xe - lo, sigma0, h);
    if (pu <= 0.0 && pl <= 0.0) return 0;
    const double u = uniform_stream(seed, RngDomain::bridge_crossing, path, step);
    int sign;
    double lambda, touched;
    if (u < pu) {
        sign = +1;
        lambda = (up - xs) / ((up - xs) + (up - xe));
        touched = up;
    } else if (u < pu + pl) {
        sign = -1;
        lambda = (xs - lo) / ((xs - lo) + (xe - lo));
        touched = lo;
    } else {
        return 0;
    }
    int n = 0;
    ev[n].lambda = lambda;
    ev[n].sign = sign;
    ref = ref + static_cast<double>(sign);
    ++n;
    CrossEvent tail[2];
    const int extra = scan_crossings(touched, xe, ref, tail, std::min(2, max_ev - n));
    for (int i = 0; i < extra && n < max_ev; ++i) {
        ev[n].lambda = lambda + tail[i].lambda * (1.0 - lambda);
        ev[n].sign = tail[i].sign;
        ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Pack-generic math mirroring circlesim::vm (vecmath.hpp).

template <class P>
struct Math {
    using D = typename P::D;
    using U = typename P::U;
    using M = typename P::M;

    static inline void philox10(U& c0, U& c1, U& c2, U& c3, std::uint64_t seed,
                                RngDomain domain) {
        const std::uint32_t dm = 0x9E3779B9u * (static_cast<std::uint32_t>(domain) + 1u);
        U k0 = P::uset1(static_cast<std::uint32_t>(seed) ^ dm);
        U k1 = P::uset1(static_cast<std::uint32_t>(seed >> 32));
        const U m0 = P::uset1(0xD2511F53u);
        const U m1 = P::uset1(0xCD9E8D57u);
        const U w0 = P::uset1(0x9E3779B9u);
        const U w1 = P::uset1(0xBB67AE85u);
        const U mask32 = P::uset1(0xFFFFFFFFu);
        for (int round = 0; round < 10; ++round) {
            const U p0 = P::umul32(c0, m0);
            const U p1 = P::umul32(c2, m1);
            const U hi0 = P::ushr(p0, 32);
            const U lo0 = P::uand(p0, mask32);
            const U hi1 = P::ushr(p1, 32);
            const U lo1 = P::uand(p1, mask32);
            c0 = P::uxor(P::uxor(hi1, c1), k0);
            c1 = lo1;
            c2 = P::uxor(P::uxor(hi0, c3), k1);
            c3 = lo0;
            k0 = P::uadd32(k0, w0);
            k1 = P::uadd32(k1, w1);
        }
    }

    /// (x0:x1 >> 11) * 2^-53 + 2^-55, as in rng.hpp uniform_open01.
    static inline D uniform01(U x0, U x1) {
        const D hi = P::dmul(P::u_to_d(x0), P::dset1(0x1p-32));
        const D lo = P::dmul(P::u_to_d(P::ushr(x1, 11)), P::dset1(0x1p-53));
        return P::dadd(P::dadd(hi, lo), P::dset1(0x1p-55));
    }

    static inline D log_pos(D x) {
        const U bits = P::d_bits(x);
        const U ebits = P::uand(P::ushr(bits, 52), P::uset1(0x7FFull));
        D e = P::dsub(P::u_to_d(ebits), P::dset1(1023.0));
        D m = P::bits_d(P::uor(P::uand(bits, P::uset1(0x000FFFFFFFFFFFFFull)),
                               P::uset1(0x3FF0000000000000ull)));
        const M big = P::dcmp_gt(m, P::dset1(vm::detail::kSqrt2));
        m = P::dblend(m, P::dmul(m, P::dset1(0.5)), big);
        e = P::dblend(e, P::dadd(e, P::dset1(1.0)), big);
        const D r = P::ddiv(P::dsub(m, P::dset1(1.0)), P::dadd(m, P::dset1(1.0)));
        const D s = P::dmul(r, r);
        D p = P::dset1(vm::detail::kLogCoeff[10]);
        for (int k = 9; k >= 0; --k)
            p = P::dadd(P::dmul(p, s), P::dset1(vm::detail::kLogCoeff[k]));
        return P::dadd(P::dmul(e, P::dset1(vm::detail::kLn2)), P::dmul(r, p));
    }

    static inline void sincos_2pi(D u, D& s_out, D& c_out) {
        D k = P::dround(P::dmul(P::dset1(4.0), u));
        const D r = P::dsub(u, P::dmul(k, P::dset1(0.25)));
        k = P::dblend(k, P::dset1(0.0), P::dcmp_ge(k, P::dset1(4.0)));
        const D z = P::dmul(r, r);
        D ps = P::dset1(vm::detail::kSinCoeff[8]);
        for (int i = 7; i >= 0; --i)
            ps = P::dadd(P::dmul(ps, z), P::dset1(vm::detail::kSinCoeff[i]));
        D pc = P::dset1(vm::detail::kCosCoeff[8]);
        for (int i = 7; i >= 0; --i)
            pc = P::dadd(P::dmul(pc, z), P::dset1(vm::detail::kCosCoeff[i]));
        const D s = P::dmul(r, ps);
        const D c = pc;
        const M q1 = P::dcmp_eq(k, P::dset1(1.0));
        const M q2 = P::dcmp_eq(k, P::dset1(2.0));
        const M q3 = P::dcmp_eq(k, P::dset1(3.0));
        D so = s, co = c;
        so = P::dblend(so, c, q1);
        co = P::dblend(co, P::dneg(s), q1);
        so = P::dblend(so, P::dneg(s), q2);
        co = P::dblend(co, P::dneg(c), q2);
        so = P::dblend(so, P::dneg(c), q3);
        co = P::dblend(co, s, q3);
        s_out = so;
        c_out = co;
    }

    static inline D frac(D x) { return P::dsub(x, P::dfloor(x)); }

    static inline D gaussian(std::uint64_t seed, U path_lo, U path_hi, U step) {
        const U mask32 = P::uset1(0xFFFFFFFFull);
        U c0 = P::uand(step, mask32);
        U c1 = P::ushr(step, 32);
        U c2 = path_lo;
        U c3 = path_hi;
        philox10(c0, c1, c2, c3, seed, RngDomain::path_increments);
        const D u1 = uniform01(c0, c1);
        const D u2 = uniform01(c2, c3);
        const D radius = P::dsqrt(P::dmul(P::dset1(-2.0), log_pos(u1)));
        D s, c;
        sincos_2pi(u2, s, c);
        return P::dmul(radius, c);
    }
};

// ---------------------------------------------------------------------------
// Coefficient evaluation (mirrors PeriodicCoefficient::operator()).

template <class P>
struct CoeffEval {
    using D = typename P::D;

    static inline D eval(const CoeffView& cv, D x) {
        switch (cv.kind) {
            case 0: return P::dset1(cv.c0);
            case 1: return eval_fourier(cv, x);
            case 2: return eval_table1(cv, x);
            default: return eval_table3(cv, x);
        }
    }

    static inline D eval_fourier(const CoeffView& cv, D x) {
        const D u = Math<P>::frac(x);
        D s1, c1;
        Math<P>::sincos_2pi(u, s1, c1);
        D acc = P::dset1(cv.c0);
        D sk = s1, ck = c1;
        for (int k = 0;;) {
            acc = P::dadd(acc, P::dadd(P::dmul(P::dset1(cv.cos_coeff[k]), ck),
                                       P::dmul(P::dset1(cv.sin_coeff[k]), sk)));
            if (++k == cv.harmonics) break;
            const D sn = P::dadd(P::dmul(sk, c1), P::dmul(ck, s1));
            const D cn = P::dsub(P::dmul(ck, c1), P::dmul(sk, s1));
            sk = sn;
            ck = cn;
        }
        return acc;
    }

    static inline void cell_and_t(double n_as_double, D x, D& t_out,
                                  std::array<double, P::W>& cell_buf) {
        D u = Math<P>::frac(x);
        u = P::dblend(u, P::dset1(0.0), P::dcmp_ge(u, P::dset1(1.0)));
        const D scaled = P::dmul(u, P::dset1(n_as_double));
        D fi = P::dfloor(scaled);
        fi = P::dblend(fi, P::dset1(n_as_double - 1.0),
                       P::dcmp_ge(fi, P::dset1(n_as_double)));
        t_out = P::dsub(scaled, fi);
        P::dstore(cell_buf.data(), fi);
    }

    static inline D eval_table1(const CoeffView& cv, D x) {
        D t;
        std::array<double, P::W> cells;
        cell_and_t(static_cast<double>(cv.table_n), x, t, cells);
        std::array<double, P::W> v0, v1;
        for (int w = 0; w < P::W; ++w) {
            const int i = static_cast<int>(cells[w]);
            v0[w] = cv.table[i];
            v1[w] = cv.table[(i + 1) % cv.table_n];
        }
        const D a = P::dload(v0.data());
        const D b = P::dload(v1.data());
        return P::dadd(a, P::dmul(t, P::dsub(b, a)));
    }

    static inline D eval_table3(const CoeffView& cv, D x) {
        D t;
        std::array<double, P::W> cells;
        cell_and_t(static_cast<double>(cv.table_n), x, t, cells);
        std::array<double, P::W> b0, b1, b2, b3;
        for (int w = 0; w < P::W; ++w) {
            const int i = 4 * static_cast<int>(cells[w]);
            b0[w] = cv.cells[i];
            b1[w] = cv.cells[i + 1];
            b2[w] = cv.cells[i + 2];
            b3[w] = cv.cells[i + 3];
        }
        const D c0 = P::dload(b0.data());
        const D c1 = P::dload(b1.data());
        const D c2 = P::dload(b2.data());
        const D c3 = P::dload(b3.data());
        return P::dadd(P::dmul(P::dadd(P::dmul(P::dadd(P::dmul(c3, t), c2), t), c1), t), c0);
    }

    /// Periodic linear node table (mirrors EntropyPotential::derivative).
    static inline D eval_nodes(const double* nodes, int n, D x) {
        D t;
        std::array<double, P::W> cells;
        cell_and_t(static_cast<double>(n), x, t, cells);
        std::array<double, P::W> v0, v1;
        for (int w = 0; w < P::W; ++w) {
            const int i = static_cast<int>(cells[w]);
            v0[w] = nodes[i];
            v1[w] = nodes[(i + 1) % n];
        }
        const D a = P::dload(v0.data());
        const D b = P::dload(v1.data());
        return P::dadd(a, P::dmul(t, P::dsub(b, a)));
    }
};

// ---------------------------------------------------------------------------
// One Euler-Maruyama step on a lane group: x1 = (x + b dt) + sigma sqrt(dt) z.

template <class P>
inline typename P::D em_step(const ModelView& mv, std::uint64_t seed, typename P::D x,
                             typename P::U path_lo, typename P::U path_hi,
                             typename P::U step, typename P::D dtv, typename P::D sqv,
                             typename P::D* sigma_out) {
    using D = typename P::D;
    const D b = CoeffEval<P>::eval(mv.drift, x);
    const D sg = CoeffEval<P>::eval(mv.sigma, x);
    const D z = Math<P>::gaussian(seed, path_lo, path_hi, step);
    if (sigma_out) *sigma_out = sg;
    const D t1 = P::dmul(b, dtv);
    const D t3 = P::dmul(P::dmul(sg, sqv), z);
    return P::dadd(P::dadd(x, t1), t3);
}

template <class P>
inline void split_u64(const std::array<std::uint64_t, P::W>& v, typename P::U& lo,
                      typename P::U& hi) {
    std::array<std::uint64_t, P::W> l{}, h{};
    for (int w = 0; w < P::W; ++w) {
        l[w] = v[w] & 0xFFFFFFFFull;
        h[w] = v[w] >> 32;
    }
    lo = P::uload(l.data());
    hi = P::uload(h.data());
}

// ---------------------------------------------------------------------------
// Mode drivers.

template <class P>
void record_batch_core(const ModelView& mv, const StepPlan& plan, std::uint64_t path_begin,
                       std::uint64_t n_paths, const double* starts, double start_common,
                       std::uint64_t n_steps, double* const* buffers) {
    constexpr int W = P::W;
    using D = typename P::D;
    using U = typename P::U;
    const std::uint64_t total_steps = n_steps + (plan.last_dt > 0.0 ? 1 : 0);
    std::array<double, W> scratch{};
    for (std::uint64_t g = 0; g < n_paths; g += W) {
        std::array<std::uint64_t, W> ids{};
        std::array<double, W> x0{};
        std::array<double*, W> bufs{};
        for (int w = 0; w < W; ++w) {
            const bool valid = (g + w) < n_paths;
            const std::uint64_t local = valid ? g + w : n_paths - 1;
            ids[w] = path_begin + local;
            x0[w] = starts ? starts[local] : start_common;
            bufs[w] = valid ? buffers[local] : nullptr;
            if (bufs[w]) bufs[w][0] = x0[w];
        }
        U path_lo, path_hi;
        split_u64<P>(ids, path_lo, path_hi);
        U step = P::uset1(0);
        D x = P::dload(x0.data());
        const D dtv = P::dset1(plan.dt);
        const D sqv = P::dset1(plan.sqrt_dt);
        for (std::uint64_t k = 0; k < total_steps; ++k) {
            const bool partial = k == n_steps;
            x = em_step<P>(mv, plan.seed, x, path_lo, path_hi, step,
                           partial ? P::dset1(plan.last_dt) : dtv,
                           partial ? P::dset1(plan.sqrt_last_dt) : sqv, nullptr);
            step = P::uadd64(step, P::uset1(1));
            P::dstore(scratch.data(), x);
            for (int w = 0; w < W; ++w)
                if (bufs[w]) bufs[w][k + 1] = scratch[w];
        }
    }
}

/// Records paths until three conditions hold: a grid sample lies beyond
/// start +- 1 (the exit is grid-visible), a later sample lies back across the
/// exit level (so the reversed path's exit is grid-visible too; the event is
/// invariant under the quasi-time reversal), and t >= min_time. out.crossed:
/// 0 = no exit, 1 = exit seen but no return, 2 = fully resolved.
template <class P>
void record_until_batch_core(const ModelView& mv, const StepPlan& plan,
                             std::uint64_t path_begin, std::uint64_t n_paths,
                             double start_common, std::uint64_t max_steps, double min_time,
                             double* const* buffers, RecordUntilOut out) {
    constexpr int W = P::W;
    using D = typename P::D;
    using U = typename P::U;
    std::array<double, W> cur{};
    for (std::uint64_t g = 0; g < n_paths; g += W) {
        std::array<std::uint64_t, W> ids{};
        std::array<double*, W> bufs{};
        std::array<bool, W> valid{}, crossed{}, returned{}, stopped{};
        std::array<double, W> level{};
        int n_active = 0;
        for (int w = 0; w < W; ++w) {
            valid[w] = (g + w) < n_paths;
            const std::uint64_t local = valid[w] ? g + w : n_paths - 1;
            ids[w] = path_begin + local;
            bufs[w] = valid[w] ? buffers[local] : nullptr;
            if (bufs[w]) bufs[w][0] = start_common;
            stopped[w] = !valid[w];
            if (valid[w]) ++n_active;
        }
        U path_lo, path_hi;
        split_u64<P>(ids, path_lo, path_hi);
        U step = P::uset1(0);
        D x = P::dset1(start_common);
        const D dtv = P::dset1(plan.dt);
        const D sqv = P::dset1(plan.sqrt_dt);
        const double up = start_common + 1.0;
        const double lo = start_common - 1.0;
        std::uint64_t k = 0;
        while (k < max_steps && n_active > 0) {
            x = em_step<P>(mv, plan.seed, x, path_lo, path_hi, step, dtv, sqv, nullptr);
            step = P::uadd64(step, P::uset1(1));
            P::dstore(cur.data(), x);
            const double t_next = static_cast<double>(k + 1) * plan.dt;
            for (int w = 0; w < W; ++w) {
                if (stopped[w]) continue;
                bufs[w][k + 1] = cur[w];
                if (!crossed[w]) {
                    if (cur[w] >= up) {
                        crossed[w] = true;
                        level[w] = up;
                    } else if (cur[w] <= lo) {
                        crossed[w] = true;
                        level[w] = lo;
                    }
                } else if (!returned[w]) {
                    if ((level[w] == up && cur[w] <= up) || (level[w] == lo && cur[w] >= lo))
                        returned[w] = true;
                }
                if (crossed[w] && returned[w] && t_next >= min_time) {
                    stopped[w] = true;
                    out.steps_written[g + w] = k + 1;
                    out.crossed[g + w] = 2;
                    --n_active;
                }
            }
            ++k;
        }
        for (int w = 0; w < W; ++w) {
            if (!valid[w] || stopped[w]) continue;
            out.steps_written[g + w] = k;
            out.crossed[g + w] = crossed[w] ? 1 : 0;
        }
    }
}

template <class P>
void first_cycle_batch_core(const ModelView& mv, const StepPlan& plan,
                            std::uint64_t path_begin, std::uint64_t n_paths,
                            const double* starts, double start_common,
                            std::uint64_t max_steps, FirstCycleOut out) {
    constexpr int W = P::W;
    using D = typename P::D;
    using U = typename P::U;
    if (n_paths == 0) return;

    // Scalar lane state is the source of truth; vectors are rebuilt from it
    // every step. A lane's trajectory depends only on (seed, path, step), so
    // lane assignment and refill order cannot affect results.
    std::array<std::uint64_t, W> path_ids{}, step_ids{}, local_idx{};
    std::array<double, W> xs{}, refs{};
    std::array<bool, W> active{};
    std::array<double, W> curs{}, sig0s{};
    std::uint64_t cursor = 0;
    int n_active = 0;

    auto load_path = [&](int w) {
        if (cursor >= n_paths) {
            active[w] = false;
            return false;
        }
        local_idx[w] = cursor;
        path_ids[w] = path_begin + cursor;
        xs[w] = starts ? starts[cursor] : start_common;
        refs[w] = xs[w];
        step_ids[w] = 0;
        active[w] = true;
        ++cursor;
        return true;
    };

    for (int w = 0; w < W; ++w) {
        path_ids[w] = path_begin;
        if (load_path(w)) ++n_active;
    }

    const D dtv = P::dset1(plan.dt);
    const D sqv = P::dset1(plan.sqrt_dt);
    const bool want_sigma = plan.bridge_correction;

    while (n_active > 0) {
        U path_lo, path_hi, step;
        split_u64<P>(path_ids, path_lo, path_hi);
        step = P::uload(step_ids.data());
        const D x = P::dload(xs.data());
        D sigv = P::dset1(0.0);
        const D x1 = em_step<P>(mv, plan.seed, x, path_lo, path_hi, step, dtv, sqv,
                                want_sigma ? &sigv : nullptr);
        P::dstore(curs.data(), x1);
        if (want_sigma) P::dstore(sig0s.data(), sigv);
        for (int w = 0; w < W; ++w) {
            if (!active[w]) {
                ++step_ids[w];  // parked lane keeps burning its own stream
                continue;
            }
            const std::uint64_t stepno = step_ids[w];
            CrossEvent ev[4];
            double ref = refs[w];
            int n_ev = scan_crossings(xs[w], curs[w], ref, ev, 4);
            if (n_ev == 0 && plan.bridge_correction)
                n_ev = bridge_events(xs[w], curs[w], ref, sig0s[w], plan.dt, plan.seed,
                                     path_ids[w], stepno, ev, 4);
            if (n_ev > 0) {
                out.t[local_idx[w]] =
                    static_cast<double>(stepno) * plan.dt + ev[0].lambda * plan.dt;
                out.sign[local_idx[w]] = static_cast<std::int8_t>(ev[0].sign);
                out.censored[local_idx[w]] = 0;
                if (!load_path(w)) --n_active;
            } else if (stepno + 1 >= max_steps) {
                out.t[local_idx[w]] = static_cast<double>(max_steps) * plan.dt;
                out.sign[local_idx[w]] = 0;
                out.censored[local_idx[w]] = 1;
                if (!load_path(w)) --n_active;
            } else {
                xs[w] = curs[w];
                step_ids[w] = stepno + 1;
            }
        }
    }
}

template <class P>
void counting_batch_core(const ModelView& mv, const StepPlan& plan, std::uint64_t path_begin,
                         std::uint64_t n_paths, const double* starts, double start_common,
                         std::uint64_t n_steps, const double* checkpoint_times,
                         int n_checkpoints, CountingOut out) {
    constexpr int W = P::W;
    using D = typename P::D;
    using U = typename P::U;
    const std::uint64_t total_steps = n_steps + (plan.last_dt > 0.0 ? 1 : 0);
    const bool want_entropy = out.strat_sum != nullptr && plan.fprime_table != nullptr;
    std::array<double, W> prevs{}, curs{}, sig0s{};

    for (std::uint64_t g = 0; g < n_paths; g += W) {
        std::array<std::uint64_t, W> ids{};
        std::array<double, W> x0{};
        std::array<bool, W> valid{};
        std::array<double, W> refs{};
        std::array<std::array<std::uint32_t, 8>, W> cnt_plus{};
        std::array<std::array<std::uint32_t, 8>, W> cnt_minus{};
        for (int w = 0; w < W; ++w) {
            valid[w] = (g + w) < n_paths;
            const std::uint64_t local = valid[w] ? g + w : n_paths - 1;
            ids[w] = path_begin + local;
            x0[w] = starts ? starts[local] : start_common;
            refs[w] = x0[w];
            prevs[w] = x0[w];
        }
        U path_lo, path_hi;
        split_u64<P>(ids, path_lo, path_hi);
        U step = P::uset1(0);
        D x = P::dload(x0.data());
        D strat = P::dset1(0.0);
        const D dtv = P::dset1(plan.dt);
        const D sqv = P::dset1(plan.sqrt_dt);
        const bool want_sigma = plan.bridge_correction;

        for (std::uint64_t k = 0; k < total_steps; ++k) {
            const bool partial = k == n_steps;
            const double h = partial ? plan.last_dt : plan.dt;
            D sigv = P::dset1(0.0);
            const D x1 = em_step<P>(mv, plan.seed, x, path_lo, path_hi, step,
                                    partial ? P::dset1(plan.last_dt) : dtv,
                                    partial ? P::dset1(plan.sqrt_last_dt) : sqv,
                                    want_sigma ? &sigv : nullptr);
            if (want_entropy) {
                const D mid = P::dmul(P::dadd(x, x1), P::dset1(0.5));
                const D fp = CoeffEval<P>::eval_nodes(plan.fprime_table, plan.fprime_n, mid);
                strat = P::dadd(strat, P::dmul(fp, P::dsub(x1, x)));
            }
            x = x1;
            step = P::uadd64(step, P::uset1(1));
            P::dstore(curs.data(), x1);
            if (want_sigma) P::dstore(sig0s.data(), sigv);
            const double t_base = static_cast<double>(k) * plan.dt;
            for (int w = 0; w < W; ++w) {
                if (!valid[w]) continue;
                CrossEvent ev[4];
                int n_ev = scan_crossings(prevs[w], curs[w], refs[w], ev, 4);
                if (n_ev == 0 && plan.bridge_correction)
                    n_ev = bridge_events(prevs[w], curs[w], refs[w], sig0s[w], h, plan.seed,
                                         ids[w], k, ev, 4);
                for (int i = 0; i < n_ev; ++i) {
                    const double t_event = t_base + ev[i].lambda * h;
                    for (int c = 0; c < n_checkpoints; ++c) {
                        if (t_event <= checkpoint_times[c]) {
                            if (ev[i].sign > 0)
                                ++cnt_plus[w][c];
                            else
                                ++cnt_minus[w][c];
                        }
                    }
                }
                prevs[w] = curs[w];
            }
        }
        std::array<double, W> strat_buf{};
        P::dstore(strat_buf.data(), strat);
        for (int w = 0; w < W; ++w) {
            if (!valid[w]) continue;
            const std::uint64_t local = g + w;
            out.x_final[local] = curs[w];
            if (out.strat_sum) out.strat_sum[local] = strat_buf[w];
            for (int c = 0; c < n_checkpoints; ++c) {
                out.n_plus[local * n_checkpoints + c] = cnt_plus[w][c];
                out.n_minus[local * n_checkpoints + c] = cnt_minus[w][c];
            }
        }
    }
}

} // namespace circlesim::detail
