#include "circlesim/qtr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "circlesim/stats.hpp"

namespace circlesim {

namespace {

/// Linear interpolation of a path at time t (clamped to the grid range).
double interp_path(const std::vector<double>& times, const std::vector<double>& xs, double t) {
    if (t <= times.front()) return xs.front();
    if (t >= times.back()) return xs.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[j - 1], t1 = times[j];
    const double lam = (t - t0) / (t1 - t0);
    return xs[j - 1] + lam * (xs[j] - xs[j - 1]);
}

} // namespace

QtrMarkers find_markers(const PathRecord& path) {
    if (path.positions.size() < 2) throw NotHitError("find_markers: path too short");
    if (std::abs(path.positions.front()) > 1e-9)
        throw Error("find_markers: path must start at 0");
    const auto& t = path.times;
    const auto& x = path.positions;
    QtrMarkers m;
    std::size_t cross_seg = 0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double x0 = x[i], x1 = x[i + 1];
        // earliest crossing of +1 or -1 within the segment
        double lam_best = 2.0;
        int sign = 0;
        if (x1 >= 1.0 && x0 < 1.0) {
            lam_best = (1.0 - x0) / (x1 - x0);
            sign = +1;
        }
        if (x1 <= -1.0 && x0 > -1.0) {
            const double lam = (-1.0 - x0) / (x1 - x0);
            if (lam < lam_best) {
                lam_best = lam;
                sign = -1;
            }
        }
        if (sign != 0) {
            m.tau = t[i] + lam_best * (t[i + 1] - t[i]);
            m.terminal_sign = sign;
            cross_seg = i;
            found = true;
            break;
        }
    }
    if (!found) throw NotHitError("find_markers: path never reaches +-1");

    // last zero strictly before tau; the start at 0 guarantees existence
    m.g_tau = 0.0;
    for (std::size_t i = cross_seg + 1; i-- > 0;) {
        const double x0 = x[i];
        const double x1 = (i == cross_seg) ? static_cast<double>(m.terminal_sign) : x[i + 1];
        const double t1 = (i == cross_seg) ? m.tau : t[i + 1];
        if (x0 == 0.0) {
            m.g_tau = t[i];
            break;
        }
        if ((x0 < 0.0 && x1 >= 0.0) || (x0 > 0.0 && x1 <= 0.0)) {
            const double lam = -x0 / (x1 - x0);
            m.g_tau = t[i] + lam * (t1 - t[i]);
            break;
        }
    }
    return m;
}

PathRecord apply_qtr(const PathRecord& path, const QtrMarkers& markers) {
    PathRecord out = path;
    const double shift1 = markers.terminal_sign > 0 ? -1.0 : 1.0;
    const double shift2 = 2.0 * shift1;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        const double t = path.times[i];
        if (t < markers.g_tau) {
            out.positions[i] = path.positions[i];
        } else if (t < markers.tau) {
            const double mirrored = markers.g_tau + markers.tau - t;
            out.positions[i] = interp_path(path.times, path.positions, mirrored) + shift1;
        } else {
            out.positions[i] = path.positions[i] + shift2;
        }
    }
    return out;
}

PathRecord apply_qtr_exact(const PathRecord& path, const QtrMarkers& markers) {
    PathRecord out;
    out.path_index = path.path_index;
    out.master_seed = path.master_seed;
    out.model_hash = path.model_hash;
    const double shift1 = markers.terminal_sign > 0 ? -1.0 : 1.0;
    const double shift2 = 2.0 * shift1;
    const auto& t = path.times;
    const auto& x = path.positions;
    // head: samples strictly before g_tau
    for (std::size_t i = 0; i < t.size() && t[i] < markers.g_tau; ++i) {
        out.times.push_back(t[i]);
        out.positions.push_back(x[i]);
    }
    // spliced boundary value at g_tau: w(tau) + shift = exactly 0 shifted
    out.times.push_back(markers.g_tau);
    out.positions.push_back(static_cast<double>(markers.terminal_sign) + shift1);
    // reversed middle: original samples in (g_tau, tau), mirrored in time
    for (std::size_t i = t.size(); i-- > 0;) {
        if (t[i] <= markers.g_tau || t[i] >= markers.tau) continue;
        out.times.push_back(markers.g_tau + markers.tau - t[i]);
        out.positions.push_back(x[i] + shift1);
    }
    // value at tau: w(g_tau) = 0, shifted
    out.times.push_back(markers.tau);
    out.positions.push_back(0.0 + shift1);
    // tail
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= markers.tau) continue;
        out.times.push_back(t[i]);
        out.positions.push_back(x[i] + shift2);
    }
    return out;
}

QtrFunctionals qtr_functionals(const PathRecord& path, double fixed_time_u) {
    const QtrMarkers m = find_markers(path);
    QtrFunctionals f;
    f.tau = m.tau;
    f.g_tau = m.g_tau;
    f.at_fixed_time = interp_path(path.times, path.positions, fixed_time_u);
    double sup = 0.0;
    double occ = 0.0;
    const auto& t = path.times;
    const auto& x = path.positions;
    for (std::size_t i = 0; i + 1 < x.size() && t[i] < m.tau; ++i) {
        sup = std::max(sup, std::abs(x[i]));
        const double seg_end = std::min(t[i + 1], m.tau);
        const double x_end =
            t[i + 1] <= m.tau ? x[i + 1] : interp_path(t, x, m.tau);
        const double mid = 0.5 * (x[i] + x_end);
        if (mid > 0.0) occ += seg_end - t[i];
    }
    f.sup_abs = std::max(sup, 1.0);  // the interpolated crossing value is exactly 1
    f.occupation = occ;
    return f;
}

QtrInvarianceResult qtr_invariance_test(const SimulationConfig& config, double fixed_time_u,
                                        double alpha) {
    const CircleDiffusionModel bm = make_constant_model(0.0, 1.0);
    SimulationConfig cfg = config;
    cfg.start_point = 0.0;
    cfg.stationary_start = false;
    if (cfg.censoring_time <= 0.0) cfg.censoring_time = 50.0;
    cfg.validate(bm);

    const std::uint64_t n_half = cfg.n_paths / 2;
    if (n_half == 0) throw ConfigError("qtr_invariance_test: need at least 2 paths");
    const ModelView mv = make_model_view(bm);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(cfg.step_size, cfg.master_seed, 0.0, n_full);
    const std::uint64_t max_steps =
        static_cast<std::uint64_t>(std::ceil(cfg.censoring_time / cfg.step_size));
    const double min_time = fixed_time_u + cfg.step_size;

    // 5 functionals x 2 groups; censored paths recorded as NaN and dropped
    constexpr int kFun = 5;
    std::vector<std::vector<double>> group_a(kFun), group_b(kFun);
    for (auto& v : group_a) v.assign(n_half, std::nan(""));
    for (auto& v : group_b) v.assign(n_half, std::nan(""));

    const KernelOps& ops = kernel_ops(cfg.backend);
    auto run_group = [&](bool transformed, std::uint64_t path_offset,
                         std::vector<std::vector<double>>& sink) {
        const int workers = std::max(1, worker_count());
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (n_half + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::uint64_t b = std::min<std::uint64_t>(n_half, w * chunk);
            const std::uint64_t e = std::min<std::uint64_t>(n_half, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, b, e] {
                constexpr std::uint64_t kSub = 8;
                std::vector<std::vector<double>> bufs(kSub,
                                                      std::vector<double>(max_steps + 1));
                std::vector<double*> buf_ptrs(kSub);
                std::vector<std::uint64_t> steps(kSub);
                std::vector<std::uint8_t> crossed(kSub);
                for (std::uint64_t s = b; s < e; s += kSub) {
                    const std::uint64_t cnt = std::min(kSub, e - s);
                    for (std::uint64_t i = 0; i < cnt; ++i) buf_ptrs[i] = bufs[i].data();
                    RecordUntilOut out{steps.data(), crossed.data()};
                    ops.record_until_batch(mv, plan, path_offset + s, cnt, 0.0, max_steps,
                                           min_time, buf_ptrs.data(), out);
                    for (std::uint64_t i = 0; i < cnt; ++i) {
                        if (crossed[i] != 2) continue;  // censored
                        const std::uint64_t len = steps[i] + 1;
                        PathRecord rec;
                        rec.positions.assign(bufs[i].begin(), bufs[i].begin() + len);
                        rec.times.resize(len);
                        for (std::uint64_t k = 0; k < len; ++k)
                            rec.times[k] = static_cast<double>(k) * cfg.step_size;
                        try {
                            QtrFunctionals f;
                            if (transformed) {
                                const QtrMarkers mk = find_markers(rec);
                                const PathRecord rev = apply_qtr(rec, mk);
                                f = qtr_functionals(rev, fixed_time_u);
                            } else {
                                f = qtr_functionals(rec, fixed_time_u);
                            }
                            sink[0][s + i] = f.tau;
                            sink[1][s + i] = f.g_tau;
                            sink[2][s + i] = f.sup_abs;
                            sink[3][s + i] = f.at_fixed_time;
                            sink[4][s + i] = f.occupation;
                        } catch (const NotHitError&) {
                            // leave as censored
                        }
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    };

    run_group(false, 0, group_a);
    run_group(true, n_half, group_b);

    auto strip = [](const std::vector<double>& v) {
        std::vector<double> out;
        out.reserve(v.size());
        for (double x : v)
            if (!std::isnan(x)) out.push_back(x);
        return out;
    };

    static const char* kNames[kFun] = {"tau", "g_tau", "sup_abs", "fixed_time_marginal",
                                       "occupation_above_zero"};
    QtrInvarianceResult result;
    VerificationReport& rep = result.report;
    rep.theorem_id = "qtr_invariance";
    rep.master_seed = cfg.master_seed;
    rep.config_digest = cfg.digest();
    rep.model_hash = bm.hash();
    rep.tolerance = alpha;
    rep.sample_size = cfg.n_paths;

    double min_p = 1.0;
    double total_cens = 0.0;
    for (int f = 0; f < kFun; ++f) {
        const auto a = strip(group_a[f]);
        const auto b = strip(group_b[f]);
        total_cens = std::max(
            total_cens, 1.0 - static_cast<double>(std::min(a.size(), b.size())) / n_half);
        if (a.empty() || b.empty()) {
            result.entries.push_back({kNames[f], 0.0, 0.0, 0});
            continue;
        }
        // a degenerate shared constant (sup_abs) compares equal by design
        const KsResult ks = ks_two_sample(a, b);
        result.entries.push_back({kNames[f], ks.statistic, ks.p_value,
                                  std::min(a.size(), b.size())});
        rep.statistics.push_back(ks.p_value);
        min_p = std::min(min_p, ks.p_value);
    }
    rep.censored_fraction = total_cens;
    rep.p_value = min_p;
    const double threshold = alpha / kFun;  // Bonferroni
    if (total_cens > 0.1)
        rep.verdict = Verdict::inconclusive;
    else
        rep.verdict = min_p >= threshold ? Verdict::pass : Verdict::fail;
    rep.details = "two-sample KS on (tau, g_tau, sup|w|, w(u), occupation); "
                  "split-sample groups";
    return result;
}

} // namespace circlesim
