#include "circlesim/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "circlesim/rng.hpp"
#include "circlesim/stats.hpp"

namespace circlesim {

namespace {

constexpr std::uint64_t kMinFtSamples = 10000;

VerificationReport base_report(const char* id, const TestContext& ctx, std::uint64_t n,
                               double censored) {
    VerificationReport rep;
    rep.theorem_id = id;
    rep.model_hash = ctx.model_hash;
    rep.config_digest = ctx.config_digest;
    rep.master_seed = ctx.master_seed;
    rep.sample_size = n;
    rep.censored_fraction = censored;
    return rep;
}

/// Threaded bootstrap: fn(replicate, indices) is called once per replicate
/// with a resampled index set, and must write only to replicate-owned slots.
void for_each_replicate(std::size_t n, int n_resamples, std::uint64_t seed,
                        std::uint64_t stream,
                        const std::function<void(int, const std::vector<std::uint32_t>&)>& fn) {
    const int workers = std::max(1, std::min(worker_count(), n_resamples));
    std::vector<std::thread> pool;
    const int chunk = (n_resamples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int b = w * chunk;
        const int e = std::min(n_resamples, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            std::vector<std::uint32_t> idx(n);
            for (int r = b; r < e; ++r) {
                const std::uint64_t major = (stream << 24) ^ static_cast<std::uint64_t>(r);
                for (std::size_t d = 0; d < n; ++d)
                    idx[d] = static_cast<std::uint32_t>(
                        uniform_index(seed, RngDomain::bootstrap, major, d, n));
                fn(r, idx);
            }
        });
    }
    for (auto& t : pool) t.join();
}

struct CiBounds {
    double lo, hi;
};

CiBounds percentile_ci(std::vector<double> reps, double level) {
    const double alpha = 1.0 - level;
    const double lo = sample_quantile(reps, alpha / 2.0);
    const double hi = sample_quantile(std::move(reps), 1.0 - alpha / 2.0);
    return {lo, hi};
}

double bonferroni_level(double ci_level, std::size_t n_points) {
    const double alpha = 1.0 - ci_level;
    return 1.0 - alpha / static_cast<double>(std::max<std::size_t>(1, n_points));
}

double shifted_log_mean(const std::vector<double>& exps, double shift, std::size_t n) {
    double s = 0.0;
    for (double v : exps) s += v;
    return shift + std::log(s / static_cast<double>(n));
}

} // namespace

double log_mean_exp(const std::vector<double>& v) {
    if (v.empty()) throw Error("log_mean_exp: empty input");
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// cycle-symmetry family

VerificationReport cycle_symmetry_test(const std::vector<FirstCycleSample>& samples,
                                       const TestContext& ctx) {
    std::vector<double> t_plus, t_minus;
    std::size_t censored = 0;
    for (const auto& s : samples) {
        if (s.censored) {
            ++censored;
            continue;
        }
        (s.sign > 0 ? t_plus : t_minus).push_back(s.t);
    }
    VerificationReport rep = base_report("cycle_symmetry", ctx, samples.size(),
                                         static_cast<double>(censored) / samples.size());
    rep.tolerance = ctx.alpha;
    if (t_plus.size() < 1000 || t_minus.size() < 1000 || rep.censored_fraction > 0.1) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1000 samples per sign and censoring <= 10%";
        return rep;
    }
    const KsResult ks = ks_two_sample(t_plus, t_minus);
    rep.statistics = {ks.statistic, static_cast<double>(t_plus.size()),
                      static_cast<double>(t_minus.size())};
    rep.p_value = ks.p_value;
    rep.verdict = ks.p_value >= ctx.alpha ? Verdict::pass : Verdict::fail;
    rep.details = "two-sample KS between conditioned forming-time laws";
    return rep;
}

VerificationReport ratio_curve_test(const std::vector<FirstCycleSample>& samples,
                                    const std::vector<double>& u_grid, double gamma,
                                    const TestContext& ctx) {
    std::vector<double> t;
    std::vector<std::uint8_t> plus;
    std::size_t censored = 0;
    for (const auto& s : samples) {
        if (s.censored) {
            ++censored;
            continue;
        }
        t.push_back(s.t);
        plus.push_back(s.sign > 0 ? 1 : 0);
    }
    VerificationReport rep = base_report("ratio_curve", ctx, samples.size(),
                                         static_cast<double>(censored) / samples.size());
    const std::size_t n = t.size();
    auto counts_at = [&](const std::vector<std::uint32_t>* idx, double u, std::size_t& up,
                         std::size_t& dn) {
        up = dn = 0;
        if (idx) {
            for (std::uint32_t i : *idx) {
                if (t[i] <= u) (plus[i] ? up : dn) += 1;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                if (t[i] <= u) (plus[i] ? up : dn) += 1;
        }
    };

    std::vector<double> usable_u, point;
    std::size_t skipped = 0;
    for (double u : u_grid) {
        std::size_t up, dn;
        counts_at(nullptr, u, up, dn);
        if (up >= 50 && dn >= 50) {
            usable_u.push_back(u);
            point.push_back(std::log(static_cast<double>(up) / static_cast<double>(dn)));
        } else {
            ++skipped;
        }
    }
    rep.tolerance = 1.0 - ctx.ci_level;
    if (usable_u.empty() || n < 1000 || rep.censored_fraction > 0.1) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "no usable grid points (need both counts >= 50)";
        return rep;
    }

    std::vector<std::vector<double>> reps(usable_u.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(n, ctx.n_resamples, ctx.master_seed, ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           for (std::size_t g = 0; g < usable_u.size(); ++g) {
                               std::size_t up, dn;
                               counts_at(&idx, usable_u[g], up, dn);
                               reps[g][r] = std::log(static_cast<double>(std::max<std::size_t>(1, up)) /
                                                     static_cast<double>(std::max<std::size_t>(1, dn)));
                           }
                       });

    const double level = bonferroni_level(ctx.ci_level, usable_u.size());
    double worst = 0.0;
    bool ok = true;
    for (std::size_t g = 0; g < usable_u.size(); ++g) {
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && gamma >= ci.lo && gamma <= ci.hi;
        worst = std::max(worst, std::max(gamma - ci.hi, ci.lo - gamma));
        rep.curve.push_back({usable_u[g], point[g], ci.lo, ci.hi});
        rep.statistics.push_back(point[g]);
    }
    rep.curve_name = "u,log_ratio,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "log P(T<=u,+)/P(T<=u,-) vs gamma; " + std::to_string(skipped) +
                  " sparse grid points excluded";
    return rep;
}

VerificationReport independence_test(const std::vector<FirstCycleSample>& samples,
                                     const TestContext& ctx) {
    std::vector<double> gaps;
    std::vector<int> labels;
    std::size_t censored = 0;
    for (const auto& s : samples) {
        if (s.censored) {
            ++censored;
            continue;
        }
        gaps.push_back(s.t);
        labels.push_back(s.sign);
    }
    VerificationReport rep = base_report("independence", ctx, samples.size(),
                                         static_cast<double>(censored) / samples.size());
    rep.tolerance = ctx.alpha;
    if (gaps.size() < 1000 || rep.censored_fraction > 0.1) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "too few non-censored samples";
        return rep;
    }
    const PermutationResult pr = independence_permutation_test(
        gaps, labels, ctx.n_resamples, ctx.master_seed, ctx.bootstrap_stream + 1);
    rep.statistics = {pr.statistic};
    rep.p_value = pr.p_value;
    rep.verdict = pr.p_value >= ctx.alpha ? Verdict::pass : Verdict::fail;
    rep.details = "permutation test: |mean T difference| between sign classes";
    return rep;
}

// ---------------------------------------------------------------------------
// fluctuation theorems on counts

VerificationReport transient_ft_test(const std::vector<std::int64_t>& net_counts,
                                     double gamma, double horizon, const TestContext& ctx) {
    VerificationReport rep = base_report("transient_ft", ctx, net_counts.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (net_counts.size() < kMinFtSamples) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e4 samples";
        return rep;
    }
    std::int64_t w_min = 0, w_max = 0;
    for (auto w : net_counts) {
        w_min = std::min(w_min, w);
        w_max = std::max(w_max, w);
    }
    const std::size_t width = static_cast<std::size_t>(w_max - w_min + 1);
    std::vector<std::uint32_t> offset(net_counts.size());
    std::vector<std::size_t> hist(width, 0);
    for (std::size_t i = 0; i < net_counts.size(); ++i) {
        offset[i] = static_cast<std::uint32_t>(net_counts[i] - w_min);
        ++hist[offset[i]];
    }
    auto count_of = [&](std::int64_t k) -> std::size_t {
        if (k < w_min || k > w_max) return 0;
        return hist[static_cast<std::size_t>(k - w_min)];
    };
    std::vector<int> usable_k;
    for (std::int64_t k = 1; k <= std::max(std::llabs(w_min), std::llabs(w_max)); ++k)
        if (count_of(k) >= 50 && count_of(-k) >= 50) usable_k.push_back(static_cast<int>(k));
    if (usable_k.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "no k with >= 50 counts on both sides";
        return rep;
    }

    std::vector<std::vector<double>> reps(usable_k.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(net_counts.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           std::vector<std::uint32_t> h(width, 0);
                           for (std::uint32_t i : idx) ++h[offset[i]];
                           for (std::size_t g = 0; g < usable_k.size(); ++g) {
                               const int k = usable_k[g];
                               const double ck = std::max(
                                   1u, h[static_cast<std::size_t>(k - w_min)]);
                               const double cmk = std::max(
                                   1u, h[static_cast<std::size_t>(-k - w_min)]);
                               reps[g][r] = std::log(ck / cmk);
                           }
                       });

    const double level = bonferroni_level(ctx.ci_level, usable_k.size());
    bool ok = true;
    double worst = 0.0;
    for (std::size_t g = 0; g < usable_k.size(); ++g) {
        const int k = usable_k[g];
        const double target = gamma * k;
        const double pt = std::log(static_cast<double>(count_of(k)) /
                                   static_cast<double>(count_of(-k)));
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && target >= ci.lo && target <= ci.hi;
        worst = std::max(worst, std::max(target - ci.hi, ci.lo - target));
        rep.curve.push_back({static_cast<double>(k), pt, ci.lo, ci.hi});
        rep.statistics.push_back(pt);
    }
    rep.curve_name = "k,log_count_ratio,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "log(#{W=k}/#{W=-k}) vs gamma*k at t=" + std::to_string(horizon);
    return rep;
}

namespace {

/// Exponent arrays shifted by their max for stable bootstrap means.
struct ShiftedExp {
    std::vector<double> values;  // exp(arg - shift)
    double shift = 0.0;
    double rel_se = 0.0;

    static ShiftedExp from_args(const std::vector<double>& args) {
        ShiftedExp se;
        se.shift = args.empty() ? 0.0 : *std::max_element(args.begin(), args.end());
        se.values.resize(args.size());
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < args.size(); ++i) {
            se.values[i] = std::exp(args[i] - se.shift);
            s += se.values[i];
            s2 += se.values[i] * se.values[i];
        }
        const double n = static_cast<double>(args.size());
        const double mean = s / n;
        const double var = std::max(0.0, s2 / n - mean * mean);
        se.rel_se = mean > 0.0 ? std::sqrt(var / n) / mean : 0.0;
        return se;
    }

    double log_mean() const { return shifted_log_mean(values, shift, values.size()); }

    double log_mean_over(const std::vector<std::uint32_t>& idx) const {
        double s = 0.0;
        for (std::uint32_t i : idx) s += values[i];
        return shift + std::log(s / static_cast<double>(idx.size()));
    }
};

} // namespace

VerificationReport kls_ft_test(const std::vector<std::int64_t>& net_counts, double gamma,
                               std::vector<double> lambda_grid, double horizon,
                               const TestContext& ctx) {
    VerificationReport rep = base_report("kls_ft", ctx, net_counts.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (net_counts.size() < kMinFtSamples) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e4 samples";
        return rep;
    }
    // default grid guard from the design decision
    std::size_t dropped_range = 0;
    std::vector<double> lams;
    for (double l : lambda_grid) {
        if (l < -gamma - 2.0 || l > 2.0) {
            ++dropped_range;
            continue;
        }
        lams.push_back(l);
    }

    std::vector<ShiftedExp> left, right;
    std::vector<double> retained;
    std::size_t heavy = 0;
    for (double l : lams) {
        std::vector<double> a1(net_counts.size()), a2(net_counts.size());
        for (std::size_t i = 0; i < net_counts.size(); ++i) {
            const double w = static_cast<double>(net_counts[i]);
            a1[i] = l * w;
            a2[i] = -(l + gamma) * w;
        }
        ShiftedExp e1 = ShiftedExp::from_args(a1);
        ShiftedExp e2 = ShiftedExp::from_args(a2);
        if (e1.rel_se > 0.5 || e2.rel_se > 0.5) {
            ++heavy;
            continue;
        }
        retained.push_back(l);
        left.push_back(std::move(e1));
        right.push_back(std::move(e2));
    }
    if (retained.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "all lambda points excluded (range or heavy tails)";
        return rep;
    }

    std::vector<std::vector<double>> reps(retained.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(net_counts.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           for (std::size_t g = 0; g < retained.size(); ++g)
                               reps[g][r] = left[g].log_mean_over(idx) -
                                            right[g].log_mean_over(idx);
                       });

    const double level = bonferroni_level(ctx.ci_level, retained.size());
    bool ok = true;
    double worst = 0.0;
    for (std::size_t g = 0; g < retained.size(); ++g) {
        const double diff = left[g].log_mean() - right[g].log_mean();
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && ci.lo <= 0.0 && 0.0 <= ci.hi;
        worst = std::max(worst, std::max(-ci.hi, ci.lo));
        rep.curve.push_back({retained[g], diff, ci.lo, ci.hi});
        rep.statistics.push_back(diff);
    }
    rep.curve_name = "lambda,log_mean_gap,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "log E e^{lW} - log E e^{-(l+g)W} at t=" + std::to_string(horizon) + "; " +
                  std::to_string(heavy) + " heavy-tail and " +
                  std::to_string(dropped_range) + " out-of-range lambda excluded";
    return rep;
}

VerificationReport integral_ft_test(const std::vector<std::int64_t>& net_counts,
                                    double gamma, double horizon, const TestContext& ctx) {
    VerificationReport rep = base_report("integral_ft", ctx, net_counts.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (net_counts.size() < kMinFtSamples) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e4 samples";
        return rep;
    }
    std::vector<double> args(net_counts.size());
    for (std::size_t i = 0; i < net_counts.size(); ++i)
        args[i] = -gamma * static_cast<double>(net_counts[i]);
    const ShiftedExp se = ShiftedExp::from_args(args);

    std::vector<double> reps(ctx.n_resamples, 0.0);
    for_each_replicate(net_counts.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           reps[r] = std::exp(se.log_mean_over(idx));
                       });
    const double mean = std::exp(se.log_mean());
    const CiBounds ci = percentile_ci(reps, ctx.ci_level);
    rep.statistics = {mean};
    rep.curve_name = "lambda,mean,ci_lo,ci_hi";
    rep.curve.push_back({-gamma, mean, ci.lo, ci.hi});
    rep.margin = std::max(1.0 - ci.hi, ci.lo - 1.0);
    rep.verdict = (ci.lo <= 1.0 && 1.0 <= ci.hi) ? Verdict::pass : Verdict::fail;
    rep.details = "bootstrap CI of E e^{-gamma W_t} at t=" + std::to_string(horizon);
    return rep;
}

VerificationReport joint_count_symmetry_test(
    const std::vector<std::array<std::uint32_t, 2>>& count_pairs, double gamma,
    double horizon, const TestContext& ctx) {
    VerificationReport rep = base_report("joint_count_symmetry", ctx, count_pairs.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (count_pairs.size() < kMinFtSamples) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e4 samples";
        return rep;
    }
    std::uint32_t max_c = 0;
    for (const auto& pr : count_pairs) max_c = std::max({max_c, pr[0], pr[1]});
    const std::size_t base = max_c + 1;
    std::vector<std::uint32_t> key(count_pairs.size());
    std::vector<std::size_t> hist(base * base, 0);
    for (std::size_t i = 0; i < count_pairs.size(); ++i) {
        key[i] = count_pairs[i][0] * static_cast<std::uint32_t>(base) + count_pairs[i][1];
        ++hist[key[i]];
    }
    struct Cell {
        std::uint32_t n, m;
    };
    std::vector<Cell> cells;
    for (std::uint32_t nn = 0; nn <= max_c; ++nn)
        for (std::uint32_t mm = 0; mm < nn; ++mm)
            if (hist[nn * base + mm] >= 50 && hist[mm * base + nn] >= 50)
                cells.push_back({nn, mm});
    if (cells.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "no usable (n,m) cells with >= 50 counts both ways";
        return rep;
    }

    std::vector<std::vector<double>> reps(cells.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(count_pairs.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           std::vector<std::uint32_t> h(base * base, 0);
                           for (std::uint32_t i : idx) ++h[key[i]];
                           for (std::size_t g = 0; g < cells.size(); ++g) {
                               const double a = std::max(
                                   1u, h[cells[g].n * base + cells[g].m]);
                               const double b = std::max(
                                   1u, h[cells[g].m * base + cells[g].n]);
                               reps[g][r] = std::log(a / b);
                           }
                       });

    const double level = bonferroni_level(ctx.ci_level, cells.size());
    bool ok = true;
    double worst = 0.0;
    for (std::size_t g = 0; g < cells.size(); ++g) {
        const double target =
            gamma * (static_cast<double>(cells[g].n) - static_cast<double>(cells[g].m));
        const double pt = std::log(static_cast<double>(hist[cells[g].n * base + cells[g].m]) /
                                   static_cast<double>(hist[cells[g].m * base + cells[g].n]));
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && target >= ci.lo && target <= ci.hi;
        worst = std::max(worst, std::max(target - ci.hi, ci.lo - target));
        rep.curve.push_back(
            {static_cast<double>(cells[g].n) * 1000.0 + cells[g].m, pt, ci.lo, ci.hi});
        rep.statistics.push_back(pt);
    }
    rep.curve_name = "cell_1000n_plus_m,log_ratio,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "log P(n,m)/P(m,n) vs gamma (n-m) at t=" + std::to_string(horizon) +
                  "; diagonal cells are identically zero and skipped";
    return rep;
}

VerificationReport scgf_symmetry_test(
    const std::vector<std::array<std::uint32_t, 2>>& count_pairs, double gamma,
    const std::vector<std::array<double, 2>>& lambda_pairs, double horizon,
    const TestContext& ctx) {
    VerificationReport rep = base_report("scgf_symmetry", ctx, count_pairs.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (count_pairs.size() < kMinFtSamples) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e4 samples";
        return rep;
    }
    std::vector<ShiftedExp> left, right;
    std::vector<std::array<double, 2>> retained;
    std::size_t heavy = 0;
    for (const auto& lp : lambda_pairs) {
        std::vector<double> a1(count_pairs.size()), a2(count_pairs.size());
        for (std::size_t i = 0; i < count_pairs.size(); ++i) {
            const double np = count_pairs[i][0];
            const double nm = count_pairs[i][1];
            a1[i] = lp[0] * np + lp[1] * nm;
            a2[i] = (lp[1] - gamma) * np + (lp[0] + gamma) * nm;
        }
        ShiftedExp e1 = ShiftedExp::from_args(a1);
        ShiftedExp e2 = ShiftedExp::from_args(a2);
        if (e1.rel_se > 0.5 || e2.rel_se > 0.5) {
            ++heavy;
            continue;
        }
        retained.push_back(lp);
        left.push_back(std::move(e1));
        right.push_back(std::move(e2));
    }
    if (retained.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "all lambda pairs heavy-tailed";
        return rep;
    }
    std::vector<std::vector<double>> reps(retained.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(count_pairs.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           for (std::size_t g = 0; g < retained.size(); ++g)
                               reps[g][r] = left[g].log_mean_over(idx) -
                                            right[g].log_mean_over(idx);
                       });
    const double level = bonferroni_level(ctx.ci_level, retained.size());
    bool ok = true;
    double worst = 0.0;
    for (std::size_t g = 0; g < retained.size(); ++g) {
        const double diff = left[g].log_mean() - right[g].log_mean();
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && ci.lo <= 0.0 && 0.0 <= ci.hi;
        worst = std::max(worst, std::max(-ci.hi, ci.lo));
        rep.curve.push_back({retained[g][0], diff, ci.lo, ci.hi});
        rep.statistics.push_back(diff);
    }
    rep.curve_name = "lambda1,log_g_gap,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "g_t(l1,l2) vs g_t(l2-g, l1+g) paired at t=" + std::to_string(horizon) +
                  "; " + std::to_string(heavy) + " pairs excluded";
    return rep;
}

// ---------------------------------------------------------------------------
// SCGF estimation and the rate function

ScgfEstimate scgf_estimate(const CircleDiffusionModel& model, const SimulationConfig& config,
                           const std::vector<std::array<double, 2>>& lambda_grid,
                           const std::vector<double>& horizons) {
    if (horizons.size() < 3) throw ConfigError("scgf_estimate: need >= 3 horizons");
    for (std::size_t i = 0; i + 1 < horizons.size(); ++i)
        if (horizons[i] >= horizons[i + 1])
            throw ConfigError("scgf_estimate: horizons must increase");
    SimulationConfig cfg = config;
    cfg.horizon = horizons.back();
    const CountingBatch batch = simulate_counting_batch(model, cfg, horizons);

    ScgfEstimate est;
    est.lambda_grid = lambda_grid;
    est.horizons = horizons;
    const std::size_t n_h = horizons.size();
    const std::size_t n_g = lambda_grid.size();
    est.values.assign(n_g * n_h, 0.0);
    est.extrapolated.assign(n_g, 0.0);
    est.stderrs.assign(n_g, 0.0);
    est.flagged.assign(n_g, 0);

    const std::size_t n = cfg.n_paths;
    for (std::size_t g = 0; g < n_g; ++g) {
        const double l1 = lambda_grid[g][0];
        const double l2 = lambda_grid[g][1];
        ShiftedExp last_exp;
        for (std::size_t h = 0; h < n_h; ++h) {
            std::vector<double> args(n);
            for (std::size_t i = 0; i < n; ++i)
                args[i] = l1 * batch.plus_at(i, static_cast<std::uint32_t>(h)) +
                          l2 * batch.minus_at(i, static_cast<std::uint32_t>(h));
            ShiftedExp se = ShiftedExp::from_args(args);
            est.values[g * n_h + h] = se.log_mean() / horizons[h];
            if (h + 1 == n_h) last_exp = std::move(se);
        }
        est.flagged[g] = last_exp.rel_se > 0.5 ? 1 : 0;
        // bootstrap SE of the largest-horizon value
        std::vector<double> reps(256, 0.0);
        for_each_replicate(n, 256, cfg.master_seed, 7000 + g,
                           [&](int r, const std::vector<std::uint32_t>& idx) {
                               reps[r] = last_exp.log_mean_over(idx) / horizons.back();
                           });
        est.stderrs[g] = sample_sd(reps);
        // 1/t extrapolation by least squares
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t h = 0; h < n_h; ++h) {
            const double xh = 1.0 / horizons[h];
            const double yh = est.values[g * n_h + h];
            sx += xh;
            sy += yh;
            sxx += xh * xh;
            sxy += xh * yh;
        }
        const double m = static_cast<double>(n_h);
        const double denom = m * sxx - sx * sx;
        est.extrapolated[g] =
            denom != 0.0 ? (sy * sxx - sx * sxy) / denom : est.values[g * n_h + n_h - 1];
        if (l1 == 0.0 && l2 == 0.0) {
            for (std::size_t h = 0; h < n_h; ++h) est.values[g * n_h + h] = 0.0;
            est.extrapolated[g] = 0.0;
        }
    }
    return est;
}

RateFunctionEstimate rate_function_from_scgf(const std::vector<double>& lambda,
                                             const std::vector<double>& scgf_values,
                                             double gamma, int n_x) {
    if (lambda.size() != scgf_values.size() || lambda.size() < 3)
        throw Error("rate_function_from_scgf: need matching grids with >= 3 points");
    std::vector<std::size_t> order(lambda.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lambda[a] < lambda[b]; });

    // lower convex envelope (monotone chain on sorted points)
    std::vector<std::size_t> hull;
    auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
        const double ax = lambda[a], ay = scgf_values[a];
        const double bx = lambda[b], by = scgf_values[b];
        const double cx = lambda[c], cy = scgf_values[c];
        return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    };
    for (std::size_t oi : order) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), oi) <= 0.0)
            hull.pop_back();
        hull.push_back(oi);
    }

    RateFunctionEstimate out;
    out.lambda.reserve(hull.size());
    out.scgf.reserve(hull.size());
    for (std::size_t i : hull) {
        out.lambda.push_back(lambda[i]);
        out.scgf.push_back(scgf_values[i]);
    }
    double scale = 1e-12;
    for (double v : scgf_values) scale = std::max(scale, std::abs(v));
    out.convexified = hull.size() < lambda.size();

    // reliable slope range
    const std::size_t hn = out.lambda.size();
    if (hn < 2) throw Error("rate_function_from_scgf: SCGF degenerate after convexification");
    const double slope_lo =
        (out.scgf[1] - out.scgf[0]) / (out.lambda[1] - out.lambda[0]);
    const double slope_hi = (out.scgf[hn - 1] - out.scgf[hn - 2]) /
                            (out.lambda[hn - 1] - out.lambda[hn - 2]);
    const double span = slope_hi - slope_lo;
    out.x_lo = slope_lo + 0.02 * span;
    out.x_hi = slope_hi - 0.02 * span;

    auto rate_at = [&](double x) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < hn; ++i)
            best = std::max(best, out.lambda[i] * x - out.scgf[i]);
        return best;
    };

    out.x.resize(n_x);
    out.rate.resize(n_x);
    double best_rate = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_x; ++i) {
        const double x = out.x_lo + (out.x_hi - out.x_lo) * i / (n_x - 1.0);
        out.x[i] = x;
        out.rate[i] = rate_at(x);
        if (out.rate[i] < best_rate) {
            best_rate = out.rate[i];
            out.argmin_x = x;
        }
    }
    double res = 0.0;
    for (int i = 0; i < n_x; ++i) {
        const double x = out.x[i];
        if (-x < out.x_lo || -x > out.x_hi) continue;
        res = std::max(res, std::abs(out.rate[i] - rate_at(-x) + gamma * x));
    }
    out.gc_residual = res;
    return out;
}

// ---------------------------------------------------------------------------
// entropy production

EntropyEstimate entropy_production_estimate(const PathRecord& path,
                                            const CircleDiffusionModel& model,
                                            const StationarySolution& solution) {
    if (path.positions.size() < 2) throw Error("entropy estimate: path too short");
    const EntropyPotential pot(model, solution);
    const double t_end = path.times.back();
    if (!(t_end > 0.0)) throw Error("entropy estimate: zero horizon");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < path.positions.size(); ++i) {
        const double mid = 0.5 * (path.positions[i] + path.positions[i + 1]);
        acc += pot.derivative(mid) * (path.positions[i + 1] - path.positions[i]);
    }
    EntropyEstimate est;
    est.horizon = t_end;
    est.e_mid = acc / t_end;
    est.e_anti = (pot(path.positions.back()) - pot(path.positions.front())) / t_end;
    return est;
}

EntropyBatch entropy_from_counting(const CountingBatch& batch,
                                   const EntropyPotential& potential,
                                   const SimulationConfig& config) {
    if (batch.strat_sum.empty())
        throw Error("entropy_from_counting: batch lacks the Stratonovich accumulator");
    EntropyBatch out;
    out.horizon = batch.checkpoints.back();
    const std::size_t n = batch.x_final.size();
    out.e_mid.resize(n);
    out.e_anti.resize(n);
    out.j_gamma.resize(n);
    const std::uint32_t last = batch.n_checkpoints - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 =
            batch.start_points.empty() ? config.start_point : batch.start_points[i];
        out.e_mid[i] = batch.strat_sum[i] / out.horizon;
        out.e_anti[i] = (potential(batch.x_final[i]) - potential(x0)) / out.horizon;
        out.j_gamma[i] = static_cast<double>(batch.net_at(i, last)) * potential.gamma() /
                         out.horizon;
    }
    return out;
}

VerificationReport entropy_rate_symmetry_check(const std::vector<double>& t_times_e,
                                               double horizon, double gamma,
                                               std::vector<double> lambda_grid,
                                               const TestContext& ctx) {
    VerificationReport rep = base_report("entropy_rate_symmetry", ctx, t_times_e.size(), 0.0);
    rep.tolerance = 1.0 - ctx.ci_level;
    if (std::abs(gamma) < 1e-12) {
        rep.verdict = Verdict::pass;
        rep.p_value = -1.0;
        rep.details = "degenerate branch: gamma = 0 makes the entropy rate function "
                      "infinite off the origin; no numeric test";
        return rep;
    }
    if (t_times_e.size() < 1000) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "needs >= 1e3 samples";
        return rep;
    }
    std::vector<ShiftedExp> left, right;
    std::vector<double> retained;
    std::size_t heavy = 0;
    for (double l : lambda_grid) {
        std::vector<double> a1(t_times_e.size()), a2(t_times_e.size());
        for (std::size_t i = 0; i < t_times_e.size(); ++i) {
            a1[i] = l * t_times_e[i];
            a2[i] = (-l - 1.0) * t_times_e[i];
        }
        ShiftedExp e1 = ShiftedExp::from_args(a1);
        ShiftedExp e2 = ShiftedExp::from_args(a2);
        if (e1.rel_se > 0.5 || e2.rel_se > 0.5) {
            ++heavy;
            continue;
        }
        retained.push_back(l);
        left.push_back(std::move(e1));
        right.push_back(std::move(e2));
    }
    if (retained.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.details = "all lambda points heavy-tailed";
        return rep;
    }
    std::vector<std::vector<double>> reps(retained.size(),
                                          std::vector<double>(ctx.n_resamples, 0.0));
    for_each_replicate(t_times_e.size(), ctx.n_resamples, ctx.master_seed,
                       ctx.bootstrap_stream,
                       [&](int r, const std::vector<std::uint32_t>& idx) {
                           for (std::size_t g = 0; g < retained.size(); ++g)
                               reps[g][r] = left[g].log_mean_over(idx) -
                                            right[g].log_mean_over(idx);
                       });
    const double level = bonferroni_level(ctx.ci_level, retained.size());
    bool ok = true;
    double worst = 0.0;
    for (std::size_t g = 0; g < retained.size(); ++g) {
        const double diff = left[g].log_mean() - right[g].log_mean();
        const CiBounds ci = percentile_ci(reps[g], level);
        ok = ok && ci.lo <= 0.0 && 0.0 <= ci.hi;
        worst = std::max(worst, std::max(-ci.hi, ci.lo));
        rep.curve.push_back({retained[g], diff, ci.lo, ci.hi});
        rep.statistics.push_back(diff);
    }
    rep.curve_name = "lambda,log_gap,ci_lo,ci_hi";
    rep.margin = worst;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.details = "Lambda_E(l) vs Lambda_E(-l-1) paired at t=" + std::to_string(horizon) +
                  "; " + std::to_string(heavy) + " points excluded";
    return rep;
}

} // namespace circlesim
