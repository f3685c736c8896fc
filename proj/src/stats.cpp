#include "circlesim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "circlesim/errors.hpp"
#include "circlesim/rng.hpp"
#include "circlesim/simulate.hpp"

namespace circlesim {

namespace {

/// Tie-grouped KS statistic as an exact integer distance: returns
/// max |i*n2 - j*n1| over the merged walk; D = that / (n1*n2).
/// has_ties reports whether the pooled sample contains duplicates.
std::int64_t ks_distance_int(const std::vector<double>& a, const std::vector<double>& b,
                             bool& has_ties) {
    const std::int64_t n1 = static_cast<std::int64_t>(a.size());
    const std::int64_t n2 = static_cast<std::int64_t>(b.size());
    std::size_t i = 0, j = 0;
    std::int64_t best = 0;
    has_ties = false;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && (j >= b.size() || a[i] <= b[j]))
            v = a[i];
        else
            v = b[j];
        bool tie_between = false;
        if (i < a.size() && j < b.size() && a[i] == b[j]) tie_between = true;
        // consume every copy of v from both samples before measuring
        std::size_t di = 0, dj = 0;
        while (i + di < a.size() && a[i + di] == v) ++di;
        while (j + dj < b.size() && b[j + dj] == v) ++dj;
        if (di > 1 || dj > 1 || tie_between) has_ties = true;
        i += di;
        j += dj;
        const std::int64_t dist = std::llabs(static_cast<std::int64_t>(i) * n2 -
                                             static_cast<std::int64_t>(j) * n1);
        best = std::max(best, dist);
    }
    return best;
}

/// Exact conditional probability P(D >= d_obs) by counting monotone lattice
/// paths whose every vertex satisfies |i*n2 - j*n1| < d_int.
double ks_exact_pvalue(std::int64_t n1, std::int64_t n2, std::int64_t d_int) {
    if (d_int <= 0) return 1.0;
    const std::size_t m = static_cast<std::size_t>(n2);
    std::vector<double> dp(m + 1, 0.0);
    dp[0] = 1.0;
    double log_scale = 0.0;
    auto inside = [&](std::int64_t i, std::int64_t j) {
        return std::llabs(i * n2 - j * n1) < d_int;
    };
    for (std::int64_t i = 0; i <= n1; ++i) {
        if (i > 0) {
            for (std::int64_t j = 0; j <= n2; ++j)
                dp[j] = inside(i, j) ? dp[j] : 0.0;  // paths arriving from the left
        }
        for (std::int64_t j = 1; j <= n2; ++j) {
            if (inside(i, j))
                dp[j] += dp[j - 1];
            else
                dp[j] = 0.0;
        }
        double mx = 0.0;
        for (double v : dp) mx = std::max(mx, v);
        if (mx > 1e280) {
            for (double& v : dp) v *= 1e-280;
            log_scale += 280.0 * std::log(10.0);
        }
        if (mx == 0.0) return 1.0;  // no surviving path: P(D >= d) = 1
    }
    const double log_total = std::lgamma(static_cast<double>(n1 + n2 + 1)) -
                             std::lgamma(static_cast<double>(n1 + 1)) -
                             std::lgamma(static_cast<double>(n2 + 1));
    const double log_inside = std::log(dp[m]) + log_scale;
    const double p_inside = std::exp(log_inside - log_total);
    return std::clamp(1.0 - p_inside, 0.0, 1.0);
}

} // namespace

double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    bool has_ties = false;
    const std::int64_t d_int = ks_distance_int(a, b, has_ties);
    KsResult res;
    res.n1 = a.size();
    res.n2 = b.size();
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    res.statistic = static_cast<double>(d_int) / (n1 * n2);
    if (d_int == 0) {
        res.p_value = 1.0;
        res.exact = true;
        return res;
    }
    const double cells = n1 * n2;
    if (!has_ties && cells <= 1e8 && std::max(n1, n2) <= 1e4) {
        res.p_value = ks_exact_pvalue(static_cast<std::int64_t>(a.size()),
                                      static_cast<std::int64_t>(b.size()), d_int);
        res.exact = true;
    } else {
        const double ne = n1 * n2 / (n1 + n2);
        const double sq = std::sqrt(ne);
        res.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * res.statistic);
        res.exact = false;
    }
    return res;
}

namespace {

void resample_into(const std::vector<double>& sample, std::uint64_t seed,
                   std::uint64_t stream_id, std::uint64_t replicate,
                   std::vector<double>& out) {
    const std::uint64_t n = sample.size();
    out.resize(n);
    const std::uint64_t major = (stream_id << 24) ^ replicate;
    for (std::uint64_t d = 0; d < n; ++d)
        out[d] = sample[uniform_index(seed, RngDomain::bootstrap, major, d, n)];
}

BootstrapCi summarize_replicates(double point, std::vector<double> reps, double level) {
    BootstrapCi ci;
    ci.point = point;
    ci.n_resamples = static_cast<int>(reps.size());
    ci.se = sample_sd(reps);
    const double alpha = 1.0 - level;
    ci.lo = sample_quantile(reps, alpha / 2.0);
    ci.hi = sample_quantile(std::move(reps), 1.0 - alpha / 2.0);
    return ci;
}

} // namespace

std::vector<BootstrapCi> bootstrap_ci_multi(
    const std::vector<double>& sample,
    const std::vector<std::function<double(const std::vector<double>&)>>& statistics,
    int n_resamples, double level, std::uint64_t seed, std::uint64_t stream_id) {
    if (sample.empty()) throw Error("bootstrap: empty sample");
    const std::size_t n_stats = statistics.size();
    std::vector<std::vector<double>> reps(n_stats, std::vector<double>(n_resamples, 0.0));

    const int workers = std::max(1, std::min(worker_count(), n_resamples));
    std::vector<std::thread> pool;
    const int chunk = (n_resamples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int b = w * chunk;
        const int e = std::min(n_resamples, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            std::vector<double> buf;
            for (int r = b; r < e; ++r) {
                resample_into(sample, seed, stream_id, static_cast<std::uint64_t>(r), buf);
                for (std::size_t s = 0; s < n_stats; ++s) reps[s][r] = statistics[s](buf);
            }
        });
    }
    for (auto& t : pool) t.join();

    std::vector<BootstrapCi> out(n_stats);
    for (std::size_t s = 0; s < n_stats; ++s)
        out[s] = summarize_replicates(statistics[s](sample), std::move(reps[s]), level);
    return out;
}

BootstrapCi bootstrap_ci(const std::vector<double>& sample,
                         const std::function<double(const std::vector<double>&)>& statistic,
                         int n_resamples, double level, std::uint64_t seed,
                         std::uint64_t stream_id) {
    return bootstrap_ci_multi(sample, {statistic}, n_resamples, level, seed, stream_id)[0];
}

PermutationResult independence_permutation_test(const std::vector<double>& values,
                                                const std::vector<int>& labels,
                                                int n_resamples, std::uint64_t seed,
                                                std::uint64_t stream_id) {
    if (values.size() != labels.size() || values.empty())
        throw Error("permutation test: bad inputs");
    auto stat_of = [&](const std::vector<int>& lab) {
        double s_plus = 0.0, s_minus = 0.0;
        std::size_t n_plus = 0, n_minus = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (lab[i] > 0) {
                s_plus += values[i];
                ++n_plus;
            } else {
                s_minus += values[i];
                ++n_minus;
            }
        }
        if (n_plus == 0 || n_minus == 0) return 0.0;
        return std::abs(s_plus / n_plus - s_minus / n_minus);
    };
    PermutationResult res;
    res.statistic = stat_of(labels);
    res.n_resamples = n_resamples;
    std::vector<int> perm = labels;
    int exceed = 0;
    for (int r = 0; r < n_resamples; ++r) {
        const std::uint64_t major = (stream_id << 24) ^ static_cast<std::uint64_t>(r);
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            const std::uint64_t j =
                uniform_index(seed, RngDomain::permutation, major, i, i + 1);
            std::swap(perm[i], perm[j]);
        }
        if (stat_of(perm) >= res.statistic) ++exceed;
    }
    res.p_value = (1.0 + exceed) / (1.0 + n_resamples);
    return res;
}

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double sample_quantile(std::vector<double> v, double q) {
    if (v.empty()) throw Error("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(v.size() - 1, lo + 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] + t * (v[hi] - v[lo]);
}

} // namespace circlesim
