#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace circlesim {

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0, n2 = 0;
    bool exact = false;
};

/// Two-sample Kolmogorov-Smirnov test. Exact conditional p-value (lattice
/// path count) when n1*n2 <= 1e8 and the pooled sample is tie-free;
/// asymptotic Kolmogorov distribution with the small-sample correction
/// otherwise. Ties are grouped when computing the statistic.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov survival function Q(lambda).
double kolmogorov_q(double lambda);

struct BootstrapCi {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double se = 0.0;
    int n_resamples = 0;
};

/// Percentile bootstrap for a statistic of one sample. The statistic
/// receives the resampled values. Resampling is deterministic in
/// (seed, stream_id, replicate).
BootstrapCi bootstrap_ci(const std::vector<double>& sample,
                         const std::function<double(const std::vector<double>&)>& statistic,
                         int n_resamples, double level, std::uint64_t seed,
                         std::uint64_t stream_id);

/// Paired percentile bootstrap: several statistics evaluated on the same
/// resampled index sets (needed when comparing transforms of one sample).
/// Returns one CI per statistic. Statistics receive the resampled values.
std::vector<BootstrapCi> bootstrap_ci_multi(
    const std::vector<double>& sample,
    const std::vector<std::function<double(const std::vector<double>&)>>& statistics,
    int n_resamples, double level, std::uint64_t seed, std::uint64_t stream_id);

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n_resamples = 0;
};

/// Permutation test of independence between a binary label and a real
/// value: statistic is |mean(value | label=+1) - mean(value | label=-1)|,
/// labels are resampled by Fisher-Yates shuffles.
PermutationResult independence_permutation_test(const std::vector<double>& values,
                                                const std::vector<int>& labels,
                                                int n_resamples, std::uint64_t seed,
                                                std::uint64_t stream_id);

double sample_mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);
double sample_quantile(std::vector<double> v, double q);  // sorts a copy

} // namespace circlesim
