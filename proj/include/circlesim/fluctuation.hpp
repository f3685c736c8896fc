#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "circlesim/analytics.hpp"
#include "circlesim/simulate.hpp"
#include "circlesim/verification.hpp"

namespace circlesim {

/// Shared options and provenance for the statistical tests. The tests are
/// deterministic in (master_seed, bootstrap_stream).
struct TestContext {
    std::string model_hash;
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::uint64_t bootstrap_stream = 0;
    int n_resamples = 1000;
    double ci_level = 0.99;
    double alpha = 0.01;
};

// --- cycle-symmetry family (first-cycle samples) ---------------------------

/// Two-sample KS between forward- and backward-conditioned forming times.
VerificationReport cycle_symmetry_test(const std::vector<FirstCycleSample>& samples,
                                       const TestContext& ctx);

/// P(T <= u, +) / P(T <= u, -) compared with e^gamma on a u grid
/// (log scale, bootstrap CIs, Bonferroni across usable grid points).
VerificationReport ratio_curve_test(const std::vector<FirstCycleSample>& samples,
                                    const std::vector<double>& u_grid, double gamma,
                                    const TestContext& ctx);

/// Permutation test of independence between T and the cycle sign.
VerificationReport independence_test(const std::vector<FirstCycleSample>& samples,
                                     const TestContext& ctx);

// --- fluctuation theorems (cycle counts at one horizon) --------------------

VerificationReport transient_ft_test(const std::vector<std::int64_t>& net_counts,
                                     double gamma, double horizon, const TestContext& ctx);

VerificationReport kls_ft_test(const std::vector<std::int64_t>& net_counts, double gamma,
                               std::vector<double> lambda_grid, double horizon,
                               const TestContext& ctx);

VerificationReport integral_ft_test(const std::vector<std::int64_t>& net_counts,
                                    double gamma, double horizon, const TestContext& ctx);

VerificationReport joint_count_symmetry_test(
    const std::vector<std::array<std::uint32_t, 2>>& count_pairs, double gamma,
    double horizon, const TestContext& ctx);

/// Finite-t symmetry g_t(l1,l2) = g_t(l2-gamma, l1+gamma), paired means.
VerificationReport scgf_symmetry_test(
    const std::vector<std::array<std::uint32_t, 2>>& count_pairs, double gamma,
    const std::vector<std::array<double, 2>>& lambda_pairs, double horizon,
    const TestContext& ctx);

// --- SCGF and rate function -------------------------------------------------

struct ScgfEstimate {
    std::vector<std::array<double, 2>> lambda_grid;  // (lambda1, lambda2)
    std::vector<double> horizons;
    std::vector<double> values;        // [g * n_horizons + h], (1/t) log mean
    std::vector<double> extrapolated;  // 1/t -> 0 intercept per grid point
    std::vector<double> stderrs;       // bootstrap SE at the largest horizon
    std::vector<char> flagged;         // relative SE of the mean > 0.5

    double value_at(std::size_t g, std::size_t h) const {
        return values[g * horizons.size() + h];
    }
};

ScgfEstimate scgf_estimate(const CircleDiffusionModel& model, const SimulationConfig& config,
                           const std::vector<std::array<double, 2>>& lambda_grid,
                           const std::vector<double>& horizons);

struct RateFunctionEstimate {
    std::vector<double> lambda;
    std::vector<double> scgf;  // after convex repair
    bool convexified = false;
    std::vector<double> x;
    std::vector<double> rate;       // I(x) on the reliable range
    double x_lo = 0.0, x_hi = 0.0;  // reliable slope range
    double argmin_x = 0.0;          // zero-rate point (law of large numbers value)
    double gc_residual = 0.0;       // max |I(x) - I(-x) + gamma x| over the probe range
};

/// Numerical Legendre-Fenchel transform of a scalar SCGF sampled on a grid.
/// The grid should be symmetric under lambda -> -gamma - lambda for the
/// Gallavotti-Cohen residual to be meaningful at machine precision.
RateFunctionEstimate rate_function_from_scgf(const std::vector<double>& lambda,
                                             const std::vector<double>& scgf_values,
                                             double gamma, int n_x = 201);

// --- entropy production ------------------------------------------------------

struct EntropyEstimate {
    double e_mid = 0.0;   // midpoint (Stratonovich) discretization
    double e_anti = 0.0;  // antiderivative form (1/t)(F(X_t) - F(X_0))
    double horizon = 0.0;
};

EntropyEstimate entropy_production_estimate(const PathRecord& path,
                                            const CircleDiffusionModel& model,
                                            const StationarySolution& solution);

struct EntropyBatch {
    std::vector<double> e_mid;
    std::vector<double> e_anti;
    std::vector<double> j_gamma;  // J_t * gamma per path
    double horizon = 0.0;
};

/// Per-path entropy estimates from a counting batch that carried the
/// Stratonovich accumulator and stationary starts.
EntropyBatch entropy_from_counting(const CountingBatch& batch,
                                   const EntropyPotential& potential,
                                   const SimulationConfig& config);

/// Checks Lambda_E(lambda) = Lambda_E(-lambda - 1) from samples of t * E_t.
/// gamma == 0 reports the degenerate branch without a numeric test.
VerificationReport entropy_rate_symmetry_check(const std::vector<double>& t_times_e,
                                               double horizon, double gamma,
                                               std::vector<double> lambda_grid,
                                               const TestContext& ctx);

/// Stable log(mean(exp(v))).
double log_mean_exp(const std::vector<double>& v);

} // namespace circlesim
