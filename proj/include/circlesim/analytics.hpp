#pragma once

#include <string>
#include <vector>

#include "circlesim/model.hpp"

namespace circlesim {

/// Stationary density of the circle diffusion, solved in the once-integrated
/// flux form. With psi = a*rho and U the potential,
///   psi(x) = e^{-U(x)} (psi(0) + 2 kappa s(x)),
/// where the flux constant kappa = (1/2)(a rho)' - b rho is fixed by
/// periodicity psi(1) = psi(0) and trapezoid normalization of rho.
struct StationarySolution {
    std::vector<double> grid;       // x_0 = 0, ..., x_N = 1
    std::vector<double> density;    // rho on the grid
    std::vector<double> psi;        // a * rho on the grid
    std::vector<double> potential;  // U on the grid
    std::vector<double> scale;      // s on the grid
    double flux_constant = 0.0;     // kappa
    double normalization_residual = 0.0;
    double gamma = 0.0;  // affinity, -U(1), kept for downstream consumers
    std::string model_hash;
};

struct ReversibilityReport {
    bool reversible = false;
    double gamma = 0.0;
    double net_circulation = 0.0;
    bool net_circulation_zero = false;  // |J| < tolerance cross-check
    double gamma_tolerance = 1e-10;
    double circulation_tolerance = 0.0;
};

struct ModelSummary {
    double affinity = 0.0;
    double net_circulation = 0.0;
    double entropy_production_rate = 0.0;
    double forward_splitting_probability = 0.0;
    bool reversible = false;
    std::vector<double> grid;
    std::vector<double> potential;
    std::vector<double> scale;
    std::vector<double> density;
    double flux_constant = 0.0;
    std::string model_hash;
};

/// U(x) = -2 * integral_0^x b/sigma^2; U(0) = 0.
double potential(const CircleDiffusionModel& model, double x, double abs_tol = 1e-12);

/// s(x) = integral_0^x e^{U}; strictly increasing, s(0) = 0.
double scale_function(const CircleDiffusionModel& model, double x, double abs_tol = 1e-12);

/// gamma = 2 * integral_0^1 b/sigma^2 = -U(1).
double affinity(const CircleDiffusionModel& model);

StationarySolution stationary_density(const CircleDiffusionModel& model, int grid_size = 4096);

/// Trapezoid integral of b * rho over the solution grid.
double net_circulation(const CircleDiffusionModel& model, const StationarySolution& solution);

double entropy_production_rate(const CircleDiffusionModel& model);
double entropy_production_rate(const CircleDiffusionModel& model,
                               const StationarySolution& solution);

/// e^gamma / (1 + e^gamma): P(forward cycle first) via the cycle-symmetry ratio.
double forward_splitting_probability(const CircleDiffusionModel& model);

/// Drift of the time-reversed stationary process on the solution grid,
/// evaluated flux-form as b + 2 kappa / rho (no numerical differentiation).
std::vector<double> time_reversed_drift(const CircleDiffusionModel& model,
                                        const StationarySolution& solution);

ReversibilityReport classify_reversibility(const CircleDiffusionModel& model);

ModelSummary summarize(const CircleDiffusionModel& model, int grid_size = 4096);

/// Machinery for the empirical entropy production rate:
///   F(x) = int_0^x 2b/a - log(a rho)(x) + log(a rho)(0),  F' periodic,
///   F(x + 1) - F(x) = gamma.
/// F is evaluated with cubic Hermite interpolation on the solution grid;
/// the F' node table feeds the simulation kernels' Stratonovich accumulator.
class EntropyPotential {
public:
    EntropyPotential(const CircleDiffusionModel& model, const StationarySolution& solution);

    double gamma() const { return gamma_; }
    double operator()(double x_lifted) const;  // F
    double derivative(double x) const;         // F', periodic
    /// Node values F'(i/n), i = 0..n-1, for the kernels' periodic table.
    const std::vector<double>& derivative_table() const { return fprime_nodes_; }
    double sup_2b_over_a() const { return sup_2b_over_a_; }
    double sup_log_psi() const { return sup_log_psi_; }

private:
    double gamma_;
    int n_;
    std::vector<double> u_nodes_, u_slope_;        // U and U' at nodes
    std::vector<double> logpsi_nodes_, logpsi_slope_;
    std::vector<double> fprime_nodes_;
    double sup_2b_over_a_ = 0.0;
    double sup_log_psi_ = 0.0;
};

/// Inverse-CDF sampler for stationary initial conditions.
class StationarySampler {
public:
    explicit StationarySampler(const StationarySolution& solution);
    /// Deterministic draw for (seed, path) from the start_sampling domain.
    double sample(std::uint64_t seed, std::uint64_t path_index) const;
    double sample_from_uniform(double u) const;

private:
    std::vector<double> grid_;
    std::vector<double> density_;
    std::vector<double> cdf_;
};

} // namespace circlesim
