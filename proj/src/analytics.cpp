#include "circlesim/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "circlesim/quadrature.hpp"
#include "circlesim/rng.hpp"

namespace circlesim {

namespace {

double drift_over_a(const CircleDiffusionModel& m, double y) {
    const double s = m.sigma(y);
    return m.drift(y) / (s * s);
}

/// Pick a grid size that aligns panel boundaries with tabulated-coefficient
/// cells, so quadrature panels never straddle spline kinks.
int aligned_grid_size(const CircleDiffusionModel& m, int requested) {
    int n = requested;
    for (const auto* c : {&m.drift_coeff(), &m.diffusion_coeff()}) {
        if (c->kind() == CoeffKind::tabulated) {
            const int cells = static_cast<int>(c->table_values().size());
            const int mult = (n + cells - 1) / cells;
            n = std::max(n, cells * std::max(1, mult));
            if (n % cells != 0) n = cells * ((n / cells) + 1);
        }
    }
    return n;
}

struct GridSweep {
    std::vector<double> grid, u, s;
    double gamma;
};

/// Incremental U and s on a uniform grid. Outer panels are adaptive with a
/// per-panel budget; the inner potential increments inside one panel use a
/// single 15-point Gauss rule (panels are ~1/4096 wide, so that is far below
/// the budget for the smooth coefficient families).
GridSweep sweep_potential_scale(const CircleDiffusionModel& m, int n) {
    GridSweep out;
    out.grid.resize(n + 1);
    out.u.resize(n + 1);
    out.s.resize(n + 1);
    const double panel_tol = 1e-12 / n;
    out.u[0] = 0.0;
    out.s[0] = 0.0;
    for (int i = 0; i <= n; ++i) out.grid[i] = static_cast<double>(i) / n;
    for (int i = 0; i < n; ++i) {
        const double a = out.grid[i], b = out.grid[i + 1];
        const double du = integrate([&](double y) { return drift_over_a(m, y); }, a, b,
                                    std::max(panel_tol, 1e-16));
        const double u_a = out.u[i];
        const double ds = integrate(
            [&](double y) {
                const double inc = gauss15_panel(
                    [&](double z) { return drift_over_a(m, z); }, a, y);
                return std::exp(u_a - 2.0 * inc);
            },
            a, b, std::max(panel_tol, 1e-16));
        out.u[i + 1] = u_a - 2.0 * du;
        out.s[i + 1] = out.s[i] + ds;
    }
    out.gamma = -out.u[n];
    return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
    return acc;
}

void check_ownership(const CircleDiffusionModel& model, const StationarySolution& sol,
                     const char* op) {
    if (sol.model_hash != model.hash())
        throw ModelError(std::string(op) + ": solution does not belong to this model");
}

double hermite(double t, double h, double v0, double d0, double v1, double d1) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + (t3 - 2.0 * t2 + t) * h * d0 +
           (-2.0 * t3 + 3.0 * t2) * v1 + (t3 - t2) * h * d1;
}

} // namespace

double potential(const CircleDiffusionModel& model, double x, double abs_tol) {
    return -2.0 * integrate([&](double y) { return drift_over_a(model, y); }, 0.0, x, abs_tol);
}

double scale_function(const CircleDiffusionModel& model, double x, double abs_tol) {
    return integrate(
        [&](double y) { return std::exp(potential(model, y, abs_tol * 0.1)); }, 0.0, x,
        abs_tol);
}

double affinity(const CircleDiffusionModel& model) {
    return 2.0 * integrate([&](double y) { return drift_over_a(model, y); }, 0.0, 1.0, 1e-12);
}

StationarySolution stationary_density(const CircleDiffusionModel& model, int grid_size) {
    if (grid_size < 16) throw ModelError("stationary_density: grid_size must be >= 16");
    const int n = aligned_grid_size(model, grid_size);
    GridSweep sw = sweep_potential_scale(model, n);

    if (!(sw.s[n] > 0.0))
        throw ModelError("stationary_density: degenerate scale function (singular system)");

    // psi = e^{-U} (1 + 2 kappa s), provisional psi(0) = 1; periodicity fixes kappa.
    const double kappa_prov = std::expm1(-sw.gamma) / (2.0 * sw.s[n]);
    StationarySolution sol;
    sol.grid = sw.grid;
    sol.potential = sw.u;
    sol.scale = sw.s;
    sol.gamma = sw.gamma;
    sol.model_hash = model.hash();
    sol.psi.resize(n + 1);
    sol.density.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double psi = std::exp(-sw.u[i]) * (1.0 + 2.0 * kappa_prov * sw.s[i]);
        sol.psi[i] = psi;
        sol.density[i] = psi / model.diffusion_a(sw.grid[i]);
    }
    const double z = trapezoid(sol.grid, sol.density);
    if (!(z > 0.0)) throw ModelError("stationary_density: non-positive normalization");
    for (int i = 0; i <= n; ++i) {
        sol.psi[i] /= z;
        sol.density[i] = std::max(0.0, sol.density[i] / z);
    }
    sol.flux_constant = kappa_prov / z;
    sol.normalization_residual = std::abs(trapezoid(sol.grid, sol.density) - 1.0);
    return sol;
}

double net_circulation(const CircleDiffusionModel& model, const StationarySolution& sol) {
    check_ownership(model, sol, "net_circulation");
    std::vector<double> integrand(sol.grid.size());
    for (std::size_t i = 0; i < sol.grid.size(); ++i)
        integrand[i] = model.drift(sol.grid[i]) * sol.density[i];
    return trapezoid(sol.grid, integrand);
}

double entropy_production_rate(const CircleDiffusionModel& model,
                               const StationarySolution& sol) {
    return net_circulation(model, sol) * sol.gamma;
}

double entropy_production_rate(const CircleDiffusionModel& model) {
    const StationarySolution sol = stationary_density(model);
    return entropy_production_rate(model, sol);
}

double forward_splitting_probability(const CircleDiffusionModel& model) {
    const double g = affinity(model);
    // e^g / (1 + e^g), written to stay stable for large |g|
    return g >= 0.0 ? 1.0 / (1.0 + std::exp(-g)) : std::exp(g) / (1.0 + std::exp(g));
}

std::vector<double> time_reversed_drift(const CircleDiffusionModel& model,
                                        const StationarySolution& sol) {
    check_ownership(model, sol, "time_reversed_drift");
    std::vector<double> rev(sol.grid.size());
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        const double rho = sol.density[i];
        if (rho < 1e-14)
            throw DensityFloorError("time_reversed_drift: density below floor at x=" +
                                    std::to_string(sol.grid[i]));
        // -b + (a rho)'/rho with (a rho)' = 2 (kappa + b rho)
        rev[i] = model.drift(sol.grid[i]) + 2.0 * sol.flux_constant / rho;
    }
    return rev;
}

ReversibilityReport classify_reversibility(const CircleDiffusionModel& model) {
    ReversibilityReport rep;
    rep.gamma = affinity(model);
    rep.gamma_tolerance = 1e-10;
    rep.reversible = std::abs(rep.gamma) < rep.gamma_tolerance;
    const StationarySolution sol = stationary_density(model);
    rep.net_circulation = net_circulation(model, sol);
    double rho_max = 0.0;
    for (double r : sol.density) rho_max = std::max(rho_max, r);
    rep.circulation_tolerance = 1e-8 * std::max(1.0, model.drift_bound() * rho_max);
    rep.net_circulation_zero = std::abs(rep.net_circulation) < rep.circulation_tolerance;
    return rep;
}

ModelSummary summarize(const CircleDiffusionModel& model, int grid_size) {
    ModelSummary s;
    const StationarySolution sol = stationary_density(model, grid_size);
    s.affinity = sol.gamma;
    s.net_circulation = net_circulation(model, sol);
    s.entropy_production_rate = s.net_circulation * s.affinity;
    s.forward_splitting_probability = forward_splitting_probability(model);
    s.reversible = std::abs(s.affinity) < 1e-10;
    s.grid = sol.grid;
    s.potential = sol.potential;
    s.scale = sol.scale;
    s.density = sol.density;
    s.flux_constant = sol.flux_constant;
    s.model_hash = model.hash();
    return s;
}

// ---------------------------------------------------------------------------
// EntropyPotential

EntropyPotential::EntropyPotential(const CircleDiffusionModel& model,
                                   const StationarySolution& sol) {
    check_ownership(model, sol, "EntropyPotential");
    gamma_ = sol.gamma;
    n_ = static_cast<int>(sol.grid.size()) - 1;
    u_nodes_ = sol.potential;
    logpsi_nodes_.resize(n_ + 1);
    u_slope_.resize(n_ + 1);
    logpsi_slope_.resize(n_ + 1);
    fprime_nodes_.resize(n_);
    for (int i = 0; i <= n_; ++i) {
        const double x = sol.grid[i];
        const double b = model.drift(x);
        const double a = model.diffusion_a(x);
        const double psi = sol.psi[i];
        if (psi <= 0.0)
            throw DensityFloorError("EntropyPotential: a*rho not positive at x=" +
                                    std::to_string(x));
        logpsi_nodes_[i] = std::log(psi);
        u_slope_[i] = -2.0 * b / a;
        // (log psi)' = psi'/psi = 2 (kappa + b rho)/psi
        logpsi_slope_[i] = 2.0 * (sol.flux_constant + b * sol.density[i]) / psi;
        sup_2b_over_a_ = std::max(sup_2b_over_a_, std::abs(2.0 * b / a));
        sup_log_psi_ = std::max(sup_log_psi_, std::abs(logpsi_nodes_[i]));
        if (i < n_) fprime_nodes_[i] = 2.0 * b / a - logpsi_slope_[i];
    }
}

double EntropyPotential::operator()(double x_lifted) const {
    const double wind = std::floor(x_lifted);
    double frac = x_lifted - wind;
    if (frac >= 1.0) frac = 0.0;
    const double h = 1.0 / n_;
    int cell = static_cast<int>(std::floor(frac * n_));
    cell = std::min(cell, n_ - 1);
    const double t = frac * n_ - cell;
    const double u = hermite(t, h, u_nodes_[cell], u_slope_[cell], u_nodes_[cell + 1],
                             u_slope_[cell + 1]);
    const double lp = hermite(t, h, logpsi_nodes_[cell], logpsi_slope_[cell],
                              logpsi_nodes_[cell + 1], logpsi_slope_[cell + 1]);
    return -u + wind * gamma_ - lp + logpsi_nodes_[0];
}

double EntropyPotential::derivative(double x) const {
    double frac = vm::frac(x);
    if (frac >= 1.0) frac = 0.0;
    int cell = static_cast<int>(std::floor(frac * n_));
    cell = std::min(cell, n_ - 1);
    const double t = frac * n_ - cell;
    const double f0 = fprime_nodes_[cell];
    const double f1 = fprime_nodes_[(cell + 1) % n_];
    return f0 + t * (f1 - f0);
}

// ---------------------------------------------------------------------------
// StationarySampler

StationarySampler::StationarySampler(const StationarySolution& sol)
    : grid_(sol.grid), density_(sol.density) {
    cdf_.resize(grid_.size());
    cdf_[0] = 0.0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
        cdf_[i + 1] =
            cdf_[i] + 0.5 * (density_[i] + density_[i + 1]) * (grid_[i + 1] - grid_[i]);
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
}

double StationarySampler::sample_from_uniform(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::distance(cdf_.begin(), it) - 1));
    i = std::min(i, cdf_.size() - 2);
    const double h = grid_[i + 1] - grid_[i];
    const double target = u - cdf_[i];
    const double r0 = density_[i];
    const double slope = (density_[i + 1] - density_[i]) / h;
    // solve r0 t + slope t^2 / 2 = target on [0, h]
    double t;
    if (std::abs(slope) < 1e-12 * std::max(1.0, r0)) {
        t = r0 > 0.0 ? target / r0 : 0.5 * h;
    } else {
        const double disc = std::max(0.0, r0 * r0 + 2.0 * slope * target);
        t = (std::sqrt(disc) - r0) / slope;
    }
    t = std::clamp(t, 0.0, h);
    return grid_[i] + t;
}

double StationarySampler::sample(std::uint64_t seed, std::uint64_t path_index) const {
    return sample_from_uniform(uniform_stream(seed, RngDomain::start_sampling, path_index, 0));
}

} // namespace circlesim
