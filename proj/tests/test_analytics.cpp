#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "circlesim/analytics.hpp"
#include "circlesim/model.hpp"

using namespace circlesim;

namespace {

// Independent oracle: composite Simpson with Richardson refinement, kept
// deliberately separate from the adaptive scheme in src/quadrature.cpp.
double simpson_oracle(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

CircleDiffusionModel random_fourier_model(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    std::uniform_real_distribution<double> c0(-0.5, 0.5);
    const auto drift = PeriodicCoefficient::fourier(c0(gen), {u(gen), u(gen)},
                                                    {u(gen), u(gen)});
    const auto sigma = PeriodicCoefficient::fourier(1.0, {0.25 * u(gen)}, {0.25 * u(gen)});
    return CircleDiffusionModel(drift, sigma);
}

} // namespace

TEST_CASE("potential closed forms") {
    CHECK(potential(make_constant_model(0.0, 1.0), 0.7) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(potential(make_constant_model(0.5, 1.0), 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
    // b = sin(2 pi x): U(1/2) = -2 int_0^{1/2} sin = -2/pi
    CHECK(potential(make_sine_model(), 0.5) ==
          doctest::Approx(-2.0 / M_PI).epsilon(1e-11));
}

TEST_CASE("scale function closed forms and an independent quadrature") {
    CHECK(scale_function(make_constant_model(0.0, 1.0), 0.3) ==
          doctest::Approx(0.3).epsilon(1e-12));
    CHECK(scale_function(make_constant_model(0.5, 1.0), 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    // sine model: s(1) = int_0^1 exp((cos(2 pi y) - 1)/pi) dy via Simpson
    auto integrand = [](double y) { return std::exp((std::cos(2 * M_PI * y) - 1.0) / M_PI); };
    const double oracle = simpson_oracle(integrand, 0.0, 1.0, 1 << 14);
    const double mine = scale_function(make_sine_model(), 1.0);
    CHECK(std::abs(mine - oracle) < 1e-10);
}

TEST_CASE("affinity closed forms") {
    CHECK(affinity(make_constant_model(0.5, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(affinity(make_sine_model()) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(affinity(make_shifted_sine_model(0.3)) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("stationary density: uniform cases") {
    for (const auto& m : {make_constant_model(0.0, 1.0), make_constant_model(0.5, 1.0)}) {
        const auto sol = stationary_density(m, 512);
        for (double r : sol.density) CHECK(r == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sol.normalization_residual < 1e-10);
        CHECK(std::abs(sol.density.front() - sol.density.back()) < 1e-8);
    }
    CHECK(stationary_density(make_constant_model(0.0, 1.0)).flux_constant ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(stationary_density(make_constant_model(0.5, 1.0)).flux_constant ==
          doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("stationary density: reversible sine model matches e^{-U}/Z") {
    const auto m = make_sine_model();
    const auto sol = stationary_density(m);
    CHECK(std::abs(sol.flux_constant) < 1e-12);
    // independent normalization via Simpson on e^{-U}, U = (cos(2 pi x) - 1)/pi
    auto unnorm = [](double x) { return std::exp(-(std::cos(2 * M_PI * x) - 1.0) / M_PI); };
    const double z = simpson_oracle(unnorm, 0.0, 1.0, 1 << 14);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.grid.size(); i += 7)
        worst = std::max(worst, std::abs(sol.density[i] - unnorm(sol.grid[i]) / z));
    CHECK(worst < 1e-8);
}

TEST_CASE("stationary equation residual by finite differences") {
    // (1/2)(a rho)'' - (b rho)' = 0 checked with 4th-order stencils
    for (const auto& m : {make_sine_model(), make_shifted_sine_model(0.3)}) {
        const auto sol = stationary_density(m);
        const std::size_t n = sol.grid.size() - 1;
        const double h = 1.0 / static_cast<double>(n);
        auto psi = [&](std::size_t i) { return sol.psi[i % n]; };
        auto brho = [&](std::size_t i) {
            return m.drift(sol.grid[i % n]) * sol.density[i % n];
        };
        double worst = 0.0, worst_flux = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + n;  // periodic indexing guard
            const double d2psi = (-psi(j - 2) + 16 * psi(j - 1) - 30 * psi(j) +
                                  16 * psi(j + 1) - psi(j + 2)) /
                                 (12 * h * h);
            const double dbrho =
                (brho(j - 2) - 8 * brho(j - 1) + 8 * brho(j + 1) - brho(j + 2)) / (12 * h);
            worst = std::max(worst, std::abs(0.5 * d2psi - dbrho));
            const double dpsi =
                (psi(j - 2) - 8 * psi(j - 1) + 8 * psi(j + 1) - psi(j + 2)) / (12 * h);
            worst_flux =
                std::max(worst_flux, std::abs(0.5 * dpsi - brho(j) - sol.flux_constant));
        }
        CHECK(worst < 1e-6);
        CHECK(worst_flux < 1e-6);
    }
}

TEST_CASE("net circulation and entropy production closed forms") {
    const auto m05 = make_constant_model(0.5, 1.0);
    const auto sol05 = stationary_density(m05);
    CHECK(net_circulation(m05, sol05) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(entropy_production_rate(m05) == doctest::Approx(0.5).epsilon(1e-9));

    const auto sine = make_sine_model();
    CHECK(net_circulation(sine, stationary_density(sine)) ==
          doctest::Approx(0.0).epsilon(1e-10));
    CHECK(entropy_production_rate(sine) == doctest::Approx(0.0).epsilon(1e-10));

    // b = c, sigma = s0: e = 2 c^2 / s0^2
    const auto m2 = make_constant_model(0.3, 0.8);
    CHECK(entropy_production_rate(m2) ==
          doctest::Approx(2.0 * 0.3 * 0.3 / (0.8 * 0.8)).epsilon(1e-9));
}

TEST_CASE("forward splitting probability") {
    CHECK(forward_splitting_probability(make_sine_model()) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(forward_splitting_probability(make_constant_model(0.5, 1.0)) ==
          doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));
}

TEST_CASE("time-reversed drift: flux form") {
    const auto zero = make_constant_model(0.0, 1.0);
    for (double v : time_reversed_drift(zero, stationary_density(zero)))
        CHECK(v == doctest::Approx(0.0).epsilon(1e-10));
    const auto m05 = make_constant_model(0.5, 1.0);
    for (double v : time_reversed_drift(m05, stationary_density(m05)))
        CHECK(v == doctest::Approx(-0.5).epsilon(1e-9));
    // reversible model: the reversed process has the same drift
    const auto sine = make_sine_model();
    const auto sol = stationary_density(sine);
    const auto rev = time_reversed_drift(sine, sol);
    for (std::size_t i = 0; i < sol.grid.size(); i += 11)
        CHECK(rev[i] == doctest::Approx(sine.drift(sol.grid[i])).epsilon(1e-8));
}

TEST_CASE("reversibility classification") {
    CHECK(classify_reversibility(make_constant_model(0.0, 1.0)).reversible);
    CHECK(classify_reversibility(make_sine_model()).reversible);
    CHECK_FALSE(classify_reversibility(make_constant_model(0.5, 1.0)).reversible);
}

TEST_CASE("randomized family: scale monotone, affinity = -U(1), equivalences") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_fourier_model(gen);
        const double g = affinity(m);
        CHECK(g == doctest::Approx(-potential(m, 1.0)).epsilon(1e-10));
        const auto sol = stationary_density(m, 1024);
        // scale strictly increasing
        for (std::size_t i = 0; i + 1 < sol.scale.size(); i += 37)
            CHECK(sol.scale[i] < sol.scale[i + 1]);
        // reversibility equivalences: |gamma| small <=> |J| small
        const auto rep = classify_reversibility(m);
        CHECK(rep.reversible == rep.net_circulation_zero);
        // entropy nonnegative; gamma and J share sign
        const double e = rep.net_circulation * rep.gamma;
        CHECK(e >= -1e-12);
        // density positive and normalized
        for (double r : sol.density) CHECK(r >= 0.0);
        CHECK(sol.normalization_residual < 1e-10);
    }
}

TEST_CASE("solution ownership is enforced") {
    const auto a = make_constant_model(0.5, 1.0);
    const auto b = make_sine_model();
    const auto sol = stationary_density(a);
    CHECK_THROWS_AS(net_circulation(b, sol), ModelError);
}

TEST_CASE("entropy potential: periodic increment gamma and flux identities") {
    const auto m = make_shifted_sine_model(0.3);
    const auto sol = stationary_density(m);
    const EntropyPotential pot(m, sol);
    const double g = affinity(m);
    for (double x : {-0.7, 0.1, 0.43, 2.2}) {
        CHECK(pot(x + 1.0) - pot(x) == doctest::Approx(g).epsilon(1e-8));
    }
    CHECK(pot(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    // reversible model: F' vanishes identically
    const auto sine = make_sine_model();
    const EntropyPotential pot0(sine, stationary_density(sine));
    for (double v : pot0.derivative_table()) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("stationary sampler matches the CDF") {
    const auto m = make_shifted_sine_model(0.3);
    const auto sol = stationary_density(m);
    const StationarySampler sampler(sol);
    // empirical CDF of deterministic stream vs trapezoid CDF
    const int n = 20000;
    int below_half = 0;
    for (int i = 0; i < n; ++i) {
        const double x = sampler.sample(11, static_cast<std::uint64_t>(i));
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        if (x <= 0.5) ++below_half;
    }
    double cdf_half = 0.0;
    for (std::size_t i = 0; i + 1 < sol.grid.size() && sol.grid[i + 1] <= 0.5; ++i)
        cdf_half += 0.5 * (sol.density[i] + sol.density[i + 1]) * (sol.grid[i + 1] - sol.grid[i]);
    CHECK(static_cast<double>(below_half) / n ==
          doctest::Approx(cdf_half).epsilon(0.03));
}
