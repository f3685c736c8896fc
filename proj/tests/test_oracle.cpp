#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "circlesim/analytics.hpp"
#include "circlesim/fluctuation.hpp"
#include "circlesim/oracle.hpp"

using namespace circlesim;
using namespace circlesim::oracle;

namespace {

RingChain symmetric_chain() {
    RingChain c;
    c.n_sites = 4;
    c.p = {1.0, 2.0, 0.5, 1.5};
    c.q = {1.0, 2.0, 0.5, 1.5};
    return c;
}

RingChain asymmetric3() {
    RingChain c;
    c.n_sites = 3;
    c.p = {2.0, 1.0, 1.5};
    c.q = {0.7, 1.3, 0.9};
    return c;
}

RingChain random_chain(std::mt19937_64& gen, int n) {
    std::uniform_real_distribution<double> u(0.4, 2.5);
    RingChain c;
    c.n_sites = n;
    for (int i = 0; i < n; ++i) {
        c.p.push_back(u(gen));
        c.q.push_back(u(gen));
    }
    return c;
}

} // namespace

TEST_CASE("chain validation and JSON round trip") {
    CHECK_THROWS_AS(RingChain{}.validate(), OracleError);
    RingChain bad = asymmetric3();
    bad.q[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), OracleError);
    const RingChain c = asymmetric3();
    const RingChain c2 = RingChain::from_json_string(c.to_json_string());
    CHECK(c2.n_sites == 3);
    CHECK(c2.p == c.p);
    CHECK(c2.q == c.q);
}

TEST_CASE("splitting probability: symmetry and the rate-product ratio") {
    CHECK(splitting_probability_exact(symmetric_chain(), 0) == doctest::Approx(0.5).epsilon(1e-12));
    const RingChain c = asymmetric3();
    double prod = 1.0;
    for (int i = 0; i < 3; ++i) prod *= c.p[i] / c.q[i];
    for (int start = 0; start < 3; ++start) {
        const double pp = splitting_probability_exact(c, start);
        CHECK(pp / (1.0 - pp) == doctest::Approx(prod).epsilon(1e-12));
    }
}

TEST_CASE("conditional laws coincide: the discrete cycle symmetry") {
    const std::vector<double> grid = {0.2, 0.5, 1.0, 2.0, 4.0, 8.0};
    {
        const auto law = conditional_first_passage_law(symmetric_chain(), 0, grid);
        CHECK(law.max_gap < 1e-12);
    }
    {
        const std::vector<double> wide = {0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 40.0};
        const auto law = conditional_first_passage_law(asymmetric3(), 0, wide);
        CHECK(law.p_plus != doctest::Approx(0.5));  // asymmetric splitting...
        CHECK(law.max_gap < 1e-10);                 // ...yet identical conditional laws
        CHECK(law.cdf_plus.front() >= 0.0);
        CHECK(law.cdf_plus.back() > 0.99);  // CDF approaches 1
        for (std::size_t i = 1; i < law.cdf_plus.size(); ++i)
            CHECK(law.cdf_plus[i] >= law.cdf_plus[i - 1]);
    }
    {
        // CDF(0) = 0
        const auto law = conditional_first_passage_law(asymmetric3(), 0, {0.0, 6.0});
        CHECK(law.cdf_plus[0] == 0.0);
        CHECK(law.cdf_minus[0] == 0.0);
    }
}

TEST_CASE("winding law: symmetry, transient FT, integral FT, mass") {
    {
        const auto d = winding_distribution_exact(symmetric_chain(), 0, 2.0, 10);
        for (int k = 1; k <= d.k_max; ++k)
            CHECK(d.at(k) == doctest::Approx(d.at(-k)).epsilon(1e-10));
    }
    const RingChain c = asymmetric3();
    const double gamma_d = c.affinity();
    const auto d = winding_distribution_exact(c, 0, 2.0, 12);
    double mass = 0.0, integral = 0.0, worst = 0.0;
    for (int k = -d.k_max; k <= d.k_max; ++k) {
        mass += d.at(k);
        integral += std::exp(-gamma_d * k) * d.at(k);
        if (k >= 1 && d.at(k) > 1e-60 && d.at(-k) > 1e-60)
            worst = std::max(worst,
                             std::abs(std::log(d.at(k) / d.at(-k)) - gamma_d * k));
    }
    CHECK(std::abs(mass - 1.0) < 1e-11);
    CHECK(worst < 1e-8);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tilted SCGF: zero at origin, Gallavotti-Cohen symmetry") {
    const RingChain c = asymmetric3();
    CHECK(std::abs(tilted_scgf_exact(c, 0.0)) < 1e-11);
    const double g = c.affinity();
    for (double delta : {0.3, 0.8, 1.7}) {
        const double a = tilted_scgf_exact(c, -g / 2 + delta);
        const double b = tilted_scgf_exact(c, -g / 2 - delta);
        CHECK(std::abs(a - b) < 1e-10);
    }
    // symmetric chain: even in lambda
    const RingChain s = symmetric_chain();
    CHECK(tilted_scgf_exact(s, 0.7) == doctest::Approx(tilted_scgf_exact(s, -0.7)).epsilon(1e-10));
}

TEST_CASE("randomized chains satisfy the discrete symmetry to 1e-10") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        const RingChain c = random_chain(gen, 3 + trial % 5);
        const double g = c.affinity();
        const double a = tilted_scgf_exact(c, -g / 2 + 0.5);
        const double b = tilted_scgf_exact(c, -g / 2 - 0.5);
        CHECK(std::abs(a - b) < 1e-10);
    }
}

TEST_CASE("Legendre transform of the exact SCGF obeys the I2 symmetry") {
    const RingChain c = asymmetric3();
    const double g = c.affinity();
    std::vector<double> lam, val;
    for (int i = -20; i <= 20; ++i) {
        lam.push_back(-g / 2 + 0.15 * i);
        val.push_back(tilted_scgf_exact(c, lam.back()));
    }
    const auto rf = rate_function_from_scgf(lam, val, g);
    CHECK(rf.gc_residual < 1e-8);
    CHECK_FALSE(rf.convexified);
    // zero-rate point sits at the mean winding rate Lambda'(0)
    const double h = 1e-5;
    const double j_ring =
        (tilted_scgf_exact(c, h) - tilted_scgf_exact(c, -h)) / (2.0 * h);
    CHECK(rf.argmin_x == doctest::Approx(j_ring).epsilon(0.05));
    // and the rate vanishes there
    double rate_at_min = 1e9;
    for (std::size_t i = 0; i < rf.x.size(); ++i)
        rate_at_min = std::min(rate_at_min, rf.rate[i]);
    CHECK(rate_at_min < 1e-6);
}

TEST_CASE("Gillespie sampler reproduces the exact winding law") {
    const RingChain c = asymmetric3();
    const double t = 1.5;
    const auto exact = winding_distribution_exact(c, 0, t, 10);
    const std::uint64_t n = 40000;
    const auto sim = simulate_winding_gillespie(c, 0, t, 99, n);
    // compare frequencies within 5 sigma multinomial bands
    std::map<int, int> counts;
    for (int k : sim) ++counts[k];
    for (int k = -3; k <= 4; ++k) {
        const double p = exact.at(k);
        if (p < 5e-4) continue;
        const double freq = counts.count(k) ? counts[k] / static_cast<double>(n) : 0.0;
        const double se = std::sqrt(p * (1.0 - p) / n);
        INFO("k=", k, " freq=", freq, " p=", p);
        CHECK(std::abs(freq - p) < 5.0 * se);
    }
    // determinism
    const auto sim2 = simulate_winding_gillespie(c, 0, t, 99, 100);
    const auto sim3 = simulate_winding_gillespie(c, 0, t, 99, 100);
    CHECK(sim2 == sim3);
}

TEST_CASE("diffusion bridge: affinity and splitting converge to the diffusion") {
    const auto model = make_shifted_sine_model(0.3);
    const double gamma_diff = affinity(model);
    const double p_diff = forward_splitting_probability(model);
    double prev_gamma_err = 1e9, prev_p_err = 1e9;
    for (int n : {16, 32, 64}) {
        const RingChain c = ring_from_model(model, n);
        const double gamma_err = std::abs(c.affinity() - gamma_diff);
        const double p = splitting_probability_exact(c, 0);
        const double p_err = std::abs(p - p_diff);
        CHECK(gamma_err < prev_gamma_err + 1e-12);
        CHECK(p_err <= prev_p_err * 0.7 + 1e-9);
        prev_gamma_err = gamma_err;
        prev_p_err = p_err;
    }
    // fine mesh lands close
    const RingChain fine = ring_from_model(model, 256);
    CHECK(std::abs(splitting_probability_exact(fine, 0) - p_diff) < 2e-4);
    CHECK(std::abs(fine.affinity() - gamma_diff) < 1e-3);
}

TEST_CASE("bridge for the constant-drift model reaches e/(1+e)") {
    const auto model = make_constant_model(0.5, 1.0);
    const double target = std::exp(1.0) / (1.0 + std::exp(1.0));
    const double p64 = splitting_probability_exact(ring_from_model(model, 64), 0);
    const double p128 = splitting_probability_exact(ring_from_model(model, 128), 0);
    const double p256 = splitting_probability_exact(ring_from_model(model, 256), 0);
    CHECK(std::abs(p256 - target) < std::abs(p64 - target) + 1e-12);
    // Richardson extrapolation assuming O(h^2)
    const double extr = p256 + (p256 - p128) / 3.0;
    CHECK(extr == doctest::Approx(target).epsilon(5e-6));
    CHECK(std::abs(p256 - target) < 5e-5);
}

TEST_CASE("per-cycle tilt normalization: uniform ring closed form") {
    RingChain c;
    c.n_sites = 3;
    c.p = {2.0, 2.0, 2.0};
    c.q = {0.5, 0.5, 0.5};
    // Lambda(lambda) = p e^{lambda/n} + q e^{-lambda/n} - (p + q)
    for (double l : {-1.0, 0.4, 2.0}) {
        const double expect =
            2.0 * std::exp(l / 3.0) + 0.5 * std::exp(-l / 3.0) - 2.5;
        CHECK(tilted_scgf_exact(c, l) == doctest::Approx(expect).epsilon(1e-11));
    }
}
