#include <doctest.h>

#include <cmath>
#include <random>

#include "circlesim/vecmath.hpp"

using namespace circlesim;

TEST_CASE("log_pos matches libm across the uniform range") {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> u(1e-17, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double x = u(gen);
        const double ref = std::log(x);
        const double got = vm::log_pos(x);
        worst = std::max(worst, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
    }
    CHECK(worst < 1e-15);
}

TEST_CASE("log_pos handles values above one") {
    for (double x : {1.0, 1.5, 2.0, 3.14159, 123.456, 1e6}) {
        CHECK(vm::log_pos(x) == doctest::Approx(std::log(x)).epsilon(1e-14));
    }
}

TEST_CASE("sincos_2pi_frac matches libm") {
    std::mt19937_64 gen(999);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double x = u(gen);
        double s, c;
        vm::sincos_2pi_frac(x, s, c);
        worst = std::max(worst, std::abs(s - std::sin(2.0 * M_PI * x)));
        worst = std::max(worst, std::abs(c - std::cos(2.0 * M_PI * x)));
    }
    CHECK(worst < 1.5e-15);
}

TEST_CASE("sincos_2pi_frac endpoints and quadrant boundaries") {
    double s, c;
    vm::sincos_2pi_frac(0.0, s, c);
    CHECK(s == 0.0);
    CHECK(c == 1.0);
    vm::sincos_2pi_frac(0.25, s, c);
    CHECK(s == 1.0);
    CHECK(c == doctest::Approx(0.0).epsilon(1e-16));
    vm::sincos_2pi_frac(0.5, s, c);
    CHECK(s == doctest::Approx(0.0).epsilon(1e-16));
    CHECK(c == -1.0);
    vm::sincos_2pi_frac(1.0, s, c);  // wraps to 0
    CHECK(s == 0.0);
    CHECK(c == 1.0);
}

TEST_CASE("normal transform has sane moments") {
    // deterministic grid of uniform pairs
    double m1 = 0.0, m2 = 0.0;
    int n = 0;
    for (int i = 1; i < 1000; ++i) {
        for (int j = 1; j < 1000; j += 7) {
            const double z =
                vm::normal_from_uniforms(i / 1000.0, j / 1000.0);
            m1 += z;
            m2 += z * z;
            ++n;
        }
    }
    m1 /= n;
    m2 /= n;
    CHECK(std::abs(m1) < 0.02);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
}
