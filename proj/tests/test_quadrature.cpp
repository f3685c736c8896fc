#include <doctest.h>

#include <cmath>

#include "circlesim/quadrature.hpp"

using namespace circlesim;

TEST_CASE("polynomials and smooth integrands at tight tolerance") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return std::sin(2.0 * M_PI * x); }, 0.0, 0.5) ==
          doctest::Approx(1.0 / M_PI).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
}

TEST_CASE("orientation and empty intervals") {
    CHECK(integrate([](double x) { return x; }, 1.0, 0.0) == doctest::Approx(-0.5));
    CHECK(integrate([](double) { return 5.0; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("kinked integrand still converges by subdivision") {
    const double v = integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-12);
    const double exact = 0.5 * (0.3 * 0.3 + 0.7 * 0.7);
    CHECK(v == doctest::Approx(exact).epsilon(1e-11));
}

TEST_CASE("oscillatory integrand over many periods") {
    const double v =
        integrate([](double x) { return std::cos(40.0 * M_PI * x); }, 0.0, 0.9875, 1e-12);
    const double exact = std::sin(40.0 * M_PI * 0.9875) / (40.0 * M_PI);
    CHECK(v == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("integrable singularity converges at loose tolerance") {
    const double v =
        integrate([](double x) { return 1.0 / std::sqrt(std::abs(x)); }, 1e-300, 1.0, 1e-9);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("borderline singular integrand still integrates") {
    // true value log(1e300) = 690.77552789821370521...
    const double v = integrate([](double x) { return 1.0 / x; }, 1e-300, 1.0, 1e-10);
    CHECK(v == doctest::Approx(690.77552789821371).epsilon(1e-12));
}

TEST_CASE("divergent integrand reports the achieved tolerance") {
    try {
        integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-12);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.achieved_tolerance > 1e-12);
    }
}

TEST_CASE("gauss15 panel is exact on low-degree polynomials") {
    CHECK(gauss15_panel([](double x) { return x * x * x; }, 0.0, 2.0) ==
          doctest::Approx(4.0).epsilon(1e-14));
}
