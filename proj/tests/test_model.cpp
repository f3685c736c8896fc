#include <doctest.h>

#include <cmath>

#include "circlesim/model.hpp"

using namespace circlesim;

TEST_CASE("fourier evaluation matches libm") {
    const auto c = PeriodicCoefficient::fourier(0.3, {0.5, -0.2}, {0.1, 0.4});
    for (int i = 0; i < 400; ++i) {
        const double x = -2.0 + i * 0.01;
        const double ref = 0.3 + 0.5 * std::cos(2 * M_PI * x) - 0.2 * std::cos(4 * M_PI * x) +
                           0.1 * std::sin(2 * M_PI * x) + 0.4 * std::sin(4 * M_PI * x);
        CHECK(c(x) == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("tabulated coefficients reproduce smooth samples") {
    std::vector<double> vals(64);
    auto f = [](double x) { return 1.0 + 0.3 * std::sin(2 * M_PI * x); };
    for (int i = 0; i < 64; ++i) vals[i] = f(i / 64.0);
    const auto lin = PeriodicCoefficient::tabulated(vals, 1);
    const auto cub = PeriodicCoefficient::tabulated(vals, 3);
    double worst_lin = 0.0, worst_cub = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = i / 1000.0;
        worst_lin = std::max(worst_lin, std::abs(lin(x) - f(x)));
        worst_cub = std::max(worst_cub, std::abs(cub(x) - f(x)));
    }
    CHECK(worst_lin < 2e-3);
    CHECK(worst_cub < 2e-6);
    // exact at the nodes, periodic continuation
    CHECK(cub(0.0) == doctest::Approx(vals[0]).epsilon(1e-12));
    CHECK(cub(1.0 + 1.0 / 64.0) == doctest::Approx(vals[1]).epsilon(1e-9));
}

TEST_CASE("model JSON round trip preserves the hash") {
    const auto m = CircleDiffusionModel(
        PeriodicCoefficient::fourier(0.3, {0.0}, {1.0}),
        PeriodicCoefficient::fourier(1.0, {0.1}, {}));
    const auto m2 = CircleDiffusionModel::from_json_string(m.to_json_string());
    CHECK(m.hash() == m2.hash());
    CHECK(m.drift(0.37) == m2.drift(0.37));
    CHECK(m.sigma(0.81) == m2.sigma(0.81));
}

TEST_CASE("validation rejects bad models") {
    CHECK_THROWS_AS(make_constant_model(0.0, 0.0), ModelError);
    CHECK_THROWS_AS(make_constant_model(0.0, -1.0), ModelError);
    // diffusion dipping to zero inside the period
    CHECK_THROWS_AS(CircleDiffusionModel(PeriodicCoefficient::constant(0.0),
                                         PeriodicCoefficient::fourier(0.5, {0.6}, {})),
                    ModelError);
    CHECK_THROWS_AS(CircleDiffusionModel::from_json_string("{\"drift\": {\"type\":"
                                                           "\"fourier\", \"c0\": 0}}"),
                    ModelError);
    CHECK_THROWS_AS(CircleDiffusionModel::from_json_string("not json"), ModelError);
    CHECK_THROWS_AS(PeriodicCoefficient::tabulated({1.0, 2.0}, 1), ModelError);
    CHECK_THROWS_AS(PeriodicCoefficient::tabulated({1, 1, 1, 1}, 2), ModelError);
}

TEST_CASE("periodicity holds to 1e-12 on the validation grid") {
    const auto m = make_shifted_sine_model(0.3);
    for (int i = 0; i < 100; ++i) {
        const double x = i / 100.0;
        CHECK(std::abs(m.drift(x + 1.0) - m.drift(x)) < 1e-12);
    }
}

TEST_CASE("sigma bounds are recorded") {
    const auto m = CircleDiffusionModel(PeriodicCoefficient::constant(0.0),
                                        PeriodicCoefficient::fourier(1.0, {0.5}, {}));
    CHECK(m.sigma_min() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m.sigma_max() == doctest::Approx(1.5).epsilon(1e-6));
}
