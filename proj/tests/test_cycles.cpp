#include <doctest.h>

#include <cmath>

#include "circlesim/cycles.hpp"

using namespace circlesim;

namespace {

PathRecord piecewise(const std::vector<double>& times, const std::vector<double>& xs) {
    PathRecord rec;
    rec.times = times;
    rec.positions = xs;
    return rec;
}

} // namespace

TEST_CASE("one steep segment produces multiple events") {
    const auto log = detect_cycle_events(piecewise({0.0, 2.5}, {0.0, 2.5}));
    REQUIRE(log.forming_times.size() == 2);
    CHECK(log.forming_times[0] == doctest::Approx(1.0));
    CHECK(log.forming_times[1] == doctest::Approx(2.0));
    CHECK(log.signs == std::vector<int>{1, 1});
    CHECK(log.plus_count() == 2);
    CHECK(log.minus_count() == 0);
    CHECK(log.net_count() == 2);
}

TEST_CASE("backward cycles") {
    const auto log = detect_cycle_events(piecewise({0.0, 2.0}, {0.0, -2.0}));
    REQUIRE(log.forming_times.size() == 2);
    CHECK(log.forming_times[0] == doctest::Approx(1.0));
    CHECK(log.forming_times[1] == doctest::Approx(2.0));
    CHECK(log.net_count() == -2);
}

TEST_CASE("a path that never moves one unit has no events") {
    const auto log =
        detect_cycle_events(piecewise({0.0, 1.0, 2.0}, {0.0, 0.9, -0.1}));
    CHECK(log.total_count() == 0);
    CHECK(log.net_count() == 0);
}

TEST_CASE("reset semantics keep the path inside the forming band") {
    // 0 -> 1 (event, ref 1) -> 0.5 -> 1.9 -> 2.1 (event at 2.0) -> ...
    const auto log = detect_cycle_events(
        piecewise({0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 1.0, 0.5, 1.9, 2.1}));
    REQUIRE(log.signs.size() == 2);
    CHECK(log.forming_times[0] == doctest::Approx(1.0));
    // second event when reaching 2.0 between t=3 (x=1.9) and t=4 (x=2.1)
    CHECK(log.forming_times[1] == doctest::Approx(3.5));
}

TEST_CASE("down-up wiggle inside the band does not fire") {
    const auto log = detect_cycle_events(
        piecewise({0.0, 1.0, 2.0, 3.0}, {0.0, -0.95, 0.95, -0.95}));
    CHECK(log.total_count() == 0);
}

TEST_CASE("empirical circulations") {
    const auto log = detect_cycle_events(piecewise({0.0, 2.5}, {0.0, 2.5}));
    const auto c = empirical_circulations(log);
    CHECK(c.j_plus == doctest::Approx(0.8));
    CHECK(c.j_minus == 0.0);
    CHECK(c.j_net == doctest::Approx(0.8));

    const auto empty = detect_cycle_events(piecewise({0.0, 10.0}, {0.0, 0.5}));
    const auto c0 = empirical_circulations(empty);
    CHECK(c0.j_plus == 0.0);
    CHECK(c0.j_net == 0.0);
}

TEST_CASE("renewal view pairs signs and gaps") {
    const auto log = detect_cycle_events(
        piecewise({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}));  // +1 at t=1, -1 at t=2
    const auto view = renewal_view(log);
    REQUIRE(view.valid);
    CHECK(view.signs == std::vector<int>{1, -1});
    CHECK(view.gaps[0] == doctest::Approx(1.0));
    CHECK(view.gaps[1] == doctest::Approx(1.0));

    const auto one = detect_cycle_events(piecewise({0.0, 1.0}, {0.0, 1.0}));
    CHECK_FALSE(renewal_view(one).valid);
}

TEST_CASE("empirical flow with xi_0 = +1 and its contraction") {
    const auto log = detect_cycle_events(piecewise({0.0, 2.5}, {0.0, 2.5}));
    const auto flow = empirical_flow(log);
    CHECK(flow.q[0][0] == doctest::Approx(2.0 / 2.5));
    CHECK(flow.q[0][1] == 0.0);
    CHECK(flow.q[1][0] == 0.0);
    CHECK(flow.q[1][1] == 0.0);
    const auto f = flow.contraction();
    const auto c = empirical_circulations(log);
    CHECK(f[0] == doctest::Approx(c.j_plus));
    CHECK(f[1] == doctest::Approx(c.j_minus));

    const auto empty = detect_cycle_events(piecewise({0.0, 5.0}, {0.0, 0.2}));
    const auto zero = empirical_flow(empty);
    CHECK(zero.q[0][0] == 0.0);
    CHECK(zero.q[1][1] == 0.0);
}

TEST_CASE("time rescaling scales forming times and keeps signs") {
    const auto base = piecewise({0.0, 1.0, 2.0, 3.0}, {0.0, 1.2, 0.1, 1.4});
    auto scaled = base;
    for (double& t : scaled.times) t *= 3.0;
    const auto la = detect_cycle_events(base);
    const auto lb = detect_cycle_events(scaled);
    REQUIRE(la.signs == lb.signs);
    for (std::size_t i = 0; i < la.forming_times.size(); ++i)
        CHECK(lb.forming_times[i] == doctest::Approx(3.0 * la.forming_times[i]));
}

TEST_CASE("net-count identity on simulated paths") {
    const auto m = make_constant_model(0.5, 1.0);
    SimulationConfig cfg;
    cfg.step_size = 1e-3;
    cfg.horizon = 20.0;
    cfg.n_paths = 8;
    cfg.master_seed = 3;
    for (std::uint64_t p = 0; p < cfg.n_paths; ++p) {
        const PathRecord rec = simulate_path(m, cfg, p);
        const auto log = detect_cycle_events(rec);
        // W_t equals the lifted displacement at the last forming time
        const double w = static_cast<double>(log.net_count());
        CHECK(std::abs(w - (rec.positions.back() - rec.positions.front())) <= 1.0 + 1e-9);
        // and the flow contraction reproduces the circulations exactly
        const auto f = empirical_flow(log).contraction();
        const auto c = empirical_circulations(log);
        CHECK(f[0] == doctest::Approx(c.j_plus).epsilon(1e-12));
        CHECK(f[1] == doctest::Approx(c.j_minus).epsilon(1e-12));
    }
}
