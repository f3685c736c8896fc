#include <doctest.h>

#include <cmath>

#include "circlesim/cycles.hpp"
#include "circlesim/fluctuation.hpp"
#include "circlesim/oracle.hpp"
#include "circlesim/stats.hpp"

using namespace circlesim;

namespace {

TestContext ctx_of(std::uint64_t seed, std::uint64_t stream) {
    TestContext ctx;
    ctx.model_hash = "test";
    ctx.config_digest = "test";
    ctx.master_seed = seed;
    ctx.bootstrap_stream = stream;
    ctx.n_resamples = 400;
    return ctx;
}

/// Shared reduced-scale batch for the count-based tests: b = 0.5, sigma = 1,
/// t = 2.5, dt = 1e-3, 30000 paths.
const CountingBatch& shared_batch() {
    static const CountingBatch batch = [] {
        const auto m = make_constant_model(0.5, 1.0);
        SimulationConfig cfg;
        cfg.step_size = 1e-3;
        cfg.horizon = 2.5;
        cfg.n_paths = 30000;
        cfg.master_seed = 314;
        return simulate_counting_batch(m, cfg, {1.0, 2.5});
    }();
    return batch;
}

std::vector<std::int64_t> shared_net(std::uint32_t checkpoint) {
    const auto& b = shared_batch();
    std::vector<std::int64_t> w(b.x_final.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = b.net_at(i, checkpoint);
    return w;
}

std::vector<std::array<std::uint32_t, 2>> shared_pairs(std::uint32_t checkpoint) {
    const auto& b = shared_batch();
    std::vector<std::array<std::uint32_t, 2>> p(b.x_final.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = {b.plus_at(i, checkpoint), b.minus_at(i, checkpoint)};
    return p;
}

const std::vector<FirstCycleSample>& shared_first_cycle() {
    static const std::vector<FirstCycleSample> samples = [] {
        const auto m = make_constant_model(0.5, 1.0);
        SimulationConfig cfg;
        cfg.step_size = 1e-3;
        cfg.until_first_cycle = true;
        cfg.n_paths = 30000;
        cfg.master_seed = 2718;
        return simulate_first_cycle_batch(m, cfg);
    }();
    return samples;
}

} // namespace

TEST_CASE("cycle symmetry: drifted and symmetric models pass") {
    const auto rep = cycle_symmetry_test(shared_first_cycle(), ctx_of(1, 1));
    INFO(rep.details, " p=", rep.p_value);
    CHECK(rep.verdict == Verdict::pass);

    // identical sample sets -> D = 0, p = 1 (fed directly)
    std::vector<FirstCycleSample> twin;
    for (int i = 0; i < 1500; ++i) {
        twin.push_back({0.1 * (i % 97) + 0.05, +1, false});
        twin.push_back({0.1 * (i % 97) + 0.05, -1, false});
    }
    const auto rep2 = cycle_symmetry_test(twin, ctx_of(1, 2));
    CHECK(rep2.p_value == 1.0);
    CHECK(rep2.verdict == Verdict::pass);
}

TEST_CASE("cycle symmetry: too few samples is inconclusive") {
    std::vector<FirstCycleSample> tiny(100, FirstCycleSample{1.0, 1, false});
    CHECK(cycle_symmetry_test(tiny, ctx_of(1, 3)).verdict == Verdict::inconclusive);
}

TEST_CASE("ratio curve sits at gamma for the drifted model") {
    const auto rep = ratio_curve_test(shared_first_cycle(), {0.25, 0.5, 0.75, 1.0, 1.5, 2.0},
                                      1.0, ctx_of(4, 4));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.curve.size() >= 4);
    for (const auto& row : rep.curve) CHECK(std::abs(row[1] - 1.0) < 0.2);
}

TEST_CASE("independence of T and the sign") {
    const auto rep = independence_test(shared_first_cycle(), ctx_of(5, 5));
    INFO("p=", rep.p_value);
    CHECK(rep.verdict == Verdict::pass);
}

TEST_CASE("transient fluctuation theorem on the drifted model") {
    const auto rep = transient_ft_test(shared_net(1), 1.0, 2.5, ctx_of(6, 6));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.curve.size() >= 1);
    // the log-ratio line has slope gamma: check the first point is near k*gamma
    for (const auto& row : rep.curve)
        CHECK(std::abs(row[1] - 1.0 * row[0]) < 0.5);
}

TEST_CASE("integral fluctuation theorem") {
    const auto rep = integral_ft_test(shared_net(1), 1.0, 2.5, ctx_of(7, 7));
    INFO("mean=", rep.statistics[0]);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.statistics[0] == doctest::Approx(1.0).epsilon(0.1));
    // gamma = 0 makes the statistic identically one
    const auto rep0 = integral_ft_test(shared_net(1), 0.0, 2.5, ctx_of(7, 8));
    CHECK(rep0.statistics[0] == 1.0);
}

TEST_CASE("Kurchan-Lebowitz-Spohn fluctuation theorem") {
    const auto rep =
        kls_ft_test(shared_net(0), 1.0, {-0.5, 0.5}, 1.0, ctx_of(8, 9));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);
    // lambda = -gamma/2 is the fixed point: both sides literally equal
    const auto repfix = kls_ft_test(shared_net(0), 1.0, {-0.5}, 1.0, ctx_of(8, 10));
    REQUIRE(repfix.curve.size() == 1);
    CHECK(repfix.curve[0][1] == doctest::Approx(0.0).epsilon(1e-12));
    // out-of-range lambda points are dropped
    const auto reprange = kls_ft_test(shared_net(0), 1.0, {5.0}, 1.0, ctx_of(8, 11));
    CHECK(reprange.verdict == Verdict::inconclusive);
}

TEST_CASE("joint count symmetry") {
    const auto rep = joint_count_symmetry_test(shared_pairs(1), 1.0, 2.5, ctx_of(9, 12));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.curve.size() >= 1);
}

TEST_CASE("finite-t SCGF symmetry") {
    const auto rep = scgf_symmetry_test(
        shared_pairs(1), 1.0, {{0.3, 0.0}, {0.0, 0.3}, {-0.3, 0.2}, {0.2, -0.3}}, 2.5,
        ctx_of(10, 13));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);
}

TEST_CASE("SCGF estimate: pinned origin, horizons, extrapolation against the oracle") {
    const auto m = make_constant_model(0.5, 1.0);
    SimulationConfig cfg;
    cfg.step_size = 1e-3;
    cfg.n_paths = 4000;
    cfg.master_seed = 11;
    const std::vector<double> horizons = {5.0, 10.0, 20.0};
    const auto est = scgf_estimate(m, cfg, {{0.0, 0.0}, {0.4, 0.0}, {0.0, 0.4}}, horizons);
    for (std::size_t h = 0; h < horizons.size(); ++h)
        CHECK(est.value_at(0, h) == 0.0);
    CHECK(est.extrapolated[0] == 0.0);

    // oracle: fine ring discretization's tilted eigenvalue; the (0.4, 0)
    // tilt weights forward cycles only, matching exp(0.4 N+_t).
    // For comparison use the net-count tilt at (0.4, -0.4) vs oracle winding.
    const auto est_net =
        scgf_estimate(m, cfg, {{0.4, -0.4}}, horizons);
    const auto ring = oracle::ring_from_model(m, 64);
    const double lam_oracle = oracle::tilted_scgf_exact(ring, 0.4);
    INFO("mc=", est_net.extrapolated[0], " oracle=", lam_oracle);
    CHECK(std::abs(est_net.extrapolated[0] - lam_oracle) <
          0.02 * std::max(1.0, std::abs(lam_oracle)) + 0.02);
}

TEST_CASE("rate function from a noisy SCGF is convexified and flagged") {
    // quadratic SCGF with a small dent
    std::vector<double> lam, val;
    for (int i = -10; i <= 10; ++i) {
        lam.push_back(0.2 * i);
        val.push_back(0.5 * lam.back() * lam.back());
    }
    val[10] += 0.05;  // break convexity at the origin
    const auto rf = rate_function_from_scgf(lam, val, 0.0);
    CHECK(rf.convexified);
    // gamma = 0: even rate function
    CHECK(rf.gc_residual < 1e-9);
}

TEST_CASE("entropy production: reversible model vanishes identically") {
    const auto sine = make_sine_model();
    const auto sol = stationary_density(sine);
    SimulationConfig cfg;
    cfg.step_size = 1e-3;
    cfg.horizon = 5.0;
    cfg.n_paths = 3;
    cfg.master_seed = 12;
    for (std::uint64_t p = 0; p < cfg.n_paths; ++p) {
        const auto rec = simulate_path(sine, cfg, p);
        const auto est = entropy_production_estimate(rec, sine, sol);
        CHECK(std::abs(est.e_mid) < 1e-7);
        CHECK(std::abs(est.e_anti) < 1e-7);
    }
}

TEST_CASE("entropy production: pathwise bound and the long-run mean") {
    const auto m = make_constant_model(0.5, 1.0);
    const auto sol = stationary_density(m);
    const EntropyPotential pot(m, sol);
    SimulationConfig cfg;
    cfg.step_size = 1e-3;
    cfg.horizon = 20.0;
    cfg.n_paths = 200;
    cfg.master_seed = 13;
    cfg.stationary_start = true;
    const auto batch = simulate_counting_batch(m, cfg, {20.0}, &pot);
    const auto eb = entropy_from_counting(batch, pot, cfg);
    const double bound = (pot.sup_2b_over_a() + 2.0 * pot.sup_log_psi()) / 20.0 + 1e-9;
    double mean = 0.0;
    for (std::size_t i = 0; i < eb.e_anti.size(); ++i) {
        CHECK(std::abs(eb.e_anti[i] - eb.j_gamma[i]) <= bound);
        // the two discretizations of E_t agree for this model exactly
        CHECK(eb.e_mid[i] == doctest::Approx(eb.e_anti[i]).epsilon(1e-6));
        mean += eb.e_anti[i];
    }
    mean /= static_cast<double>(eb.e_anti.size());
    const double se = sample_sd(eb.e_anti) / std::sqrt(200.0);
    CHECK(std::abs(mean - 0.5) <= 3.0 * se);
}

TEST_CASE("entropy rate symmetry and the degenerate branch") {
    const auto m = make_constant_model(0.5, 1.0);
    const auto sol = stationary_density(m);
    const EntropyPotential pot(m, sol);
    SimulationConfig cfg;
    cfg.step_size = 1e-3;
    cfg.horizon = 5.0;
    cfg.n_paths = 20000;
    cfg.master_seed = 14;
    cfg.stationary_start = true;
    const auto batch = simulate_counting_batch(m, cfg, {5.0}, &pot);
    const auto eb = entropy_from_counting(batch, pot, cfg);
    std::vector<double> te(eb.e_anti.size());
    for (std::size_t i = 0; i < te.size(); ++i) te[i] = eb.e_anti[i] * eb.horizon;
    const auto rep =
        entropy_rate_symmetry_check(te, 5.0, 1.0, {-0.75, -0.5, -0.25}, ctx_of(15, 16));
    INFO(rep.details);
    CHECK(rep.verdict == Verdict::pass);

    // consistency with the net-count SCGF: Lambda_E(l) ~ Lambda_W(l * gamma)
    const auto net = [&] {
        std::vector<std::int64_t> w(batch.x_final.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = batch.net_at(i, 0);
        return w;
    }();
    for (double l : {-0.5, 0.25}) {
        std::vector<double> a(te.size()), b(te.size());
        for (std::size_t i = 0; i < te.size(); ++i) {
            a[i] = l * te[i];
            b[i] = l * 1.0 * static_cast<double>(net[i]);
        }
        const double lam_e = log_mean_exp(a) / 5.0;
        const double lam_w = log_mean_exp(b) / 5.0;
        INFO("lambda=", l, " lam_e=", lam_e, " lam_w=", lam_w);
        CHECK(std::abs(lam_e - lam_w) < 0.05);
    }

    const auto rep0 = entropy_rate_symmetry_check(te, 5.0, 0.0, {-0.5}, ctx_of(15, 17));
    CHECK(rep0.verdict == Verdict::pass);
    CHECK(rep0.details.find("degenerate") != std::string::npos);
}

TEST_CASE("oracle-side fluctuation identities reuse the same reports") {
    // Exact winding law feeds the same transient/integral identities the MC
    // suite asserts; everything holds to near machine precision.
    oracle::RingChain c;
    c.n_sites = 3;
    c.p = {2.0, 1.0, 1.5};
    c.q = {0.7, 1.3, 0.9};
    const double g = c.affinity();
    const auto dist = oracle::winding_distribution_exact(c, 0, 2.0, 12);
    double integral = 0.0;
    for (int k = -dist.k_max; k <= dist.k_max; ++k)
        integral += std::exp(-g * k) * dist.at(k);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
}
