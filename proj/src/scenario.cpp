#include "circlesim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "circlesim/analytics.hpp"
#include "circlesim/fluctuation.hpp"
#include "circlesim/qtr.hpp"
#include "circlesim/report.hpp"
#include "circlesim/stats.hpp"

namespace circlesim {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> suites = {
        "cycle_symmetry",   "ratio_curve",        "independence",
        "qtr_invariance",   "transient_ft",       "kls_ft",
        "integral_ft",      "joint_count_symmetry", "scgf_symmetry",
        "net_circulation_lln", "entropy_production", "entropy_rate_symmetry",
    };
    return suites;
}

namespace {

SimulationConfig config_from_json(const json& j) {
    SimulationConfig cfg;
    if (j.contains("step_size")) cfg.step_size = j.at("step_size").get<double>();
    if (j.contains("horizon")) {
        if (j.at("horizon").is_string()) {
            if (j.at("horizon").get<std::string>() != "until-first-cycle")
                throw ConfigError("simulation.horizon: unknown sentinel");
            cfg.until_first_cycle = true;
        } else {
            cfg.horizon = j.at("horizon").get<double>();
        }
    }
    if (j.contains("n_paths")) cfg.n_paths = j.at("n_paths").get<std::uint64_t>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("start_point")) cfg.start_point = j.at("start_point").get<double>();
    if (j.contains("censoring_time"))
        cfg.censoring_time = j.at("censoring_time").get<double>();
    if (j.contains("stationary_start"))
        cfg.stationary_start = j.at("stationary_start").get<bool>();
    if (j.contains("bridge_correction"))
        cfg.bridge_correction = j.at("bridge_correction").get<bool>();
    return cfg;
}

} // namespace

Scenario Scenario::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario parse error: ") + e.what());
    }
    Scenario sc;
    try {
        if (j.contains("model_file")) {
            sc.model = CircleDiffusionModel::from_json_file(j.at("model_file"));
        } else if (j.contains("model")) {
            sc.model = CircleDiffusionModel::from_json_string(j.at("model").dump());
        } else {
            throw ConfigError("scenario needs \"model\" or \"model_file\"");
        }
        if (j.contains("simulation")) sc.simulation = config_from_json(j.at("simulation"));
        if (j.contains("suites"))
            sc.suites = j.at("suites").get<std::vector<std::string>>();
        if (j.contains("output_dir")) sc.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario field error: ") + e.what());
    }
    for (const auto& s : sc.suites) {
        const auto& ks = known_suites();
        if (std::find(ks.begin(), ks.end(), s) == ks.end())
            throw ConfigError("unknown suite \"" + s + "\"");
    }
    return sc;
}

Scenario Scenario::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

namespace {

/// Lazily computed shared inputs for the suites.
struct BatchCache {
    const CircleDiffusionModel& model;
    SimulationConfig base;
    double gamma = 0.0;

    std::optional<std::vector<FirstCycleSample>> first_cycle;
    std::optional<CountingBatch> counting;            // checkpoints {0.4h, h}
    std::optional<StationarySolution> solution;
    std::optional<CountingBatch> entropy_counting;    // stationary start + accumulator
    std::optional<EntropyPotential> potential;

    explicit BatchCache(const CircleDiffusionModel& m, const SimulationConfig& cfg)
        : model(m), base(cfg) {
        gamma = affinity(m);
    }

    const std::vector<FirstCycleSample>& get_first_cycle() {
        if (!first_cycle) {
            SimulationConfig cfg = base;
            cfg.until_first_cycle = true;
            first_cycle = simulate_first_cycle_batch(model, cfg);
        }
        return *first_cycle;
    }

    const CountingBatch& get_counting() {
        if (!counting) {
            SimulationConfig cfg = base;
            cfg.until_first_cycle = false;
            const double mid = 0.4 * cfg.horizon;
            counting = simulate_counting_batch(model, cfg, {mid, cfg.horizon});
        }
        return *counting;
    }

    const StationarySolution& get_solution() {
        if (!solution) solution = stationary_density(model);
        return *solution;
    }

    const EntropyPotential& get_potential() {
        if (!potential) potential.emplace(model, get_solution());
        return *potential;
    }

    const CountingBatch& get_entropy_counting() {
        if (!entropy_counting) {
            SimulationConfig cfg = base;
            cfg.until_first_cycle = false;
            cfg.stationary_start = true;
            entropy_counting =
                simulate_counting_batch(model, cfg, {cfg.horizon}, &get_potential());
        }
        return *entropy_counting;
    }

    std::vector<std::int64_t> net_counts(const CountingBatch& b, std::uint32_t checkpoint) {
        std::vector<std::int64_t> w(b.x_final.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = b.net_at(i, checkpoint);
        return w;
    }

    std::vector<std::array<std::uint32_t, 2>> count_pairs(const CountingBatch& b,
                                                          std::uint32_t checkpoint) {
        std::vector<std::array<std::uint32_t, 2>> p(b.x_final.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = {b.plus_at(i, checkpoint), b.minus_at(i, checkpoint)};
        return p;
    }
};

VerificationReport net_circulation_lln_report(BatchCache& cache, const TestContext& ctx) {
    const CountingBatch& batch = cache.get_counting();
    const double t = batch.checkpoints.back();
    const std::uint32_t last = batch.n_checkpoints - 1;
    const double j_exact = net_circulation(cache.model, cache.get_solution());
    const std::size_t n = batch.x_final.size();
    VerificationReport rep;
    rep.theorem_id = "net_circulation_lln";
    rep.model_hash = ctx.model_hash;
    rep.config_digest = ctx.config_digest;
    rep.master_seed = ctx.master_seed;
    rep.sample_size = n;

    double mean = 0.0, m2 = 0.0;
    double worst_bound = 0.0;
    const double start = cache.base.start_point;
    for (std::size_t i = 0; i < n; ++i) {
        const double jt = static_cast<double>(batch.net_at(i, last)) / t;
        mean += jt;
        const double x0 = batch.start_points.empty() ? start : batch.start_points[i];
        const double slope = (batch.x_final[i] - x0) / t;
        worst_bound = std::max(worst_bound, std::abs(jt - slope));
        m2 += jt * jt;
    }
    mean /= static_cast<double>(n);
    const double var = std::max(0.0, m2 / n - mean * mean);
    const double se = std::sqrt(var / n);
    const double bound = 1.0 / t + 1e-12;
    rep.statistics = {mean, j_exact, se, worst_bound};
    rep.tolerance = 3.0 * se;
    rep.margin = std::abs(mean - j_exact);
    const bool lln_ok = rep.margin <= 3.0 * se;
    const bool pathwise_ok = worst_bound <= bound;
    rep.verdict = (lln_ok && pathwise_ok) ? Verdict::pass : Verdict::fail;
    rep.details = "mean J_t vs J within 3 SE; pathwise |J_t - X_t/t| <= 1/t (worst " +
                  std::to_string(worst_bound) + ")";
    return rep;
}

VerificationReport entropy_production_report(BatchCache& cache, const TestContext& ctx) {
    const CountingBatch& batch = cache.get_entropy_counting();
    const EntropyPotential& pot = cache.get_potential();
    SimulationConfig cfg = cache.base;
    cfg.stationary_start = true;
    const EntropyBatch eb = entropy_from_counting(batch, pot, cfg);
    const double e_exact = net_circulation(cache.model, cache.get_solution()) * pot.gamma();
    const double t = eb.horizon;
    const double c_bound = (pot.sup_2b_over_a() + 2.0 * pot.sup_log_psi()) / t + 1e-9;

    VerificationReport rep;
    rep.theorem_id = "entropy_production";
    rep.model_hash = ctx.model_hash;
    rep.config_digest = ctx.config_digest;
    rep.master_seed = ctx.master_seed;
    rep.sample_size = eb.e_anti.size();

    double worst = 0.0;
    for (std::size_t i = 0; i < eb.e_anti.size(); ++i)
        worst = std::max(worst, std::abs(eb.e_anti[i] - eb.j_gamma[i]));
    const double mean = sample_mean(eb.e_anti);
    const double se = sample_sd(eb.e_anti) / std::sqrt(static_cast<double>(eb.e_anti.size()));
    rep.statistics = {mean, e_exact, se, worst, c_bound};
    rep.tolerance = 3.0 * se;
    rep.margin = std::abs(mean - e_exact);
    const bool bound_ok = worst <= c_bound;
    const bool mean_ok = rep.margin <= 3.0 * se;
    rep.verdict = (bound_ok && mean_ok) ? Verdict::pass : Verdict::fail;
    rep.details = "pathwise |E_t - J_t gamma| <= (sup|2b/a| + 2 sup|log(a rho)|)/t and "
                  "mean E_t within 3 SE of e";
    return rep;
}

} // namespace

ScenarioOutcome run_scenario(const Scenario& scenario, const ScenarioOverrides& overrides) {
    if (!scenario.model) throw ConfigError("scenario has no model");
    const auto t_start = std::chrono::steady_clock::now();
    Scenario sc = scenario;
    if (overrides.seed) sc.simulation.master_seed = *overrides.seed;
    if (overrides.dt) sc.simulation.step_size = *overrides.dt;
    if (overrides.n_paths) sc.simulation.n_paths = *overrides.n_paths;
    if (overrides.horizon) sc.simulation.horizon = *overrides.horizon;
    if (overrides.output_dir) sc.output_dir = *overrides.output_dir;
    const CircleDiffusionModel& model = *sc.model;
    sc.simulation.validate(model);

    fs::create_directories(sc.output_dir);
    const fs::path out(sc.output_dir);

    const ModelSummary summary = summarize(model);
    write_density_csv((out / "density.csv").string(), summary.grid, summary.density);
    write_text_file((out / "summary.json").string(),
                    summary_to_json(summary, "density.csv") + "\n");

    BatchCache cache(model, sc.simulation);
    std::vector<VerificationReport> reports;
    std::uint64_t stream = 0;
    for (const std::string& suite : sc.suites) {
        TestContext ctx;
        ctx.model_hash = model.hash();
        ctx.config_digest = sc.simulation.digest();
        ctx.master_seed = sc.simulation.master_seed;
        ctx.bootstrap_stream = ++stream;
        VerificationReport rep;
        if (suite == "cycle_symmetry") {
            rep = cycle_symmetry_test(cache.get_first_cycle(), ctx);
        } else if (suite == "ratio_curve") {
            rep = ratio_curve_test(cache.get_first_cycle(),
                                   {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}, cache.gamma, ctx);
        } else if (suite == "independence") {
            rep = independence_test(cache.get_first_cycle(), ctx);
        } else if (suite == "qtr_invariance") {
            rep = qtr_invariance_test(sc.simulation).report;
        } else if (suite == "transient_ft") {
            rep = transient_ft_test(cache.net_counts(cache.get_counting(), 1), cache.gamma,
                                    cache.get_counting().checkpoints.back(), ctx);
        } else if (suite == "kls_ft") {
            rep = kls_ft_test(cache.net_counts(cache.get_counting(), 0), cache.gamma,
                              {-0.5, 0.5}, cache.get_counting().checkpoints.front(), ctx);
        } else if (suite == "integral_ft") {
            rep = integral_ft_test(cache.net_counts(cache.get_counting(), 1), cache.gamma,
                                   cache.get_counting().checkpoints.back(), ctx);
        } else if (suite == "joint_count_symmetry") {
            rep = joint_count_symmetry_test(cache.count_pairs(cache.get_counting(), 1),
                                            cache.gamma,
                                            cache.get_counting().checkpoints.back(), ctx);
        } else if (suite == "scgf_symmetry") {
            rep = scgf_symmetry_test(
                cache.count_pairs(cache.get_counting(), 1), cache.gamma,
                {{0.3, 0.0}, {0.0, 0.3}, {-0.3, 0.2}, {0.2, -0.3}},
                cache.get_counting().checkpoints.back(), ctx);
        } else if (suite == "net_circulation_lln") {
            rep = net_circulation_lln_report(cache, ctx);
        } else if (suite == "entropy_production") {
            rep = entropy_production_report(cache, ctx);
        } else if (suite == "entropy_rate_symmetry") {
            const CountingBatch& b = cache.get_entropy_counting();
            SimulationConfig cfg = sc.simulation;
            cfg.stationary_start = true;
            const EntropyBatch eb = entropy_from_counting(b, cache.get_potential(), cfg);
            std::vector<double> te(eb.e_anti.size());
            for (std::size_t i = 0; i < te.size(); ++i) te[i] = eb.e_anti[i] * eb.horizon;
            rep = entropy_rate_symmetry_check(te, eb.horizon, cache.gamma,
                                              {-0.75, -0.5, -0.25}, ctx);
        } else {
            throw ConfigError("unknown suite \"" + suite + "\"");
        }
        if (!rep.curve.empty())
            write_curve_csv((out / (suite + "_curve.csv")).string(), rep);
        reports.push_back(std::move(rep));
    }

    write_text_file((out / "reports.json").string(), reports_to_json(reports) + "\n");

    ScenarioOutcome outcome;
    outcome.reports = reports;
    outcome.output_dir = sc.output_dir;
    bool any_fail = false, any_inconclusive = false;
    for (const auto& r : reports) {
        any_fail = any_fail || r.verdict == Verdict::fail;
        any_inconclusive = any_inconclusive || r.verdict == Verdict::inconclusive;
    }
    outcome.exit_code = any_fail ? 2 : (any_inconclusive ? 3 : 0);

    const auto t_end = std::chrono::steady_clock::now();
    nlohmann::ordered_json info;
    info["elapsed_seconds"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count() /
        1000.0;
    info["backend"] = backend_name(resolve_backend(sc.simulation.backend));
    info["workers"] = worker_count();
    info["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_text_file((out / "run_info.json").string(), info.dump(2) + "\n");
    return outcome;
}

ScenarioOutcome run_scenario_file(const std::string& path, const ScenarioOverrides& overrides) {
    return run_scenario(Scenario::from_json_file(path), overrides);
}

ModelSummary summarize_model_files(const std::string& model_file, const std::string& out_dir,
                                   int grid_size) {
    const CircleDiffusionModel model = CircleDiffusionModel::from_json_file(model_file);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    const ModelSummary summary = summarize(model, grid_size);
    write_density_csv((out / "density.csv").string(), summary.grid, summary.density);
    write_text_file((out / "summary.json").string(),
                    summary_to_json(summary, "density.csv") + "\n");
    return summary;
}

} // namespace circlesim
