// circlesim: simulation and verification lab for diffusions on the circle.
//
//   circlesim summarize <model.json> [--out DIR] [--grid N]
//   circlesim simulate  <model.json> [--mode path|first-cycle|counts] ...
//   circlesim verify    <scenario.json> [--out DIR] [--seed N] [--dt X] ...
//   circlesim oracle    <chain.json> [--out DIR] [--t T] [--kmax K] ...
//
// Exit codes for verify: 0 all suites pass, 2 any failure, 3 any
// inconclusive, 1 usage/configuration error. Worker count comes from the
// CIRCLESIM_WORKERS environment variable.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "circlesim/analytics.hpp"
#include "circlesim/cycles.hpp"
#include "circlesim/fluctuation.hpp"
#include "circlesim/oracle.hpp"
#include "circlesim/report.hpp"
#include "circlesim/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

int cmd_summarize(const std::string& model_file, const std::string& out_dir, int grid) {
    const circlesim::ModelSummary s =
        circlesim::summarize_model_files(model_file, out_dir, grid);
    std::printf("gamma                 %.12g\n", s.affinity);
    std::printf("net circulation J     %.12g\n", s.net_circulation);
    std::printf("entropy production e  %.12g\n", s.entropy_production_rate);
    std::printf("P(forward first)      %.12g\n", s.forward_splitting_probability);
    std::printf("reversible            %s\n", s.reversible ? "yes" : "no");
    std::printf("outputs in            %s\n", out_dir.c_str());
    return 0;
}

int cmd_simulate(const std::string& model_file, const std::string& mode,
                 circlesim::SimulationConfig cfg, const std::string& out_dir, bool csv,
                 bool binary, bool dt_study) {
    const auto model = circlesim::CircleDiffusionModel::from_json_file(model_file);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    if (dt_study) {
        circlesim::SimulationConfig study_cfg = cfg;
        study_cfg.until_first_cycle = true;
        const auto study = circlesim::first_cycle_convergence_study(model, study_cfg, 3);
        ordered_json j;
        j["dt"] = study.dts;
        j["mean_first_cycle_time"] = study.mean_t;
        j["plus_fraction"] = study.plus_fraction;
        j["censored_fraction"] = study.censored_fraction;
        circlesim::write_text_file((out / "dt_study.json").string(), j.dump(2) + "\n");
        std::printf("dt study written to %s\n", (out / "dt_study.json").string().c_str());
        return 0;
    }

    if (mode == "path") {
        const auto records = circlesim::simulate_batch(model, cfg);
        if (csv) circlesim::write_paths_csv((out / "paths.csv").string(), records);
        if (binary || !csv)
            circlesim::write_path_dump((out / "paths.bin").string(), model.hash(),
                                       cfg.digest(), records);
        // cycle log export comes free with recorded paths
        std::vector<circlesim::CycleEventLog> logs;
        logs.reserve(records.size());
        std::vector<std::pair<std::uint64_t, const circlesim::CycleEventLog*>> rows;
        for (const auto& rec : records) logs.push_back(circlesim::detect_cycle_events(rec));
        for (std::size_t i = 0; i < logs.size(); ++i)
            rows.emplace_back(records[i].path_index, &logs[i]);
        circlesim::write_cycle_log_csv((out / "cycles.csv").string(), rows);
        std::printf("%zu paths written to %s\n", records.size(), out_dir.c_str());
        return 0;
    }
    if (mode == "first-cycle") {
        cfg.until_first_cycle = true;
        const auto samples = circlesim::simulate_first_cycle_batch(model, cfg);
        std::ofstream f((out / "first_cycle.csv").string(), std::ios::binary);
        f << "path_id,T,sign,censored\n";
        char buf[96];
        for (std::size_t i = 0; i < samples.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%d\n", i, samples[i].t,
                          samples[i].sign, samples[i].censored ? 1 : 0);
            f << buf;
        }
        std::printf("%zu first-cycle samples written to %s\n", samples.size(),
                    out_dir.c_str());
        return 0;
    }
    if (mode == "counts") {
        const auto batch = circlesim::simulate_counting_batch(model, cfg, {cfg.horizon});
        std::ofstream f((out / "counts.csv").string(), std::ios::binary);
        f << "path_id,n_plus,n_minus,net,x_final\n";
        char buf[140];
        for (std::size_t i = 0; i < batch.x_final.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%u,%u,%lld,%.17g\n", i, batch.plus_at(i, 0),
                          batch.minus_at(i, 0),
                          static_cast<long long>(batch.net_at(i, 0)), batch.x_final[i]);
            f << buf;
        }
        std::printf("%zu count rows written to %s\n", batch.x_final.size(), out_dir.c_str());
        return 0;
    }
    throw circlesim::ConfigError("unknown --mode \"" + mode + "\"");
}

int cmd_oracle(const std::string& chain_file, const std::string& out_dir, double t, int kmax,
               int start, std::vector<double> lambdas) {
    const auto chain = circlesim::oracle::RingChain::from_json_file(chain_file);
    fs::create_directories(out_dir);
    const double gamma_d = chain.affinity();

    ordered_json j;
    j["n_sites"] = chain.n_sites;
    j["affinity"] = gamma_d;

    const double p_plus = circlesim::oracle::splitting_probability_exact(chain, start);
    double rate_product = 1.0;
    for (int i = 0; i < chain.n_sites; ++i) rate_product *= chain.p[i] / chain.q[i];
    j["splitting_probability"] = p_plus;
    j["splitting_ratio"] = p_plus / (1.0 - p_plus);
    j["rate_product"] = rate_product;

    const std::vector<double> grid = {0.25 * t, 0.5 * t, 0.75 * t, t};
    const auto law = circlesim::oracle::conditional_first_passage_law(chain, start, grid);
    j["conditional_law_max_gap"] = law.max_gap;

    const auto wind = circlesim::oracle::winding_distribution_exact(chain, start, t, kmax);
    double gc_residual = 0.0;
    double integral_ft = 0.0;
    double mass = 0.0;
    for (int k = -wind.k_max; k <= wind.k_max; ++k) {
        const double pk = wind.at(k);
        mass += pk;
        integral_ft += std::exp(-gamma_d * k) * pk;
        if (k >= 1 && wind.at(-k) > 1e-100 && pk > 1e-100)
            gc_residual = std::max(
                gc_residual, std::abs(std::log(pk / wind.at(-k)) - gamma_d * k));
    }
    j["winding"] = {{"t", t},
                    {"k_max", wind.k_max},
                    {"total_mass", mass},
                    {"truncated_mass", wind.truncated_mass},
                    {"transient_ft_max_residual", gc_residual},
                    {"integral_ft_value", integral_ft}};

    if (lambdas.empty()) lambdas = {0.25, 0.5, 1.0};
    double tilt_residual = 0.0;
    ordered_json tilt = ordered_json::array();
    for (double l : lambdas) {
        const double lam_c = -gamma_d / 2.0;
        const double a = circlesim::oracle::tilted_scgf_exact(chain, lam_c + l);
        const double b = circlesim::oracle::tilted_scgf_exact(chain, lam_c - l);
        tilt_residual = std::max(tilt_residual, std::abs(a - b));
        tilt.push_back({{"lambda", lam_c + l}, {"scgf", a}, {"mirror", b}});
    }
    j["tilted_scgf"] = tilt;
    j["tilted_symmetry_max_residual"] = tilt_residual;

    // Legendre transform of the exact SCGF on a symmetric grid
    std::vector<double> lam_grid, scgf_vals;
    for (int i = -24; i <= 24; ++i) {
        const double l = -gamma_d / 2.0 + 0.125 * i;
        lam_grid.push_back(l);
        scgf_vals.push_back(circlesim::oracle::tilted_scgf_exact(chain, l));
    }
    const auto rf = circlesim::rate_function_from_scgf(lam_grid, scgf_vals, gamma_d);
    j["rate_function"] = {{"x_lo", rf.x_lo},
                          {"x_hi", rf.x_hi},
                          {"argmin_x", rf.argmin_x},
                          {"gc_residual", rf.gc_residual}};

    circlesim::write_text_file((fs::path(out_dir) / "oracle.json").string(),
                               j.dump(2) + "\n");
    std::printf("oracle report written to %s\n",
                (fs::path(out_dir) / "oracle.json").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and verification lab for circle diffusions"};
    app.require_subcommand(1);

    std::string model_file, scenario_file, chain_file;
    std::string out_dir = "out";
    std::string mode = "path";
    int grid = 4096;
    bool csv = false, binary = false, dt_study = false;
    double oracle_t = 2.0;
    int oracle_kmax = 24;
    int oracle_start = 0;
    std::vector<double> oracle_lambdas;

    circlesim::SimulationConfig cfg;
    circlesim::ScenarioOverrides overrides;
    std::uint64_t seed_opt = 0;
    double dt_opt = 0.0, horizon_opt = 0.0;
    std::uint64_t paths_opt = 0;

    auto* sum = app.add_subcommand("summarize", "closed-form quantities of a model");
    sum->add_option("model", model_file, "model JSON file")->required();
    sum->add_option("--out", out_dir, "output directory");
    sum->add_option("--grid", grid, "density grid size");

    auto* sim = app.add_subcommand("simulate", "generate trajectories or cycle samples");
    sim->add_option("model", model_file, "model JSON file")->required();
    sim->add_option("--mode", mode, "path | first-cycle | counts");
    sim->add_option("--dt", cfg.step_size, "step size");
    sim->add_option("--horizon", cfg.horizon, "time horizon");
    sim->add_option("--paths", cfg.n_paths, "number of paths");
    sim->add_option("--seed", cfg.master_seed, "master seed");
    sim->add_option("--censor", cfg.censoring_time, "censoring time for first-cycle runs");
    sim->add_flag("--bridge", cfg.bridge_correction, "Brownian-bridge crossing correction");
    sim->add_flag("--stationary-start", cfg.stationary_start, "draw starts from rho");
    sim->add_option("--out", out_dir, "output directory");
    sim->add_flag("--csv", csv, "write CSV outputs");
    sim->add_flag("--binary", binary, "write the binary path dump");
    sim->add_flag("--dt-study", dt_study, "first-cycle statistics at dt, dt/2, dt/4");

    auto* ver = app.add_subcommand("verify", "run verification suites from a scenario file");
    ver->add_option("scenario", scenario_file, "scenario JSON file")->required();
    auto* o_out = ver->add_option("--out", out_dir, "override output directory");
    auto* o_seed = ver->add_option("--seed", seed_opt, "override master seed");
    auto* o_dt = ver->add_option("--dt", dt_opt, "override step size");
    auto* o_paths = ver->add_option("--paths", paths_opt, "override path count");
    auto* o_hor = ver->add_option("--horizon", horizon_opt, "override horizon");

    auto* orc = app.add_subcommand("oracle", "exact checks on a discrete ring chain");
    orc->add_option("chain", chain_file, "chain JSON file")->required();
    orc->add_option("--out", out_dir, "output directory");
    orc->add_option("--t", oracle_t, "winding horizon");
    orc->add_option("--kmax", oracle_kmax, "winding truncation");
    orc->add_option("--start", oracle_start, "start site");
    orc->add_option("--lambda", oracle_lambdas, "tilt offsets for the symmetry check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sum->parsed()) return cmd_summarize(model_file, out_dir, grid);
        if (sim->parsed())
            return cmd_simulate(model_file, mode, cfg, out_dir, csv, binary, dt_study);
        if (ver->parsed()) {
            if (*o_out) overrides.output_dir = out_dir;
            if (*o_seed) overrides.seed = seed_opt;
            if (*o_dt) overrides.dt = dt_opt;
            if (*o_paths) overrides.n_paths = paths_opt;
            if (*o_hor) overrides.horizon = horizon_opt;
            const auto outcome = circlesim::run_scenario_file(scenario_file, overrides);
            for (const auto& rep : outcome.reports)
                std::printf("%-22s %s\n", rep.theorem_id.c_str(),
                            circlesim::verdict_name(rep.verdict));
            return outcome.exit_code;
        }
        if (orc->parsed())
            return cmd_oracle(chain_file, out_dir, oracle_t, oracle_kmax, oracle_start,
                              oracle_lambdas);
    } catch (const circlesim::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const circlesim::ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
