#pragma once

#include <optional>
#include <string>
#include <vector>

#include "circlesim/model.hpp"
#include "circlesim/simulate.hpp"
#include "circlesim/verification.hpp"

namespace circlesim {

/// Suite identifiers accepted in scenario files.
const std::vector<std::string>& known_suites();

struct Scenario {
    std::optional<CircleDiffusionModel> model;
    SimulationConfig simulation;
    std::vector<std::string> suites;
    std::string output_dir = "out";

    static Scenario from_json_file(const std::string& path);
    static Scenario from_json_string(const std::string& text);
};

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::uint64_t> n_paths;
    std::optional<double> horizon;
    std::optional<std::string> output_dir;
};

struct ScenarioOutcome {
    std::vector<VerificationReport> reports;
    int exit_code = 0;  // 0 pass, 2 any fail, 3 any inconclusive
    std::string output_dir;
};

/// Runs the suites, writes summary.json, reports.json, density.csv and
/// per-suite curve CSVs under output_dir, and a run_info.json sidecar that
/// carries the wall-clock data excluded from the deterministic artifacts.
ScenarioOutcome run_scenario(const Scenario& scenario, const ScenarioOverrides& overrides);

/// Loads, validates and runs a scenario file. ConfigError propagates for the
/// CLI to turn into exit code 1.
ScenarioOutcome run_scenario_file(const std::string& path, const ScenarioOverrides& overrides);

/// Writes summary.json and density.csv for a model file; returns the summary.
ModelSummary summarize_model_files(const std::string& model_file, const std::string& out_dir,
                                   int grid_size);

} // namespace circlesim
