#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "circlesim/analytics.hpp"
#include "circlesim/kernels.hpp"
#include "circlesim/model.hpp"

namespace circlesim {

struct SimulationConfig {
    double step_size = 1e-4;
    double horizon = 1.0;           // ignored when until_first_cycle
    bool until_first_cycle = false;
    std::uint64_t n_paths = 1;
    std::uint64_t master_seed = 0;
    double start_point = 0.0;
    double censoring_time = 0.0;    // <= 0: 200 / min(1, sigma_min^2)
    bool stationary_start = false;
    bool bridge_correction = false;
    KernelBackend backend = KernelBackend::auto_detect;

    void validate(const CircleDiffusionModel& model) const;
    double resolved_censoring_time(const CircleDiffusionModel& model) const;
    /// Stable digest of the scientifically relevant fields, for provenance.
    std::string digest() const;
};

/// Worker count: CIRCLESIM_WORKERS when set, hardware concurrency otherwise.
int worker_count();

struct PathRecord {
    std::vector<double> times;      // strictly increasing, starts at 0
    std::vector<double> positions;  // same length, positions[0] = start
    std::uint64_t path_index = 0;
    std::uint64_t master_seed = 0;
    std::string model_hash;
};

PathRecord simulate_path(const CircleDiffusionModel& model, const SimulationConfig& config,
                         std::uint64_t path_index);

/// Record-mode batch; intended for small runs (memory is O(paths * steps)).
std::vector<PathRecord> simulate_batch(const CircleDiffusionModel& model,
                                       const SimulationConfig& config);

struct FirstCycleSample {
    double t = 0.0;
    int sign = 0;       // +1, -1, or 0 when censored
    bool censored = false;
};

std::vector<FirstCycleSample> simulate_first_cycle_batch(const CircleDiffusionModel& model,
                                                         const SimulationConfig& config);

FirstCycleSample simulate_first_cycle(const CircleDiffusionModel& model,
                                      const SimulationConfig& config,
                                      std::uint64_t path_index);

/// Per-path cycle counts at increasing checkpoint times (the last checkpoint
/// is the horizon), plus the terminal position and, optionally, the online
/// Stratonovich accumulator for the empirical entropy production rate.
struct CountingBatch {
    std::vector<double> checkpoints;
    std::uint32_t n_checkpoints = 0;
    std::vector<std::uint32_t> n_plus;   // [path * n_checkpoints + c]
    std::vector<std::uint32_t> n_minus;
    std::vector<double> x_final;
    std::vector<double> strat_sum;       // empty unless entropy requested
    std::vector<double> start_points;    // empty unless stationary start

    std::uint32_t plus_at(std::uint64_t path, std::uint32_t c) const {
        return n_plus[path * n_checkpoints + c];
    }
    std::uint32_t minus_at(std::uint64_t path, std::uint32_t c) const {
        return n_minus[path * n_checkpoints + c];
    }
    std::int64_t net_at(std::uint64_t path, std::uint32_t c) const {
        return static_cast<std::int64_t>(plus_at(path, c)) -
               static_cast<std::int64_t>(minus_at(path, c));
    }
};

CountingBatch simulate_counting_batch(const CircleDiffusionModel& model,
                                      const SimulationConfig& config,
                                      std::vector<double> checkpoints,
                                      const EntropyPotential* entropy = nullptr);

/// First-cycle statistics at dt, dt/2, ..., dt/2^(levels-1): the main
/// discretization-error knob for first-passage runs.
struct ConvergenceStudy {
    std::vector<double> dts;
    std::vector<double> mean_t;
    std::vector<double> plus_fraction;
    std::vector<double> censored_fraction;
};

ConvergenceStudy first_cycle_convergence_study(const CircleDiffusionModel& model,
                                               SimulationConfig config, int levels = 3);

} // namespace circlesim
