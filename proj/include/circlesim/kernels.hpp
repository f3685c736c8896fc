#pragma once

// Simulation kernels. The same stepping algorithm is instantiated twice:
// once on a scalar lane pack (the reference) and once on an AVX2 pack with
// four paths per vector. Both consume the counter-based RNG keyed by
// (seed, path, step), so a path's trajectory is a pure function of its
// inputs: results are bit-identical across backends, worker counts and
// lane assignments. tests/test_kernels.cpp enforces the equivalence.

#include <cstdint>
#include <string>
#include <vector>

#include "circlesim/model.hpp"

namespace circlesim {

enum class KernelBackend { auto_detect, scalar, avx2 };

bool avx2_supported();
const char* backend_name(KernelBackend resolved);
KernelBackend resolve_backend(KernelBackend requested);

/// Flat, kernel-ready view of one periodic coefficient.
struct CoeffView {
    int kind = 0;  // 0 constant, 1 fourier, 2 linear table, 3 cubic table
    double c0 = 0.0;
    const double* cos_coeff = nullptr;
    const double* sin_coeff = nullptr;
    int harmonics = 0;
    const double* table = nullptr;
    int table_n = 0;
    const double* cells = nullptr;  // 4 per cell for cubic
};

struct ModelView {
    CoeffView drift;
    CoeffView sigma;
};

/// The view borrows the model's coefficient storage; keep the model alive.
ModelView make_model_view(const CircleDiffusionModel& model);

struct StepPlan {
    double dt = 1e-4;
    double sqrt_dt = 0.0;
    double last_dt = 0.0;  // 0: horizon is a whole number of steps
    double sqrt_last_dt = 0.0;
    std::uint64_t seed = 0;
    bool bridge_correction = false;
    const double* fprime_table = nullptr;  // periodic nodes, size fprime_n
    int fprime_n = 0;
};

StepPlan make_step_plan(double dt, std::uint64_t seed, double horizon,
                        std::uint64_t& n_full_steps_out);

struct FirstCycleOut {
    double* t = nullptr;
    std::int8_t* sign = nullptr;
    std::uint8_t* censored = nullptr;
};

struct CountingOut {
    // [path_local * n_checkpoints + c]
    std::uint32_t* n_plus = nullptr;
    std::uint32_t* n_minus = nullptr;
    double* x_final = nullptr;    // [path_local]
    double* strat_sum = nullptr;  // nullable, [path_local]
};

struct RecordUntilOut {
    std::uint64_t* steps_written = nullptr;  // index of last written sample
    std::uint8_t* crossed = nullptr;
};

/// One backend's entry points. All functions process paths
/// [path_begin, path_begin + n_paths) and write into local slot
/// (path - path_begin) of the output arrays. `starts` may be null, in which
/// case `start_common` applies to every path.
struct KernelOps {
    const char* name;

    void (*record_batch)(const ModelView&, const StepPlan&, std::uint64_t path_begin,
                         std::uint64_t n_paths, const double* starts, double start_common,
                         std::uint64_t n_steps, double* const* buffers);

    void (*record_until_batch)(const ModelView&, const StepPlan&, std::uint64_t path_begin,
                               std::uint64_t n_paths, double start_common,
                               std::uint64_t max_steps, double min_time,
                               double* const* buffers, RecordUntilOut out);

    void (*first_cycle_batch)(const ModelView&, const StepPlan&, std::uint64_t path_begin,
                              std::uint64_t n_paths, const double* starts, double start_common,
                              std::uint64_t max_steps, FirstCycleOut out);

    void (*counting_batch)(const ModelView&, const StepPlan&, std::uint64_t path_begin,
                           std::uint64_t n_paths, const double* starts, double start_common,
                           std::uint64_t n_steps, const double* checkpoint_times,
                           int n_checkpoints, CountingOut out);
};

const KernelOps& kernel_ops(KernelBackend backend);

} // namespace circlesim
