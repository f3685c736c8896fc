#include "circlesim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

namespace circlesim {

namespace {

/// Deterministic chunked parallel run: fn(begin, end) over [0, n).
/// Outputs are indexed per path, so the split cannot affect results.
void parallel_paths(std::uint64_t n, const std::function<void(std::uint64_t, std::uint64_t)>& fn) {
    const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(n)));
    if (workers == 1 || n < 2) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::uint64_t b = std::min<std::uint64_t>(n, w * chunk);
        const std::uint64_t e = std::min<std::uint64_t>(n, b + chunk);
        if (b >= e) break;
        threads.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : threads) t.join();
}

std::vector<double> stationary_starts(const CircleDiffusionModel& model,
                                      const SimulationConfig& config) {
    const StationarySolution sol = stationary_density(model);
    const StationarySampler sampler(sol);
    std::vector<double> starts(config.n_paths);
    for (std::uint64_t p = 0; p < config.n_paths; ++p)
        starts[p] = sampler.sample(config.master_seed, p);
    return starts;
}

} // namespace

int worker_count() {
    if (const char* env = std::getenv("CIRCLESIM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 4096) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void SimulationConfig::validate(const CircleDiffusionModel& model) const {
    if (!(step_size > 0.0) || !(step_size < 1.0))
        throw ConfigError("step_size must lie in (0, 1)");
    if (n_paths == 0) throw ConfigError("n_paths must be positive");
    if (!until_first_cycle) {
        if (horizon < 0.0) throw ConfigError("horizon must be nonnegative");
        const double steps = horizon / step_size;
        if (steps > 9e15) throw ConfigError("horizon / step_size does not fit a 64-bit count");
    }
    const double censor = resolved_censoring_time(model);
    if (!(censor > 0.0)) throw ConfigError("censoring_time must be positive");
}

double SimulationConfig::resolved_censoring_time(const CircleDiffusionModel& model) const {
    if (censoring_time > 0.0) return censoring_time;
    const double smin = model.sigma_min();
    return 200.0 / std::min(1.0, smin * smin);
}

std::string SimulationConfig::digest() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "dt=%.17g;horizon=%.17g;fc=%d;n=%llu;seed=%llu;x0=%.17g;censor=%.17g;"
                  "stat=%d;bridge=%d",
                  step_size, horizon, until_first_cycle ? 1 : 0,
                  static_cast<unsigned long long>(n_paths),
                  static_cast<unsigned long long>(master_seed), start_point, censoring_time,
                  stationary_start ? 1 : 0, bridge_correction ? 1 : 0);
    return buf;
}

PathRecord simulate_path(const CircleDiffusionModel& model, const SimulationConfig& config,
                         std::uint64_t path_index) {
    config.validate(model);
    if (path_index >= config.n_paths)
        throw ConfigError("path_index out of range for this configuration");
    const ModelView mv = make_model_view(model);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(config.step_size, config.master_seed, config.horizon, n_full);
    plan.bridge_correction = config.bridge_correction;
    const std::uint64_t total = n_full + (plan.last_dt > 0.0 ? 1 : 0);

    PathRecord rec;
    rec.path_index = path_index;
    rec.master_seed = config.master_seed;
    rec.model_hash = model.hash();
    rec.positions.assign(total + 1, 0.0);
    rec.times.resize(total + 1);
    for (std::uint64_t k = 0; k <= total; ++k)
        rec.times[k] = std::min(config.horizon, static_cast<double>(k) * config.step_size);
    if (plan.last_dt > 0.0) rec.times[total] = config.horizon;

    double start = config.start_point;
    std::vector<double> starts;
    if (config.stationary_start) {
        starts = stationary_starts(model, config);
        start = starts[path_index];
    }
    double* buf = rec.positions.data();
    const KernelOps& ops = kernel_ops(config.backend);
    ops.record_batch(mv, plan, path_index, 1, nullptr, start, n_full, &buf);

    for (double v : rec.positions)
        if (!std::isfinite(v))
            throw SimulationError("non-finite state in simulate_path", path_index);
    return rec;
}

std::vector<PathRecord> simulate_batch(const CircleDiffusionModel& model,
                                       const SimulationConfig& config) {
    config.validate(model);
    const ModelView mv = make_model_view(model);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(config.step_size, config.master_seed, config.horizon, n_full);
    plan.bridge_correction = config.bridge_correction;
    const std::uint64_t total = n_full + (plan.last_dt > 0.0 ? 1 : 0);

    std::vector<double> starts;
    if (config.stationary_start) starts = stationary_starts(model, config);

    std::vector<PathRecord> out(config.n_paths);
    for (std::uint64_t p = 0; p < config.n_paths; ++p) {
        out[p].path_index = p;
        out[p].master_seed = config.master_seed;
        out[p].model_hash = model.hash();
        out[p].positions.assign(total + 1, 0.0);
        out[p].times.resize(total + 1);
        for (std::uint64_t k = 0; k <= total; ++k)
            out[p].times[k] = std::min(config.horizon,
                                       static_cast<double>(k) * config.step_size);
        if (plan.last_dt > 0.0) out[p].times[total] = config.horizon;
    }
    const KernelOps& ops = kernel_ops(config.backend);
    parallel_paths(config.n_paths, [&](std::uint64_t b, std::uint64_t e) {
        std::vector<double*> bufs(e - b);
        for (std::uint64_t p = b; p < e; ++p) bufs[p - b] = out[p].positions.data();
        ops.record_batch(mv, plan, b, e - b, starts.empty() ? nullptr : starts.data() + b,
                         config.start_point, n_full, bufs.data());
    });
    return out;
}

std::vector<FirstCycleSample> simulate_first_cycle_batch(const CircleDiffusionModel& model,
                                                         const SimulationConfig& config) {
    config.validate(model);
    const ModelView mv = make_model_view(model);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(config.step_size, config.master_seed, 0.0, n_full);
    plan.bridge_correction = config.bridge_correction;
    const double censor = config.resolved_censoring_time(model);
    const std::uint64_t max_steps =
        static_cast<std::uint64_t>(std::ceil(censor / config.step_size));

    std::vector<double> starts;
    if (config.stationary_start) starts = stationary_starts(model, config);

    std::vector<double> t(config.n_paths);
    std::vector<std::int8_t> sign(config.n_paths);
    std::vector<std::uint8_t> cens(config.n_paths);
    const KernelOps& ops = kernel_ops(config.backend);
    parallel_paths(config.n_paths, [&](std::uint64_t b, std::uint64_t e) {
        FirstCycleOut out{t.data() + b, sign.data() + b, cens.data() + b};
        ops.first_cycle_batch(mv, plan, b, e - b,
                              starts.empty() ? nullptr : starts.data() + b,
                              config.start_point, max_steps, out);
    });

    std::vector<FirstCycleSample> samples(config.n_paths);
    for (std::uint64_t p = 0; p < config.n_paths; ++p) {
        samples[p].t = t[p];
        samples[p].sign = sign[p];
        samples[p].censored = cens[p] != 0;
    }
    return samples;
}

FirstCycleSample simulate_first_cycle(const CircleDiffusionModel& model,
                                      const SimulationConfig& config,
                                      std::uint64_t path_index) {
    if (path_index >= config.n_paths)
        throw ConfigError("path_index out of range for this configuration");
    config.validate(model);
    const ModelView mv = make_model_view(model);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(config.step_size, config.master_seed, 0.0, n_full);
    plan.bridge_correction = config.bridge_correction;
    const double censor = config.resolved_censoring_time(model);
    const std::uint64_t max_steps =
        static_cast<std::uint64_t>(std::ceil(censor / config.step_size));
    double start = config.start_point;
    if (config.stationary_start) start = stationary_starts(model, config)[path_index];
    // Counter-based streams make this identical to the batch entry.
    double t = 0.0;
    std::int8_t sg = 0;
    std::uint8_t ce = 0;
    FirstCycleOut out{&t, &sg, &ce};
    kernel_ops(config.backend)
        .first_cycle_batch(mv, plan, path_index, 1, nullptr, start, max_steps, out);
    return FirstCycleSample{t, sg, ce != 0};
}

CountingBatch simulate_counting_batch(const CircleDiffusionModel& model,
                                      const SimulationConfig& config,
                                      std::vector<double> checkpoints,
                                      const EntropyPotential* entropy) {
    config.validate(model);
    if (checkpoints.empty()) checkpoints.push_back(config.horizon);
    if (checkpoints.size() > 8) throw ConfigError("at most 8 checkpoints supported");
    for (std::size_t i = 0; i + 1 < checkpoints.size(); ++i)
        if (checkpoints[i] >= checkpoints[i + 1])
            throw ConfigError("checkpoints must be strictly increasing");
    if (std::abs(checkpoints.back() - config.horizon) > 1e-12)
        throw ConfigError("last checkpoint must equal the horizon");

    const ModelView mv = make_model_view(model);
    std::uint64_t n_full = 0;
    StepPlan plan = make_step_plan(config.step_size, config.master_seed, config.horizon, n_full);
    plan.bridge_correction = config.bridge_correction;
    if (entropy) {
        plan.fprime_table = entropy->derivative_table().data();
        plan.fprime_n = static_cast<int>(entropy->derivative_table().size());
    }

    CountingBatch batch;
    batch.checkpoints = checkpoints;
    batch.n_checkpoints = static_cast<std::uint32_t>(checkpoints.size());
    batch.n_plus.assign(config.n_paths * batch.n_checkpoints, 0);
    batch.n_minus.assign(config.n_paths * batch.n_checkpoints, 0);
    batch.x_final.assign(config.n_paths, 0.0);
    if (entropy) batch.strat_sum.assign(config.n_paths, 0.0);
    if (config.stationary_start) batch.start_points = stationary_starts(model, config);

    const KernelOps& ops = kernel_ops(config.backend);
    const int n_cp = static_cast<int>(batch.n_checkpoints);
    parallel_paths(config.n_paths, [&](std::uint64_t b, std::uint64_t e) {
        CountingOut out;
        out.n_plus = batch.n_plus.data() + b * batch.n_checkpoints;
        out.n_minus = batch.n_minus.data() + b * batch.n_checkpoints;
        out.x_final = batch.x_final.data() + b;
        out.strat_sum = entropy ? batch.strat_sum.data() + b : nullptr;
        ops.counting_batch(mv, plan, b, e - b,
                           batch.start_points.empty() ? nullptr
                                                      : batch.start_points.data() + b,
                           config.start_point, n_full, batch.checkpoints.data(), n_cp, out);
    });
    for (double v : batch.x_final)
        if (!std::isfinite(v)) throw SimulationError("non-finite terminal state", 0);
    return batch;
}

ConvergenceStudy first_cycle_convergence_study(const CircleDiffusionModel& model,
                                               SimulationConfig config, int levels) {
    ConvergenceStudy study;
    for (int lvl = 0; lvl < levels; ++lvl) {
        auto samples = simulate_first_cycle_batch(model, config);
        double sum_t = 0.0;
        std::uint64_t n_plus = 0, n_ok = 0, n_cens = 0;
        for (const auto& s : samples) {
            if (s.censored) {
                ++n_cens;
                continue;
            }
            ++n_ok;
            sum_t += s.t;
            if (s.sign > 0) ++n_plus;
        }
        study.dts.push_back(config.step_size);
        study.mean_t.push_back(n_ok ? sum_t / static_cast<double>(n_ok) : 0.0);
        study.plus_fraction.push_back(n_ok ? static_cast<double>(n_plus) / n_ok : 0.0);
        study.censored_fraction.push_back(static_cast<double>(n_cens) / samples.size());
        config.step_size *= 0.5;
    }
    return study;
}

} // namespace circlesim
