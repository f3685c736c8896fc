#include "circlesim/kernels.hpp"

#include <cmath>

#include "circlesim/errors.hpp"

namespace circlesim {

namespace detail {
const KernelOps& scalar_kernel_ops();
#ifdef CIRCLESIM_BUILD_AVX2
const KernelOps& avx2_kernel_ops();
#endif
} // namespace detail

bool avx2_supported() {
#ifdef CIRCLESIM_BUILD_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

KernelBackend resolve_backend(KernelBackend requested) {
    switch (requested) {
        case KernelBackend::auto_detect:
            return avx2_supported() ? KernelBackend::avx2 : KernelBackend::scalar;
        case KernelBackend::avx2:
            if (!avx2_supported())
                throw Error("AVX2 backend requested but not available on this host");
            return KernelBackend::avx2;
        default:
            return KernelBackend::scalar;
    }
}

const char* backend_name(KernelBackend resolved) {
    return resolved == KernelBackend::avx2 ? "avx2" : "scalar";
}

const KernelOps& kernel_ops(KernelBackend backend) {
    const KernelBackend resolved = resolve_backend(backend);
#ifdef CIRCLESIM_BUILD_AVX2
    if (resolved == KernelBackend::avx2) return detail::avx2_kernel_ops();
#endif
    (void)resolved;
    return detail::scalar_kernel_ops();
}

ModelView make_model_view(const CircleDiffusionModel& model) {
    auto view_of = [](const PeriodicCoefficient& c) {
        CoeffView v;
        if (c.kind() == CoeffKind::fourier) {
            if (c.is_constant()) {
                v.kind = 0;
                v.c0 = c.constant_term();
            } else {
                v.kind = 1;
                v.c0 = c.constant_term();
                v.cos_coeff = c.cos_coeffs().data();
                v.sin_coeff = c.sin_coeffs().data();
                v.harmonics = c.harmonics();
            }
        } else if (c.spline_order() == 1) {
            v.kind = 2;
            v.table = c.table_values().data();
            v.table_n = static_cast<int>(c.table_values().size());
        } else {
            v.kind = 3;
            v.cells = c.cell_coeffs().data();
            v.table_n = static_cast<int>(c.table_values().size());
        }
        return v;
    };
    return ModelView{view_of(model.drift_coeff()), view_of(model.diffusion_coeff())};
}

StepPlan make_step_plan(double dt, std::uint64_t seed, double horizon,
                        std::uint64_t& n_full_steps_out) {
    StepPlan plan;
    plan.dt = dt;
    plan.sqrt_dt = std::sqrt(dt);
    plan.seed = seed;
    if (horizon <= 0.0) {
        n_full_steps_out = 0;
        return plan;
    }
    const double raw = horizon / dt;
    std::uint64_t n_full = static_cast<std::uint64_t>(std::floor(raw + 1e-9));
    double rem = horizon - static_cast<double>(n_full) * dt;
    if (rem > 1e-9 * dt) {
        plan.last_dt = rem;
        plan.sqrt_last_dt = std::sqrt(rem);
    }
    n_full_steps_out = n_full;
    return plan;
}

} // namespace circlesim
