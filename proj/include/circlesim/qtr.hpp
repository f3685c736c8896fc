#pragma once

#include <vector>

#include "circlesim/simulate.hpp"
#include "circlesim/verification.hpp"

namespace circlesim {

/// Markers of the quasi-time reversal: tau is the first (interpolated) time
/// |w| = 1, g_tau the last (interpolated) zero strictly before tau.
struct QtrMarkers {
    double tau = 0.0;
    double g_tau = 0.0;
    int terminal_sign = 0;  // w(tau)
};

/// Throws NotHitError when the path never reaches +-1 (caller extends the
/// horizon). Requires the path to start at 0.
QtrMarkers find_markers(const PathRecord& path);

/// Pathwise image under the quasi-time reversal, resampled onto the
/// original time grid by linear interpolation:
///   t <  g_tau:           unchanged
///   g_tau <= t < tau:     w(g_tau + tau - t) -+ 1     (sign of w(tau))
///   t >= tau:             w(t) -+ 2
PathRecord apply_qtr(const PathRecord& path, const QtrMarkers& markers);

/// Exact variant keeping the reversed segment's own (non-uniform) sample
/// times instead of resampling onto the grid.
PathRecord apply_qtr_exact(const PathRecord& path, const QtrMarkers& markers);

/// Path functionals compared between W and phi(W).
struct QtrFunctionals {
    double tau = 0.0;
    double g_tau = 0.0;
    double sup_abs = 0.0;      // sup |w| on [0, tau]
    double at_fixed_time = 0.0;
    double occupation = 0.0;   // time in (0, inf) before tau
};

QtrFunctionals qtr_functionals(const PathRecord& path, double fixed_time_u);

struct QtrInvarianceResult {
    VerificationReport report;
    // per-functional {name, ks_stat, p_value, n_effective}
    struct Entry {
        std::string name;
        double ks_stat;
        double p_value;
        std::uint64_t n_effective;
    };
    std::vector<Entry> entries;
};

/// Simulates standard Brownian paths (b = 0, sigma = 1 enforced), splits
/// them into two independent halves, applies the reversal to the second
/// half and compares the functionals by two-sample KS tests. config.n_paths
/// is the total path count; each half gets n_paths / 2. Bonferroni across
/// functionals at level alpha.
QtrInvarianceResult qtr_invariance_test(const SimulationConfig& config,
                                        double fixed_time_u = 0.5, double alpha = 0.01);

} // namespace circlesim
