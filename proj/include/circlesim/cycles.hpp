#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "circlesim/simulate.hpp"

namespace circlesim {

/// Cycle events extracted from one lifted trajectory: after each forming
/// time the reference level resets to the crossing level (start +- integer),
/// and the next event fires when the path moves a full unit from it.
struct CycleEventLog {
    std::vector<double> forming_times;  // T_1 < T_2 < ...
    std::vector<int> signs;             // xi_n in {+1, -1}
    double horizon = 0.0;
    double start = 0.0;

    std::uint64_t total_count() const { return signs.size(); }
    std::uint64_t plus_count() const;
    std::uint64_t minus_count() const;
    std::int64_t net_count() const;  // W_t
    std::vector<double> gaps() const;  // tau_n = T_n - T_{n-1}, T_0 = 0
};

/// Scan a path for cycle events. Crossing times are linearly interpolated
/// within the step; one segment may produce several events.
CycleEventLog detect_cycle_events(const PathRecord& path);

struct EmpiricalCirculations {
    double j_plus = 0.0;
    double j_minus = 0.0;
    double j_net = 0.0;
    double horizon = 0.0;
};

EmpiricalCirculations empirical_circulations(const CycleEventLog& log);

/// Paired (sign, gap) sequences for independence tests; valid is false when
/// fewer than two events exist (empty-view marker).
struct RenewalView {
    bool valid = false;
    std::vector<int> signs;
    std::vector<double> gaps;
};

RenewalView renewal_view(const CycleEventLog& log);

/// Empirical flow Q_t over states {+1, -1} with xi_0 = +1:
/// Q_t(i,j) = (1/t) #\{n < N_t : xi_n = i, xi_{n+1} = j\}.
/// Index 0 is state +1, index 1 is state -1.
struct EmpiricalFlow {
    std::array<std::array<double, 2>, 2> q{};
    double horizon = 0.0;
    /// Contraction F(Q) = (sum_i Q(i,+1), sum_i Q(i,-1)).
    std::array<double, 2> contraction() const {
        return {q[0][0] + q[1][0], q[0][1] + q[1][1]};
    }
};

EmpiricalFlow empirical_flow(const CycleEventLog& log);

} // namespace circlesim
