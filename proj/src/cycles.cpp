#include "circlesim/cycles.hpp"

#include "circlesim/detail/kernel_core.hpp"

namespace circlesim {

std::uint64_t CycleEventLog::plus_count() const {
    std::uint64_t n = 0;
    for (int s : signs) n += s > 0 ? 1 : 0;
    return n;
}

std::uint64_t CycleEventLog::minus_count() const {
    return signs.size() - plus_count();
}

std::int64_t CycleEventLog::net_count() const {
    std::int64_t w = 0;
    for (int s : signs) w += s;
    return w;
}

std::vector<double> CycleEventLog::gaps() const {
    std::vector<double> g(forming_times.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < forming_times.size(); ++i) {
        g[i] = forming_times[i] - prev;
        prev = forming_times[i];
    }
    return g;
}

CycleEventLog detect_cycle_events(const PathRecord& path) {
    if (path.positions.empty()) throw Error("detect_cycle_events: empty path");
    CycleEventLog log;
    log.start = path.positions.front();
    log.horizon = path.times.empty() ? 0.0 : path.times.back();
    double ref = log.start;
    detail::CrossEvent ev[8];
    for (std::size_t i = 0; i + 1 < path.positions.size(); ++i) {
        const double t0 = path.times[i];
        const double t1 = path.times[i + 1];
        const int n_ev =
            detail::scan_crossings(path.positions[i], path.positions[i + 1], ref, ev, 8);
        for (int k = 0; k < n_ev; ++k) {
            log.forming_times.push_back(t0 + ev[k].lambda * (t1 - t0));
            log.signs.push_back(ev[k].sign);
        }
    }
    return log;
}

EmpiricalCirculations empirical_circulations(const CycleEventLog& log) {
    if (!(log.horizon > 0.0)) throw Error("empirical_circulations: horizon must be positive");
    EmpiricalCirculations c;
    c.horizon = log.horizon;
    c.j_plus = static_cast<double>(log.plus_count()) / log.horizon;
    c.j_minus = static_cast<double>(log.minus_count()) / log.horizon;
    c.j_net = c.j_plus - c.j_minus;
    return c;
}

RenewalView renewal_view(const CycleEventLog& log) {
    RenewalView view;
    if (log.signs.size() < 2) return view;
    view.valid = true;
    view.signs = log.signs;
    view.gaps = log.gaps();
    return view;
}

EmpiricalFlow empirical_flow(const CycleEventLog& log) {
    EmpiricalFlow flow;
    flow.horizon = log.horizon;
    if (!(log.horizon > 0.0)) return flow;
    int prev = +1;  // xi_0 = 1
    for (int s : log.signs) {
        const int a = prev > 0 ? 0 : 1;
        const int b = s > 0 ? 0 : 1;
        flow.q[a][b] += 1.0 / log.horizon;
        prev = s;
    }
    return flow;
}

} // namespace circlesim
