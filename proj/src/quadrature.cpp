#include "circlesim/quadrature.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace circlesim {

namespace {

struct NodeWeight {
    double x, w;
};

constexpr NodeWeight kGauss7[7] = {
    {-0.94910791234275852, 0.12948496616886969},
    {-0.74153118559939444, 0.27970539148927667},
    {-0.40584515137739717, 0.38183005050511894},
    {0.0, 0.41795918367346939},
    {0.40584515137739717, 0.38183005050511894},
    {0.74153118559939444, 0.27970539148927667},
    {0.94910791234275852, 0.12948496616886969},
};

constexpr NodeWeight kGauss15[15] = {
    {-0.98799251802048543, 0.030753241996117268},
    {-0.9372733924007059, 0.070366047488108125},
    {-0.84820658341042722, 0.10715922046717194},
    {-0.72441773136017005, 0.13957067792615431},
    {-0.57097217260853885, 0.16626920581699393},
    {-0.39415134707756337, 0.18616100001556221},
    {-0.20119409399743452, 0.19843148532711158},
    {0.0, 0.20257824192556127},
    {0.20119409399743452, 0.19843148532711158},
    {0.39415134707756337, 0.18616100001556221},
    {0.57097217260853885, 0.16626920581699393},
    {0.72441773136017005, 0.13957067792615431},
    {0.84820658341042722, 0.10715922046717194},
    {0.9372733924007059, 0.070366047488108125},
    {0.98799251802048543, 0.030753241996117268},
};

struct PanelResult {
    double value;
    double error;
};

PanelResult gauss_pair(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double g7 = 0.0, g15 = 0.0;
    for (const auto& nw : kGauss7) g7 += nw.w * f(mid + half * nw.x);
    for (const auto& nw : kGauss15) g15 += nw.w * f(mid + half * nw.x);
    g7 *= half;
    g15 *= half;
    if (!std::isfinite(g15) || !std::isfinite(g7))
        return {0.0, std::numeric_limits<double>::infinity()};
    return {g15, std::abs(g15 - g7)};
}

double composite_simpson(const std::function<double(double)>& f, double a, double b,
                         std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < panels; ++i)
        acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return acc * h / 3.0;
}

} // namespace

double gauss15_panel(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double g15 = 0.0;
    for (const auto& nw : kGauss15) g15 += nw.w * f(mid + half * nw.x);
    return g15 * half;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }

    struct Interval {
        double a, b, value, error;
    };
    PanelResult whole = gauss_pair(f, a, b);
    std::vector<Interval> stack{{a, b, whole.value, whole.error}};
    double total = whole.value;
    double total_err = whole.error;
    constexpr std::size_t kMaxIntervals = 1 << 15;
    std::size_t splits = 0;

    while (total_err > abs_tol && splits < kMaxIntervals) {
        // split the worst interval
        std::size_t worst = 0;
        for (std::size_t i = 1; i < stack.size(); ++i)
            if (stack[i].error > stack[worst].error) worst = i;
        const Interval iv = stack[worst];
        const double mid = 0.5 * (iv.a + iv.b);
        if (mid <= iv.a || mid >= iv.b) break;  // interval at machine resolution
        PanelResult left = gauss_pair(f, iv.a, mid);
        PanelResult right = gauss_pair(f, mid, iv.b);
        total += left.value + right.value - iv.value;
        total_err += left.error + right.error - iv.error;
        stack[worst] = {iv.a, mid, left.value, left.error};
        stack.push_back({mid, iv.b, right.value, right.error});
        ++splits;
    }
    if (total_err <= abs_tol) return sign * total;

    // Simpson fallback with one Richardson check against half resolution.
    const double s1 = composite_simpson(f, a, b, 1 << 16);
    const double s0 = composite_simpson(f, a, b, 1 << 15);
    const double err = std::abs(s1 - s0) / 15.0;
    if (err <= abs_tol) return sign * s1;
    double achieved = std::min(total_err, err);
    if (!std::isfinite(achieved)) achieved = std::numeric_limits<double>::infinity();
    throw QuadratureError("adaptive quadrature did not converge", achieved);
}

} // namespace circlesim
