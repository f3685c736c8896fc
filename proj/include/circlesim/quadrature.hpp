#pragma once

#include <functional>

#include "circlesim/errors.hpp"

namespace circlesim {

/// Adaptive quadrature with an embedded Gauss 7/15 error estimate and a
/// composite-Simpson fallback at 2^16 panels. Absolute tolerance; throws
/// QuadratureError (carrying the achieved tolerance) when both stages miss.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12);

/// Non-adaptive 15-point Gauss panel; used for the incremental grid sweeps
/// where panels are already tiny.
double gauss15_panel(const std::function<double(double)>& f, double a, double b);

} // namespace circlesim
