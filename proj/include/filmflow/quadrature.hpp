#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

namespace filmflow::quadrature {

/// Adaptive Gauss-Kronrod integral of `fn` over [lo, hi] (either order).
/// Positive intervals are integrated in the variable t = log(x) so that
/// power-law integrands spanning many decades stay well resolved.
double integrate(const std::function<double(double)>& fn, double lo, double hi);

/// As integrate(), splitting at every breakpoint strictly inside the interval.
double integrate_piecewise(const std::function<double(double)>& fn, double lo,
                           double hi, std::vector<double> breakpoints);

}  // namespace filmflow::quadrature
