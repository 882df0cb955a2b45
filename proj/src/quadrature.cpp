#include "filmflow/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace filmflow::quadrature {

namespace {

constexpr unsigned kMaxDepth = 20;
constexpr double kRelTol = 1e-13;

// Boost compares the panel error on the reference interval with a tolerance
// scaled by the panel width, so short intervals would split down to the depth
// limit. Integrating over [0, 1] keeps the two on the same footing.
double gk(const std::function<double(double)>& fn, double lo, double hi) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double width = hi - lo;
  auto unit = [&](double t) { return fn(lo + width * t) * width; };
  return Rule::integrate(unit, 0.0, 1.0, kMaxDepth, kRelTol);
}

}  // namespace

double integrate(const std::function<double(double)>& fn, double lo, double hi) {
  if (lo == hi) return 0.0;
  if (lo > hi) return -integrate(fn, hi, lo);
  if (lo > 0.0) {
    auto in_log = [&fn](double t) {
      const double x = std::exp(t);
      return fn(x) * x;
    };
    return gk(in_log, std::log(lo), std::log(hi));
  }
  return gk(fn, lo, hi);
}

double integrate_piecewise(const std::function<double(double)>& fn, double lo,
                           double hi, std::vector<double> breakpoints) {
  if (lo == hi) return 0.0;
  if (lo > hi) return -integrate_piecewise(fn, hi, lo, std::move(breakpoints));
  std::sort(breakpoints.begin(), breakpoints.end());
  double total = 0.0;
  double left = lo;
  for (double bp : breakpoints) {
    if (bp <= left || bp >= hi) continue;
    total += integrate(fn, left, bp);
    left = bp;
  }
  return total + integrate(fn, left, hi);
}

}  // namespace filmflow::quadrature
