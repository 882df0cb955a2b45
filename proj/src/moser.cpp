#include "filmflow/moser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "filmflow/errors.hpp"

namespace filmflow {

namespace {

void require_dim(int d) {
  if (d != 2 && d != 3) throw std::invalid_argument("Moser schedules exist for d = 2 or 3");
}

InterpolationExponents from_reciprocals(double inv_p, double inv_q, double inv_p_star,
                                        double inv_q_star, double theta) {
  auto recip = [](double v) { return v == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / v; };
  return {recip(inv_p), recip(inv_q), recip(inv_p_star), recip(inv_q_star), theta};
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// ||z||_{L^r} of z = 1/u, computed with a max-scaling so that large r does not
// overflow.
double z_norm(const GridFunction& u, double r) {
  double z_max = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    if (!(u[c] > 0.0)) throw SingularityError("z = 1/u needs u > 0", c, u[c]);
    z_max = std::max(z_max, 1.0 / u[c]);
  }
  double sum = 0.0;
  for (double v : u.values()) sum += std::pow((1.0 / v) / z_max, r);
  return z_max * std::pow(sum * u.grid().cell_volume(), 1.0 / r);
}

// (a^r + b^r)^{1/r} without overflow.
double power_sum(double a, double b, double r) {
  const double m = std::max(a, b);
  if (m == 0.0) return 0.0;
  return m * std::pow(std::pow(a / m, r) + std::pow(b / m, r), 1.0 / r);
}

}  // namespace

bool moser_feasible(int d, double s, double kappa) {
  require_dim(d);
  if (d == 3) return kappa > 2.0 * s + 3.0;
  return kappa > s + 1.0 && s + 1.0 >= 2.0;
}

double phase1_threshold(int d, double s) {
  require_dim(d);
  return d == 3 ? 3.0 * (s + 2.0) : s + 2.0;
}

double phase2_fixed_point(int d, double s, double kappa) {
  require_dim(d);
  if (d == 3) return 3.0 * (kappa - s - 1.0);
  return std::numeric_limits<double>::infinity();
}

double phase1_next(int d, double s, double nu) {
  require_dim(d);
  if (d == 3) return (7.0 * nu - 3.0 * s - 6.0) / 6.0;
  return 1.5 * nu - 0.5 * (s + 2.0);
}

double phase2_next(int d, double s, double kappa, double nu) {
  require_dim(d);
  if (d == 3) return 5.0 / 6.0 * nu + 0.5 * (kappa - s - 1.0);
  return nu + 0.5 * (kappa - 1.0 - s);
}

InterpolationExponents phase1_exponents(int d, double s, double nu) {
  require_dim(d);
  if (d == 3) {
    const double c = 3.0 * s / (10.0 * nu);
    const double theta = (15.0 * nu - 9.0 * s) / (35.0 * nu - 15.0 * s);
    return from_reciprocals(0.5 + c, 1.0 / 6.0 + c, 0.5 - c, 5.0 / 6.0 - c, theta);
  }
  const double c = s / (4.0 * nu);
  const double theta = (2.0 * nu - s) / (3.0 * nu - s);
  return from_reciprocals(0.5 + c, c, 0.5 - c, 1.0 - c, theta);
}

InterpolationExponents phase2_exponents(int d, double s, double kappa, double nu) {
  require_dim(d);
  const double x = kappa + nu + 1.0;
  if (d == 3) {
    const double theta = 1.0 / (1.0 + 2.0 * nu / (3.0 * x - 3.0 * s));
    return from_reciprocals(0.5 * (1.0 + s / x), 0.5 * (1.0 / 3.0 + s / x), 0.5 * (1.0 - s / x),
                            0.5 * (5.0 / 3.0 - s / x), theta);
  }
  const double theta = 1.0 / (1.0 + nu / (x - s));
  return from_reciprocals(0.5 * (1.0 + s / x), s / (2.0 * x), 0.5 * (1.0 - s / x),
                          1.0 - s / (2.0 * x), theta);
}

double phase1_next_from_exponents(int d, double s, double nu) {
  const InterpolationExponents e = phase1_exponents(d, s, nu);
  // The previous bound controls z in L^{5 nu/3} (d = 3) or L^{2 nu} (d = 2);
  // the first interpolation identity reads 1/(p*(nu'+1)) = theta / nu (d = 3)
  // or theta / (2 nu) (d = 2).
  const double controlled = d == 3 ? nu : 2.0 * nu;
  return controlled / (e.p_star * e.theta) - 1.0;
}

double phase2_next_from_exponents(int d, double s, double kappa, double nu) {
  const InterpolationExponents e = phase2_exponents(d, s, kappa, nu);
  return (kappa + nu + 1.0) / (e.p_star * e.theta) - 1.0;
}

MoserSchedule build_schedule(int d, double s, double kappa, double iota, double eps_time,
                             const ScheduleOptions& opts) {
  require_dim(d);
  if (!(eps_time > 0.0)) throw std::invalid_argument("eps_time must be positive");
  MoserSchedule out;
  out.d = d;
  out.s = s;
  out.kappa = kappa;
  out.eps_time = eps_time;
  out.tau_bound = eps_time * std::numbers::pi * std::numbers::pi / 6.0;
  if (d == 3 && !(iota > 0.0 && iota < 1.0)) {
    throw std::invalid_argument("iota must lie in (0, 1) for d = 3");
  }
  out.nu0 = 1.0 + (d == 3 ? iota : kappa - 2.0);
  out.feasible = moser_feasible(d, s, kappa);
  if (!out.feasible) return out;

  const double threshold = phase1_threshold(d, s);
  double nu = out.nu0;
  double tau = 0.0;
  int n = 0;
  // No map produced nu_0, so its exponents are undefined.
  const double none = std::numeric_limits<double>::quiet_NaN();
  out.exponents.push_back({0, nu, MoserPhase::bootstrap, {none, none, none, none, none}, 0.0});
  out.tau_ladder.push_back(0.0);

  auto advance = [&](MoserPhase phase) {
    const InterpolationExponents e =
        phase == MoserPhase::bootstrap ? phase2_exponents(d, s, kappa, nu) : phase1_exponents(d, s, nu);
    nu = phase == MoserPhase::bootstrap ? phase2_next(d, s, kappa, nu) : phase1_next(d, s, nu);
    ++n;
    const double increment = eps_time * opts.tau_fraction / (static_cast<double>(n) * n);
    tau += increment;
    out.tau_increment_sum += increment;
    out.exponents.push_back({n, nu, phase, e, tau});
    out.tau_ladder.push_back(tau);
  };

  while (nu <= threshold) {
    if (out.phase2_steps >= opts.max_bootstrap) {
      throw std::runtime_error("bootstrap phase did not reach the handover exponent");
    }
    advance(MoserPhase::bootstrap);
    ++out.phase2_steps;
  }
  for (int k = 0; k < opts.main_steps; ++k) {
    advance(MoserPhase::main);
    ++out.phase1_steps;
  }
  return out;
}

nlohmann::json to_json(const MoserSchedule& schedule) {
  nlohmann::json steps = nlohmann::json::array();
  for (const MoserStep& st : schedule.exponents) {
    steps.push_back({{"n", st.n},
                     {"nu", st.nu},
                     {"phase", static_cast<int>(st.phase)},
                     {"theta", finite_or_null(st.exponents.theta)},
                     {"p", finite_or_null(st.exponents.p)},
                     {"q", finite_or_null(st.exponents.q)},
                     {"tau", st.tau}});
  }
  return {{"d", schedule.d},
          {"s", schedule.s},
          {"kappa", schedule.kappa},
          {"nu0", schedule.nu0},
          {"eps_time", schedule.eps_time},
          {"phase2_steps", schedule.phase2_steps},
          {"phase1_steps", schedule.phase1_steps},
          {"tau_increment_sum", schedule.tau_increment_sum},
          {"tau_bound", schedule.tau_bound},
          {"exponents", steps},
          {"feasible", schedule.feasible}};
}

std::vector<ZNormEntry> z_norm_ladder(const std::vector<Snapshot>& snapshots,
                                      const MoserSchedule& schedule) {
  std::vector<ZNormEntry> out;
  if (snapshots.empty()) return out;
  const double t0 = snapshots.front().t;
  for (const MoserStep& st : schedule.exponents) {
    ZNormEntry e{st.n, st.nu, st.tau, 0.0, 0.0, 0.0};
    double prev_t = 0.0;
    double prev_val = -1.0;
    std::vector<double> pieces;  // ||z||_{L^{3nu}} samples with their quadrature weights
    std::vector<double> weights;
    for (const Snapshot& snap : snapshots) {
      if (snap.t < t0 + st.tau) continue;
      e.sup_lnu = std::max(e.sup_lnu, z_norm(snap.u, st.nu));
      const double a = z_norm(snap.u, 3.0 * st.nu);
      if (prev_val >= 0.0) {
        // Trapezoid in time on a^nu.
        const double w = 0.5 * (snap.t - prev_t);
        pieces.push_back(prev_val);
        weights.push_back(w);
        pieces.push_back(a);
        weights.push_back(w);
      }
      prev_t = snap.t;
      prev_val = a;
    }
    if (!pieces.empty()) {
      const double a_max = *std::max_element(pieces.begin(), pieces.end());
      double acc = 0.0;
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        acc += weights[i] * std::pow(pieces[i] / a_max, st.nu);
      }
      e.lnu_l3nu = a_max * std::pow(acc, 1.0 / st.nu);
    }
    e.combined = power_sum(e.sup_lnu, e.lnu_l3nu, st.nu);
    out.push_back(e);
  }
  return out;
}

}  // namespace filmflow
