#pragma once

/// @file moser.hpp
/// @brief Exponent schedules of the Moser iteration for z = 1/u.
///
/// The iteration starts from nu_0 = 1 + iota and runs in two phases:
///   phase 2 (bootstrap), while nu <= handover threshold:
///     d = 3:  nu' = (5/6) nu + (kappa - s - 1)/2     fixed point 3(kappa - s - 1)
///     d = 2:  nu' = nu + (kappa - 1 - s)/2            constant increment
///   phase 1 (main ladder), once nu > threshold:
///     d = 3:  nu' = (7 nu - 3 s - 6)/6                threshold 3(s + 2)
///     d = 2:  nu' = (3/2) nu - (s + 2)/2              threshold s + 2
/// Feasibility: kappa > 2s + 3 (d = 3), kappa > s + 1 >= 2 (d = 2).

#include <string>
#include <vector>

#include "json.hpp"

#include "filmflow/grid.hpp"
#include "filmflow/nonlinearities.hpp"

namespace filmflow {

enum class MoserPhase { bootstrap = 2, main = 1 };

/// Interpolation exponents attached to one step of the ladder; p, q are the
/// Lebesgue exponents of the w-estimate and theta the interpolation weight.
struct InterpolationExponents {
  double p = 0.0;
  double q = 0.0;
  double p_star = 0.0;
  double q_star = 0.0;
  double theta = 0.0;
};

struct MoserStep {
  int n = 0;
  double nu = 0.0;
  MoserPhase phase = MoserPhase::bootstrap;  ///< phase of the map that produced nu (n = 0: start)
  InterpolationExponents exponents;          ///< computed from nu_{n-1}
  double tau = 0.0;                          ///< initial time of the n-th window
};

struct MoserSchedule {
  int d = 3;
  double s = 0.0;
  double kappa = 0.0;
  double nu0 = 0.0;
  double eps_time = 0.0;
  int phase2_steps = 0;
  int phase1_steps = 0;
  bool feasible = false;
  std::vector<MoserStep> exponents;
  std::vector<double> tau_ladder;
  double tau_increment_sum = 0.0;
  double tau_bound = 0.0;  ///< eps_time * pi^2 / 6
};

bool moser_feasible(int d, double s, double kappa);
double phase1_threshold(int d, double s);
/// Fixed point of the bootstrap map; +infinity for d = 2.
double phase2_fixed_point(int d, double s, double kappa);

double phase1_next(int d, double s, double nu);
double phase2_next(int d, double s, double kappa, double nu);

/// Exponents used to pass from nu to the next step.
InterpolationExponents phase1_exponents(int d, double s, double nu);
InterpolationExponents phase2_exponents(int d, double s, double kappa, double nu);

/// The successor obtained from the interpolation route,
/// nu' = X / (p* theta) - 1 with X the exponent the previous bound controls.
double phase1_next_from_exponents(int d, double s, double nu);
double phase2_next_from_exponents(int d, double s, double kappa, double nu);

struct ScheduleOptions {
  int main_steps = 12;          ///< phase-1 steps recorded after the handover
  int max_bootstrap = 1000000;  ///< guard on the phase-2 climb
  double tau_fraction = 0.5;    ///< position of tau_n inside its admissible window
};

/// Builds the ladder. `iota` is used for d = 3; for d = 2 iota = kappa - 2.
/// Infeasible parameters return feasible = false with an empty ladder.
MoserSchedule build_schedule(int d, double s, double kappa, double iota, double eps_time,
                             const ScheduleOptions& opts = {});

nlohmann::json to_json(const MoserSchedule& schedule);

/// Time-stamped field used by the z-norm ladder.
struct Snapshot {
  double t = 0.0;
  GridFunction u;
};

struct ZNormEntry {
  int n = 0;
  double nu = 0.0;
  double tau = 0.0;
  double sup_lnu = 0.0;       ///< sup_{t >= tau} ||z(t)||_{L^nu}
  double lnu_l3nu = 0.0;      ///< (int_tau^T ||z||_{L^{3nu}}^nu dt)^{1/nu}
  double combined = 0.0;      ///< (sup^nu + lnu_l3nu^nu)^{1/nu}, embedding constant 1
};

/// Space-time norms of z = 1/u over [tau_n, T] for every ladder exponent.
/// Snapshot times shift tau_n by the first snapshot time.
std::vector<ZNormEntry> z_norm_ladder(const std::vector<Snapshot>& snapshots,
                                      const MoserSchedule& schedule);

}  // namespace filmflow
