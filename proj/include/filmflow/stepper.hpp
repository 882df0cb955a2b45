#pragma once

/// @file stepper.hpp
/// @brief Backward-Euler time integration of the regularized system
///
///   u_t = div(b_eps(u) grad w)
///   w   = delta u_t - Lap u + f_eps(u) + gamma(u) - g
///
/// with zero-flux boundaries. Each step solves the coupled (u, w) system by
/// Newton's method with an assembled Jacobian (mobility derivative included)
/// and a sparse direct factorization. The new u is finally written in flux
/// form, u_new = u_old + dt div(flux), so the cell sum of u is carried over
/// exactly up to rounding.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "filmflow/grid.hpp"
#include "filmflow/nonlinearities.hpp"

namespace filmflow {

enum class Scheme {
  fully_implicit,  ///< mobility, f_eps and gamma at the new level
  convex_concave,  ///< gamma (the non-convex part of W) taken at the old level
};

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct StepperConfig {
  double dt_init = 1e-4;
  double dt_min = 1e-12;
  double dt_max = 1e-2;
  double newton_tol = 1e-10;
  int newton_max = 30;
  Scheme scheme = Scheme::fully_implicit;
  FaceMean mobility_mean = FaceMean::arithmetic;
  int grow_after = 5;        ///< consecutive accepted steps before growing dt
  double grow_factor = 1.2;

  void validate() const;
};

struct SolverState {
  double t = 0.0;
  GridFunction u;
  GridFunction w;
  double dt = 0.0;           ///< step size to attempt next
  double last_dt = 0.0;      ///< size of the step that produced this state
  int newton_iters = 0;      ///< iterations of the last accepted solve
  int streak = 0;            ///< consecutive accepted steps since the last dt change
};

/// Thrown when Newton fails even at dt_min.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double t, double dt, double residual)
      : std::runtime_error(what), t_(t), dt_(dt), residual_(residual) {}
  double t() const noexcept { return t_; }
  double dt() const noexcept { return dt_; }
  double residual() const noexcept { return residual_; }

 private:
  double t_;
  double dt_;
  double residual_;
};

struct Residuals {
  GridFunction mass;       ///< (u_new - u_old)/dt - div(b grad w_new)
  GridFunction potential;  ///< w_new - [delta u_t - Lap u_new + f_eps + gamma - g]
};

Residuals residual(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u_old,
                   const GridFunction& u_new, const GridFunction& w_new, double dt);

/// Chemical potential of a state at rest: -Lap u + f_eps(u) + gamma(u) - g.
GridFunction rest_potential(const ModelParams& p, const GridFunction& u);

/// State at t = 0; the datum is mollified first when `mollify` is set.
SolverState initial_state(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u0,
                          bool mollify = true);

/// Advances one accepted step. `dt_cap` limits this step only (used to land
/// on a final time) without altering the step-size controller.
SolverState step(const ModelParams& p, const StepperConfig& cfg, const SolverState& state,
                 double dt_cap = 0.0);

struct StepObserver {
  std::function<void(const SolverState&)> on_start;
  std::function<void(const SolverState& before, const SolverState& after)> on_step;
};

struct RunSummary {
  SolverState final_state;
  std::size_t steps = 0;
  std::size_t newton_iterations = 0;
  double max_mass_residual = 0.0;   ///< max |mean(u) - mean(u0)| / |mean(u0)|
};

/// Integrates from `u0` (mollified) to time `t_final`.
RunSummary run(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u0,
               double t_final, const StepObserver& observer = {});

/// Continues an existing state to `t_final`.
RunSummary resume(const ModelParams& p, const StepperConfig& cfg, SolverState state,
                  double t_final, const StepObserver& observer = {});

/// Checkpoint CSV: a "# t=.. dt=.. last_dt=.. streak=.. newton_iters=.." header,
/// then "u,w" per cell. Resuming from it reproduces the uninterrupted run.
void write_checkpoint(std::ostream& os, const SolverState& state);
SolverState read_checkpoint(std::istream& is, const Grid& grid);

}  // namespace filmflow
