#include "filmflow/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "filmflow/elliptic.hpp"
#include "filmflow/errors.hpp"
#include "filmflow/functionals.hpp"

namespace filmflow {

namespace {

constexpr double kMachEps = std::numeric_limits<double>::epsilon();

double max_abs(const GridFunction& v) {
  double m = 0.0;
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

double sum_inv_h2(const Grid& g) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += 4.0 / (g.h(a) * g.h(a));
  return s;
}

// Face mobility and its derivatives with respect to the two adjacent cell
// values of b.
struct FaceMobility {
  double value;
  double d_lo;
  double d_hi;
};

FaceMobility face_mobility(double b_lo, double b_hi, FaceMean mean) {
  if (mean == FaceMean::arithmetic) return {0.5 * (b_lo + b_hi), 0.5, 0.5};
  const double s = b_lo + b_hi;
  if (!(s > 0.0)) return {0.0, 0.0, 0.0};
  return {2.0 * b_lo * b_hi / s, 2.0 * b_hi * b_hi / (s * s), 2.0 * b_lo * b_lo / (s * s)};
}

FaceField flux_of(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u,
                  const GridFunction& w) {
  return multiply(mobility_faces(p, u, cfg.mobility_mean), gradient_faces(w));
}

double gamma_at(const ModelParams& p, const StepperConfig& cfg, double u_old, double u_new) {
  return eval_gamma(p, cfg.scheme == Scheme::convex_concave ? u_old : u_new);
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // scaled max-norm of the last residual
  GridFunction u;
  GridFunction w;
};

// Newton iteration for one backward-Euler step of size dt.
NewtonOutcome newton_solve(const ModelParams& p, const StepperConfig& cfg,
                           const SolverState& state, double dt) {
  const Grid& grid = state.u.grid();
  const std::size_t n = grid.size();
  const GridFunction g = forcing_field(p, grid);
  const GridFunction& u_old = state.u;
  const double inv_h2_sum = sum_inv_h2(grid);

  NewtonOutcome out{false, 0, INFINITY, state.u, state.w};
  GridFunction& u = out.u;
  GridFunction& w = out.w;

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool pattern_ready = false;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(2 * n);

  for (int it = 0; it <= cfg.newton_max; ++it) {
    // Residuals; the mass rows are scaled by dt.
    const Residuals r = residual(p, cfg, u_old, u, w, dt);
    double r1 = 0.0;
    double r2 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      r1 = std::max(r1, std::abs(dt * r.mass[c]));
      r2 = std::max(r2, std::abs(r.potential[c]));
    }
    if (!std::isfinite(r1) || !std::isfinite(r2)) return out;

    double f_max = 0.0;
    double b_max = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      f_max = std::max(f_max, std::abs(eval_f_eps(p, u[c])));
      b_max = std::max(b_max, eval_b_eps(p, u[c]));
    }
    const double u_max = max_abs(u);
    const double w_max = max_abs(w);
    const double scale1 = 1.0 + u_max;
    const double scale2 = 1.0 + w_max + f_max;
    // Rounding floor of the discrete operators themselves.
    const double floor1 = 64.0 * kMachEps * (u_max + dt * b_max * w_max * inv_h2_sum);
    const double floor2 = 64.0 * kMachEps * (w_max + f_max + u_max * (p.delta / dt + inv_h2_sum));
    const double tol1 = std::max(cfg.newton_tol * scale1, floor1);
    const double tol2 = std::max(cfg.newton_tol * scale2, floor2);
    out.residual = std::max(r1 / scale1, r2 / scale2);
    out.iterations = it;
    if (r1 <= tol1 && r2 <= tol2) {
      out.converged = true;
      return out;
    }
    if (it == cfg.newton_max) return out;

    // Jacobian, unknown ordering [u_0..u_{n-1}, w_0..w_{n-1}].
    trip.clear();
    std::vector<double> b_cell(n);
    std::vector<double> db_cell(n);
    for (std::size_t c = 0; c < n; ++c) {
      b_cell[c] = eval_b_eps(p, u[c]);
      db_cell[c] = eval_b_eps_prime(p, u[c]);
    }
    const auto W = static_cast<int>(n);
    for (std::size_t c = 0; c < n; ++c) {
      const int i = static_cast<int>(c);
      trip.emplace_back(i, i, 1.0);
      trip.emplace_back(W + i, W + i, 1.0);
      double diag2 = -p.delta / dt - eval_f_eps_prime(p, u[c]);
      if (cfg.scheme == Scheme::fully_implicit) diag2 -= eval_gamma_prime(p, u[c]);
      trip.emplace_back(W + i, i, diag2);
    }
    for (int a = 0; a < grid.dim(); ++a) {
      const double inv_h2 = 1.0 / (grid.h(a) * grid.h(a));
      for (std::size_t f = 0; f < grid.face_count(a); ++f) {
        const auto [lo_c, hi_c] = grid.face_cells(a, f);
        const int lo = static_cast<int>(lo_c);
        const int hi = static_cast<int>(hi_c);
        const FaceMobility m = face_mobility(b_cell[lo_c], b_cell[hi_c], cfg.mobility_mean);
        const double dw = w[hi_c] - w[lo_c];
        // S1 = u - u_old - dt div(flux); flux = m (w_hi - w_lo) / h.
        const double kw = dt * m.value * inv_h2;
        trip.emplace_back(lo, W + hi, -kw);
        trip.emplace_back(lo, W + lo, kw);
        trip.emplace_back(hi, W + hi, kw);
        trip.emplace_back(hi, W + lo, -kw);
        const double ku_lo = dt * m.d_lo * db_cell[lo_c] * dw * inv_h2;
        const double ku_hi = dt * m.d_hi * db_cell[hi_c] * dw * inv_h2;
        trip.emplace_back(lo, lo, -ku_lo);
        trip.emplace_back(lo, hi, -ku_hi);
        trip.emplace_back(hi, lo, ku_lo);
        trip.emplace_back(hi, hi, ku_hi);
        // R2 contains + Lap u.
        trip.emplace_back(W + lo, hi, inv_h2);
        trip.emplace_back(W + lo, lo, -inv_h2);
        trip.emplace_back(W + hi, lo, inv_h2);
        trip.emplace_back(W + hi, hi, -inv_h2);
      }
    }
    Eigen::SparseMatrix<double> jac(2 * W, 2 * W);
    jac.setFromTriplets(trip.begin(), trip.end());
    jac.makeCompressed();
    if (!pattern_ready) {
      lu.analyzePattern(jac);
      pattern_ready = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) return out;

    for (std::size_t c = 0; c < n; ++c) {
      rhs[static_cast<Eigen::Index>(c)] = -dt * r.mass[c];
      rhs[static_cast<Eigen::Index>(n + c)] = -r.potential[c];
    }
    const Eigen::VectorXd delta_x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !delta_x.allFinite()) return out;
    for (std::size_t c = 0; c < n; ++c) {
      u[c] += delta_x[static_cast<Eigen::Index>(c)];
      w[c] += delta_x[static_cast<Eigen::Index>(n + c)];
    }
  }
  return out;
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "fully_implicit") return Scheme::fully_implicit;
  if (name == "convex_concave") return Scheme::convex_concave;
  throw ValidationError("scheme", "expected fully_implicit or convex_concave, got '" + name + "'");
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::fully_implicit ? "fully_implicit" : "convex_concave";
}

void StepperConfig::validate() const {
  if (!(dt_min > 0.0)) throw ValidationError("dt_min", "dt_min > 0 required");
  if (dt_init < dt_min) throw ValidationError("dt_init", "dt_init >= dt_min required");
  if (dt_max < dt_init) throw ValidationError("dt_max", "dt_max >= dt_init required");
  if (!(newton_tol > 0.0)) throw ValidationError("newton_tol", "newton_tol > 0 required");
  if (newton_max < 1) throw ValidationError("newton_max", "at least one Newton iteration");
  if (grow_after < 1) throw ValidationError("grow_after", "must be >= 1");
  if (grow_factor < 1.0) throw ValidationError("grow_factor", "must be >= 1");
}

Residuals residual(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u_old,
                   const GridFunction& u_new, const GridFunction& w_new, double dt) {
  const Grid& grid = u_new.grid();
  const GridFunction g = forcing_field(p, grid);
  const GridFunction div = divergence(flux_of(p, cfg, u_new, w_new));
  const GridFunction lap = laplacian(u_new);
  Residuals r{GridFunction(grid), GridFunction(grid)};
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const double ut = (u_new[c] - u_old[c]) / dt;
    r.mass[c] = ut - div[c];
    r.potential[c] = w_new[c] - (p.delta * ut - lap[c] + eval_f_eps(p, u_new[c]) +
                                 gamma_at(p, cfg, u_old[c], u_new[c]) - g[c]);
  }
  return r;
}

GridFunction rest_potential(const ModelParams& p, const GridFunction& u) {
  const GridFunction g = forcing_field(p, u.grid());
  const GridFunction lap = laplacian(u);
  GridFunction w(u.grid());
  for (std::size_t c = 0; c < u.size(); ++c) {
    w[c] = -lap[c] + eval_f_eps(p, u[c]) + eval_gamma(p, u[c]) - g[c];
  }
  return w;
}

SolverState initial_state(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u0,
                          bool mollify) {
  if (!u0.all_finite()) throw std::invalid_argument("initial datum must be finite");
  SolverState s{0.0, mollify ? mollify_initial(u0, p.eps) : u0, GridFunction(u0.grid()),
                cfg.dt_init, 0.0, 0, 0};
  s.w = rest_potential(p, s.u);
  return s;
}

SolverState step(const ModelParams& p, const StepperConfig& cfg, const SolverState& state,
                 double dt_cap) {
  double dt = state.dt;
  int streak = state.streak;
  for (;;) {
    const double dt_try = dt_cap > 0.0 ? std::min(dt, dt_cap) : dt;
    NewtonOutcome nt = newton_solve(p, cfg, state, dt_try);
    if (nt.converged) {
      SolverState next{state.t + dt_try, state.u, std::move(nt.w), dt, dt_try, nt.iterations,
                       streak + 1};
      // Flux-form update keeps the cell sum of u exact up to rounding.
      const GridFunction div = divergence(flux_of(p, cfg, nt.u, next.w));
      for (std::size_t c = 0; c < next.u.size(); ++c) next.u[c] += dt_try * div[c];
      if (next.streak >= cfg.grow_after) {
        next.dt = std::min(dt * cfg.grow_factor, cfg.dt_max);
        next.streak = 0;
      }
      return next;
    }
    if (dt <= cfg.dt_min) {
      std::ostringstream os;
      os << "Newton failed at t=" << state.t << " with dt=" << dt_try
         << " (scaled residual " << nt.residual << " after " << nt.iterations << " iterations)";
      throw StepFailure(os.str(), state.t, dt_try, nt.residual);
    }
    dt = std::max(0.5 * dt, cfg.dt_min);
    streak = 0;
  }
}

RunSummary resume(const ModelParams& p, const StepperConfig& cfg, SolverState state,
                  double t_final, const StepObserver& observer) {
  const double mass0 = mean(state.u);
  RunSummary summary{state, 0, 0, 0.0};
  if (observer.on_start) observer.on_start(state);
  // Relative slack so that accumulated rounding in t does not force a sliver step.
  const double t_slack = 1e-12 * std::max(1.0, std::abs(t_final));
  while (state.t < t_final - t_slack) {
    SolverState next = step(p, cfg, state, t_final - state.t);
    if (observer.on_step) observer.on_step(state, next);
    summary.newton_iterations += static_cast<std::size_t>(next.newton_iters);
    ++summary.steps;
    const double drift = std::abs(mean(next.u) - mass0) / std::max(std::abs(mass0), 1e-300);
    summary.max_mass_residual = std::max(summary.max_mass_residual, drift);
    state = std::move(next);
  }
  summary.final_state = std::move(state);
  return summary;
}

RunSummary run(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u0,
               double t_final, const StepObserver& observer) {
  return resume(p, cfg, initial_state(p, cfg, u0), t_final, observer);
}

void write_checkpoint(std::ostream& os, const SolverState& state) {
  os << std::setprecision(17) << "# t=" << state.t << " dt=" << state.dt << " last_dt=" << state.last_dt
     << " streak=" << state.streak << " newton_iters=" << state.newton_iters << '\n'
     << "u,w\n";
  for (std::size_t c = 0; c < state.u.size(); ++c) os << state.u[c] << ',' << state.w[c] << '\n';
}

SolverState read_checkpoint(std::istream& is, const Grid& grid) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error("checkpoint: missing '# t=...' header");
  }
  SolverState s{0.0, GridFunction(grid), GridFunction(grid), 0.0, 0.0, 0, 0};
  bool have_t = false, have_dt = false;
  {
    std::istringstream hs(line.substr(2));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (key == "t") {
        s.t = std::stod(value);
        have_t = true;
      } else if (key == "dt") {
        s.dt = std::stod(value);
        have_dt = true;
      } else if (key == "last_dt") {
        s.last_dt = std::stod(value);
      } else if (key == "streak") {
        s.streak = std::stoi(value);
      } else if (key == "newton_iters") {
        s.newton_iters = std::stoi(value);
      }
    }
  }
  if (!have_t || !have_dt) throw std::runtime_error("checkpoint: header needs t and dt");
  std::getline(is, line);  // column header
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: too few rows");
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("checkpoint: malformed row");
    s.u[c] = std::stod(line.substr(0, comma));
    s.w[c] = std::stod(line.substr(comma + 1));
  }
  return s;
}

}  // namespace filmflow
