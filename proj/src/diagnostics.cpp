#include "filmflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace filmflow {

namespace {

double dirichlet_half(const GridFunction& u) {
  const double g = gradient_faces(u).norm();
  return 0.5 * g * g;
}

// Quantile by linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

CheckReport named(std::string name) {
  CheckReport r;
  r.name = std::move(name);
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

Recorder::Recorder(const ModelParams& p, const StepperConfig& cfg, bool track_entropy)
    : p_(p), cfg_(cfg), track_entropy_(track_entropy) {}

double Recorder::lyapunov(const GridFunction& u) const {
  return entropy_total(p_, u, true) + p_.delta * dirichlet_half(u);
}

DiagnosticsRecord Recorder::make_record(const SolverState& state) const {
  DiagnosticsRecord r;
  r.t = state.t;
  r.mass = integrate(state.u);
  r.energy = energy(p_, state.u, true);
  if (track_entropy_) {
    r.entropy = entropy_total(p_, state.u, true);
    r.lyapunov = r.entropy + p_.delta * dirichlet_half(state.u);
  }
  r.min_u = state.u.min();
  r.max_u = state.u.max();
  r.dissipation = dissipation_rate(p_, state.u, state.w, cfg_.mobility_mean);
  r.newton_iters = state.newton_iters;
  for (double nu : z_nus_) {
    if (r.min_u > 0.0) {
      double acc = 0.0;
      const double z_max = 1.0 / r.min_u;
      for (double v : state.u.values()) acc += std::pow((1.0 / v) / z_max, nu);
      r.z_norms[nu] = z_max * std::pow(acc * state.u.grid().cell_volume(), 1.0 / nu);
    } else {
      r.z_norms[nu] = INFINITY;
    }
  }
  return r;
}

DiagnosticsRecord Recorder::make_record(const SolverState& before, const SolverState& after) const {
  DiagnosticsRecord r = make_record(after);
  const double dt = after.last_dt;
  r.dt = dt;
  const GridFunction u_t = (1.0 / dt) * (after.u - before.u);
  r.viscous_dissipation = p_.delta * inner(u_t, u_t);
  const EnergyBreakdown e_old = energy(p_, before.u, true);
  r.energy_residual = r.energy.total - e_old.total + dt * (r.viscous_dissipation + r.dissipation);

  if (track_entropy_) {
    // Entropy production |Lap u|^2 - (f_eps(u) + gamma(u*), Lap u) + (g, Lap u).
    const GridFunction lap = laplacian(after.u);
    const GridFunction g = forcing_field(p_, after.u.grid());
    GridFunction reaction(after.u.grid());
    for (std::size_t c = 0; c < reaction.size(); ++c) {
      const double star = cfg_.scheme == Scheme::convex_concave ? before.u[c] : after.u[c];
      reaction[c] = eval_f_eps(p_, after.u[c]) + eval_gamma(p_, star);
    }
    const double production = inner(lap, lap) - inner(reaction, lap) + inner(g, lap);
    r.entropy_residual = r.lyapunov - lyapunov(before.u) + dt * production;
  }
  return r;
}

void Recorder::push(DiagnosticsRecord rec, const SolverState& state) {
  if (snapshot_every_ > 0 && records_.size() % snapshot_every_ == 0) {
    snapshots_.push_back({state.t, state.u});
  }
  records_.push_back(std::move(rec));
}

StepObserver Recorder::observer() {
  StepObserver obs;
  obs.on_start = [this](const SolverState& s) { push(make_record(s), s); };
  obs.on_step = [this](const SolverState& before, const SolverState& after) {
    push(make_record(before, after), after);
  };
  return obs;
}

nlohmann::json to_json(const CheckReport& report) {
  return {{"name", report.name},
          {"asserted", report.asserted},
          {"passed", report.passed},
          {"message", report.message},
          {"details", report.details}};
}

double max_mass_drift(const std::vector<DiagnosticsRecord>& records) {
  if (records.empty()) return 0.0;
  const double m0 = records.front().mass;
  double worst = 0.0;
  for (const auto& r : records) {
    worst = std::max(worst, std::abs(r.mass - m0) / std::max(std::abs(m0), 1e-300));
  }
  return worst;
}

CheckReport check_mass(const std::vector<DiagnosticsRecord>& records, const MassOptions& opts) {
  CheckReport rep = named("mass_conservation");
  const double drift = max_mass_drift(records);
  rep.passed = drift <= opts.tol;
  rep.message = "max relative mass drift " + fmt(drift);
  rep.details = {{"max_relative_drift", drift}, {"tol", opts.tol}};
  return rep;
}

CheckReport check_energy_law(const std::vector<DiagnosticsRecord>& records,
                             const EnergyLawOptions& opts) {
  CheckReport rep = named("energy_law");
  rep.asserted = opts.assert_monotone;
  double max_residual = 0.0;
  double max_increase = -INFINITY;
  double residual_min = 0.0;
  double residual_max = 0.0;
  std::size_t violations = 0;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double res = records[k].energy_residual;
    max_residual = std::max(max_residual, std::abs(res));
    residual_min = std::min(residual_min, res);
    residual_max = std::max(residual_max, res);
    const double inc = records[k].energy.total - records[k - 1].energy.total;
    max_increase = std::max(max_increase, inc);
    if (inc > opts.tol * (1.0 + std::abs(records[k - 1].energy.total))) ++violations;
  }
  if (records.size() < 2) max_increase = 0.0;
  rep.passed = !opts.assert_monotone || violations == 0;
  rep.message = "max |residual| " + fmt(max_residual) + ", largest energy increase " +
                fmt(max_increase) + ", " + std::to_string(violations) + " monotonicity violations";
  rep.details = {{"max_abs_residual", max_residual},
                 {"residual_min", residual_min},
                 {"residual_max", residual_max},
                 {"max_energy_increase", max_increase},
                 {"violations", violations},
                 {"tol", opts.tol}};
  return rep;
}

double energy_refinement_ratio(const std::vector<DiagnosticsRecord>& coarse,
                               const std::vector<DiagnosticsRecord>& fine) {
  auto max_res = [](const std::vector<DiagnosticsRecord>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, std::abs(r.energy_residual));
    return m;
  };
  const double f = max_res(fine);
  const double c = max_res(coarse);
  return f == 0.0 ? INFINITY : c / f;  // an exact fine run refines arbitrarily well
}

CheckReport check_energy_refinement(const std::vector<DiagnosticsRecord>& coarse,
                                    const std::vector<DiagnosticsRecord>& fine, double min_ratio) {
  CheckReport rep = named("energy_residual_refinement");
  const double ratio = energy_refinement_ratio(coarse, fine);
  rep.passed = ratio >= min_ratio;
  rep.message = "max-residual ratio under dt -> dt/2: " + fmt(ratio);
  rep.details = {{"ratio", std::isfinite(ratio) ? nlohmann::json(ratio) : nlohmann::json("inf")},
                 {"min_ratio", min_ratio}};
  return rep;
}

CheckReport check_entropy_law(const std::vector<DiagnosticsRecord>& records, const ModelParams& p,
                              const EntropyLawOptions& opts) {
  CheckReport rep = named("entropy_law");
  rep.asserted = p.g.is_zero() && p.gamma.is_zero();
  double max_residual = 0.0;
  double max_increase = -INFINITY;
  std::size_t violations = 0;
  for (std::size_t k = 1; k < records.size(); ++k) {
    max_residual = std::max(max_residual, std::abs(records[k].entropy_residual));
    const double inc = records[k].lyapunov - records[k - 1].lyapunov;
    max_increase = std::max(max_increase, inc);
    if (inc > opts.tol * (1.0 + std::abs(records[k - 1].lyapunov))) ++violations;
  }
  if (records.size() < 2) max_increase = 0.0;
  rep.passed = !rep.asserted || violations == 0;
  rep.message = "max |residual| " + fmt(max_residual) + ", largest Lyapunov increase " +
                fmt(max_increase) + (rep.asserted ? "" : " (report only: g or gamma nonzero)");
  rep.details = {{"max_abs_residual", max_residual},
                 {"max_lyapunov_increase", max_increase},
                 {"violations", violations},
                 {"tol", opts.tol}};
  return rep;
}

double kendall_tau(const std::vector<double>& values, double tie_tol) {
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      const double d = values[j] - values[i];
      const double scale = std::max(std::abs(values[i]), std::abs(values[j]));
      if (std::abs(d) <= tie_tol * scale) continue;
      (d > 0 ? concordant : discordant) += 1;
    }
  }
  const long long pairs = static_cast<long long>(values.size() * (values.size() - 1) / 2);
  if (pairs == 0) return 0.0;
  return static_cast<double>(concordant - discordant) / static_cast<double>(pairs);
}

CheckReport check_separation(const std::vector<DiagnosticsRecord>& records,
                             const SeparationOptions& opts) {
  CheckReport rep = named("separation");
  rep.asserted = opts.assert_floor;
  if (records.empty()) {
    rep.passed = !opts.assert_floor;
    rep.message = "no records";
    return rep;
  }
  const double t_end = records.back().t;
  const double t_min = opts.t_min >= 0.0 ? opts.t_min : records.front().t + 0.1 * (t_end - records.front().t);
  const double initial_min = records.front().min_u;

  std::vector<double> floors;
  std::vector<double> times;
  double overall_min = INFINITY;
  for (const auto& r : records) {
    overall_min = std::min(overall_min, r.min_u);
    if (r.t >= t_min) {
      floors.push_back(r.min_u);
      times.push_back(r.t);
    }
  }
  if (floors.empty()) {
    rep.passed = !opts.assert_floor;
    rep.message = "no records after the transient";
    return rep;
  }

  const double target = quantile(floors, opts.percentile);
  const double post_min = *std::min_element(floors.begin(), floors.end());
  double worst_dip = 0.0;  // largest relative drop below the running peak
  double peak = floors.front();
  for (double f : floors) {
    peak = std::max(peak, f);
    worst_dip = std::max(worst_dip, (peak - f) / peak);
  }

  std::vector<double> window_min;
  const std::size_t nw = std::max<std::size_t>(1, std::min(opts.windows, floors.size()));
  for (std::size_t k = 0; k < nw; ++k) {
    const std::size_t lo = k * floors.size() / nw;
    const std::size_t hi = (k + 1) * floors.size() / nw;
    window_min.push_back(*std::min_element(floors.begin() + lo, floors.begin() + hi));
  }
  const double tau = kendall_tau(window_min);

  const bool positive = overall_min > 0.0 && target > 0.0;
  // The target counts as established from the first time the floor reaches it.
  bool holds_target = true;
  bool established = false;
  for (double f : floors) {
    established = established || f >= target;
    if (established && f < (1.0 - opts.slack) * target) holds_target = false;
  }
  const bool no_dip = worst_dip <= opts.slack;
  const bool grew = opts.growth_factor <= 0.0 || post_min >= opts.growth_factor * initial_min;
  const bool trend = tau >= 0.0;
  const bool ok = positive && holds_target && no_dip && grew && trend;
  rep.passed = !opts.assert_floor || ok;

  std::string msg = "post-transient floor " + fmt(post_min) + " (target " + fmt(target) +
                    ", initial min " + fmt(initial_min) + ", Kendall tau " + fmt(tau) + ")";
  if (!positive) msg += "; nonpositive u encountered";
  if (!holds_target) msg += "; floor fell below target";
  if (!no_dip) msg += "; floor dipped below its running peak by " + fmt(worst_dip);
  if (!grew) msg += "; floor did not exceed " + fmt(opts.growth_factor) + "x the initial minimum";
  if (!trend) msg += "; window minima trend downward";
  if (!opts.assert_floor) msg += " (report only)";
  rep.message = msg;
  rep.details = {{"t_min", t_min},
                 {"initial_min", initial_min},
                 {"overall_min", overall_min},
                 {"floor_target", target},
                 {"post_transient_min", post_min},
                 {"worst_relative_dip", worst_dip},
                 {"growth", post_min / initial_min},
                 {"kendall_tau", tau},
                 {"window_minima", window_min},
                 {"holds", ok}};
  return rep;
}

DecayFit fit_dissipative_decay(const std::vector<DiagnosticsRecord>& records, const ModelParams& p) {
  DecayFit fit;
  if (p.kappa - 1.0 - p.s <= 0.0) return fit;
  fit.theta = (p.kappa - 1.0 - p.s) / (p.kappa - 1.0);
  // Least squares for -dE/dt ~ alpha x - c with x = E^theta.
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double e = records[k].energy.total;
    if (records[k].dt <= 0.0 || e < 0.0) continue;
    xs.push_back(std::pow(e, fit.theta));
    ys.push_back(-(records[k].energy.total - records[k - 1].energy.total) / records[k].dt);
  }
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double var = sxx - sx * sx / n;
  double slope = var > 0.0 ? (sxy - sx * sy / n) / var : 0.0;
  fit.alpha = std::max(slope, 0.0);
  const double intercept = (sy - fit.alpha * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double y_mean = sy / n;
  fit.c = -INFINITY;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pred = fit.alpha * xs[i] + intercept;
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - y_mean) * (ys[i] - y_mean);
    fit.c = std::max(fit.c, -ys[i] + fit.alpha * xs[i]);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.fitted = true;
  return fit;
}

CheckReport check_dissipative_decay(const std::vector<DiagnosticsRecord>& records,
                                    const ModelParams& p) {
  CheckReport rep = named("dissipative_decay");
  const DecayFit fit = fit_dissipative_decay(records, p);
  double e0 = records.empty() ? 0.0 : records.front().energy.total;
  double e_max = -INFINITY;
  for (const auto& r : records) e_max = std::max(e_max, r.energy.total);
  const bool bounded = records.empty() || e_max <= e0 + 1e-10 * (1.0 + std::abs(e0));
  rep.passed = bounded;
  rep.message = "energy bounded by its initial value: " + std::string(bounded ? "yes" : "no");
  if (fit.fitted) {
    rep.message += "; fit alpha " + fmt(fit.alpha) + ", c " + fmt(fit.c) + ", R^2 " + fmt(fit.r_squared);
  } else {
    rep.message += "; no power fit";
  }
  rep.details = {{"bounded", bounded},
                 {"initial_energy", e0},
                 {"max_energy", e_max},
                 {"fitted", fit.fitted},
                 {"theta", fit.theta},
                 {"alpha", fit.alpha},
                 {"c", fit.fitted ? nlohmann::json(fit.c) : nlohmann::json(nullptr)},
                 {"r_squared", fit.r_squared}};
  return rep;
}

CheckReport check_absorbing(const std::vector<DiagnosticsRecord>& a,
                            const std::vector<DiagnosticsRecord>& b, double rel_tol) {
  CheckReport rep = named("absorbing_energy");
  if (a.empty() || b.empty()) {
    rep.passed = false;
    rep.message = "missing records";
    return rep;
  }
  const double ea = a.back().energy.total;
  const double eb = b.back().energy.total;
  const double rel = std::abs(ea - eb) / std::max(std::abs(ea), std::abs(eb));
  rep.passed = rel <= rel_tol;
  rep.message = "initial energies " + fmt(a.front().energy.total) + " and " +
                fmt(b.front().energy.total) + ", terminal " + fmt(ea) + " and " + fmt(eb) +
                " (relative gap " + fmt(rel) + ")";
  rep.details = {{"initial", {a.front().energy.total, b.front().energy.total}},
                 {"terminal", {ea, eb}},
                 {"relative_gap", rel},
                 {"tol", rel_tol}};
  return rep;
}

CheckReport check_contraction(const std::vector<double>& times, const std::vector<double>& distances,
                              const ContractionOptions& opts) {
  CheckReport rep = named("contraction");
  std::vector<double> ts;
  std::vector<double> ls;
  double d_max = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    d_max = std::max(d_max, distances[i]);
    if (times[i] >= opts.fit_start && times[i] <= opts.fit_end && distances[i] > 0.0) {
      ts.push_back(times[i]);
      ls.push_back(std::log(distances[i]));
    }
  }
  if (ts.size() < 2) {
    rep.passed = false;
    rep.message = "too few samples in the fit window";
    return rep;
  }
  const double n = static_cast<double>(ts.size());
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * ls[i];
  }
  const double rate = (stl - st * sl / n) / (stt - st * st / n);
  const double a = (sl - rate * st) / n;
  double worst = 0.0;  // max d / envelope on the window
  for (std::size_t i = 0; i < ts.size(); ++i) {
    worst = std::max(worst, std::exp(ls[i] - a - rate * ts[i]));
  }
  const bool enveloped = worst <= opts.envelope_factor;
  const bool bounded = d_max <= opts.divergence_bound;
  rep.passed = enveloped && bounded;
  rep.message = "fitted rate " + fmt(rate) + ", worst envelope ratio " + fmt(worst) +
                ", max distance " + fmt(d_max);
  rep.details = {{"rate", rate},
                 {"log_prefactor", a},
                 {"worst_envelope_ratio", worst},
                 {"envelope_factor", opts.envelope_factor},
                 {"max_distance", d_max},
                 {"divergence_bound", opts.divergence_bound},
                 {"initial_distance", distances.empty() ? 0.0 : distances.front()}};
  return rep;
}

std::vector<double> cauchy_increments(const std::vector<GridFunction>& ladder) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i) out.push_back(l2_norm(ladder[i] - ladder[i + 1]));
  return out;
}

CheckReport check_eps_ladder(const std::vector<double>& eps, const std::vector<GridFunction>& finals) {
  CheckReport rep = named("eps_ladder");
  const std::vector<double> inc = cauchy_increments(finals);
  bool decreasing = inc.size() >= 2;
  for (std::size_t i = 1; i < inc.size(); ++i) decreasing = decreasing && inc[i] < inc[i - 1];
  rep.passed = decreasing;
  std::string msg = "L2 increments";
  for (double v : inc) msg += " " + fmt(v);
  rep.message = msg + (decreasing ? " (strictly decreasing)" : " (not strictly decreasing)");
  rep.details = {{"eps", eps}, {"increments", inc}};
  return rep;
}

void write_records_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
  os << "t,dt,mass,energy,dirichlet,potential_F,potential_Gamma,forcing,entropy,lyapunov,"
        "min_u,max_u,dissipation,viscous_dissipation,energy_residual,entropy_residual,newton_iters\n";
  os << std::setprecision(17);
  for (const auto& r : records) {
    os << r.t << ',' << r.dt << ',' << r.mass << ',' << r.energy.total << ',' << r.energy.dirichlet
       << ',' << r.energy.potential_F << ',' << r.energy.potential_Gamma << ',' << r.energy.forcing
       << ',' << r.entropy << ',' << r.lyapunov << ',' << r.min_u << ',' << r.max_u << ','
       << r.dissipation << ',' << r.viscous_dissipation << ',' << r.energy_residual << ','
       << r.entropy_residual << ',' << r.newton_iters << '\n';
  }
}

nlohmann::json to_json(const std::vector<ZNormEntry>& ladder) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : ladder) {
    out.push_back({{"n", e.n},
                   {"nu", e.nu},
                   {"tau", e.tau},
                   {"sup_lnu", e.sup_lnu},
                   {"lnu_l3nu", e.lnu_l3nu},
                   {"combined", e.combined}});
  }
  return out;
}

}  // namespace filmflow
