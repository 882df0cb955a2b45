#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "filmflow/elliptic.hpp"
#include "filmflow/errors.hpp"
#include "filmflow/moser.hpp"
#include "filmflow/scenario.hpp"

namespace filmflow {

namespace {

constexpr const char* kGenerator = "filmflow 0.1.0";

struct Trajectory {
  RunSummary summary;
  std::vector<DiagnosticsRecord> records;
  std::vector<Snapshot> snapshots;
};

Trajectory integrate_recorded(const ModelParams& p, const StepperConfig& cfg, const GridFunction& u0,
                              double t_final, bool mollify, std::size_t snapshot_every = 0,
                              const std::function<void(const SolverState&)>& on_state = {}) {
  Recorder rec(p, cfg);
  rec.keep_snapshots(snapshot_every);
  StepObserver obs = rec.observer();
  if (on_state) {
    auto start = obs.on_start;
    auto stepped = obs.on_step;
    obs.on_start = [start, on_state](const SolverState& s) {
      start(s);
      on_state(s);
    };
    obs.on_step = [stepped, on_state](const SolverState& a, const SolverState& b) {
      stepped(a, b);
      on_state(b);
    };
  }
  RunSummary summary = resume(p, cfg, initial_state(p, cfg, u0, mollify), t_final, obs);
  return {std::move(summary), rec.records(), rec.snapshots()};
}

std::string records_csv(const std::vector<DiagnosticsRecord>& records, std::size_t cadence) {
  std::vector<DiagnosticsRecord> kept;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (k % cadence == 0 || k + 1 == records.size()) kept.push_back(records[k]);
  }
  std::ostringstream os;
  write_records_csv(os, kept);
  return os.str();
}

nlohmann::json run_summary(const Trajectory& tr) {
  const SolverState& s = tr.summary.final_state;
  return {{"steps", tr.summary.steps},
          {"newton_iterations", tr.summary.newton_iterations},
          {"t_final", s.t},
          {"final_min_u", s.u.min()},
          {"final_max_u", s.u.max()},
          {"final_energy", tr.records.empty() ? 0.0 : tr.records.back().energy.total},
          {"max_mass_drift", max_mass_drift(tr.records)}};
}

CheckReport failure(const std::string& name, const std::string& message) {
  CheckReport r;
  r.name = name;
  r.passed = false;
  r.message = message;
  return r;
}

bool separation_asserted(const Scenario& sc) {
  const ExperimentSpec& e = sc.experiment;
  switch (e.separation_mode) {
    case SeparationMode::assert_floor:
      return true;
    case SeparationMode::report_only:
      return false;
    case SeparationMode::automatic:
      return moser_feasible(e.moser_dim, sc.model.s, sc.model.kappa) && sc.model.delta > 0.0 &&
             sc.model.beta == 0.0;
  }
  return false;
}

SeparationOptions separation_options(const Scenario& sc, bool asserted) {
  SeparationOptions o;
  o.t_min = sc.experiment.t_min;
  o.growth_factor = sc.experiment.growth_factor;
  o.slack = sc.experiment.floor_slack;
  o.assert_floor = asserted;
  return o;
}

void run_single(const Scenario& sc, ScenarioOutcome& out) {
  const Grid grid = sc.grid.make();
  const GridFunction u0 = initial_field(sc, grid);
  StepperConfig cfg = sc.stepper;
  if (sc.experiment.refine) cfg = fixed_step(cfg, cfg.dt_init);
  Trajectory tr = integrate_recorded(sc.model, cfg, u0, sc.experiment.t_final, sc.experiment.mollify);

  EnergyLawOptions eopt;
  eopt.assert_monotone = sc.experiment.assert_energy_monotone.value_or(cfg.scheme == Scheme::convex_concave);
  out.checks.push_back(check_mass(tr.records, {sc.experiment.mass_tol}));
  out.checks.push_back(check_energy_law(tr.records, eopt));
  out.checks.push_back(check_entropy_law(tr.records, sc.model));
  out.checks.push_back(check_dissipative_decay(tr.records, sc.model));
  out.checks.push_back(check_separation(tr.records, separation_options(sc, false)));
  out.summary["run"] = run_summary(tr);

  if (sc.experiment.refine) {
    Trajectory fine = integrate_recorded(sc.model, fixed_step(cfg, 0.5 * cfg.dt_init), u0,
                                         sc.experiment.t_final, sc.experiment.mollify);
    out.checks.push_back(check_energy_refinement(tr.records, fine.records));
    out.summary["refined_run"] = run_summary(fine);
    out.tables["records_refined.csv"] = records_csv(fine.records, sc.experiment.cadence);
  }
  out.records = std::move(tr.records);
}

void run_separation(const Scenario& sc, ScenarioOutcome& out) {
  const Grid grid = sc.grid.make();
  const GridFunction u0 = initial_field(sc, grid);
  const bool asserted = separation_asserted(sc);
  const bool feasible = moser_feasible(sc.experiment.moser_dim, sc.model.s, sc.model.kappa);
  Trajectory tr = integrate_recorded(sc.model, sc.stepper, u0, sc.experiment.t_final,
                                     sc.experiment.mollify, sc.experiment.z_ladder ? 5 : 0);

  out.checks.push_back(check_separation(tr.records, separation_options(sc, asserted)));
  out.checks.push_back(check_mass(tr.records, {sc.experiment.mass_tol}));
  CheckReport energy = check_energy_law(tr.records);
  out.checks.push_back(energy);
  out.summary["run"] = run_summary(tr);
  out.summary["feasible"] = feasible;
  out.summary["asserted"] = asserted;

  if (sc.experiment.z_ladder && feasible) {
    ScheduleOptions so;
    so.main_steps = 6;
    const MoserSchedule schedule = build_schedule(sc.experiment.moser_dim, sc.model.s, sc.model.kappa,
                                                  sc.experiment.iota, 0.05 * sc.experiment.t_final, so);
    out.schedule = to_json(schedule);
    try {
      const auto ladder = z_norm_ladder(tr.snapshots, schedule);
      double lo = INFINITY;
      double hi = 0.0;
      for (const auto& e : ladder) {
        lo = std::min(lo, e.combined);
        hi = std::max(hi, e.combined);
      }
      out.summary["z_ladder"] = to_json(ladder);
      out.summary["z_ladder_range"] = {lo, hi};
    } catch (const SingularityError& err) {
      out.summary["z_ladder_error"] = err.what();
    }
  }
  out.records = std::move(tr.records);
}

void run_eps_ladder(const Scenario& sc, ScenarioOutcome& out) {
  const Grid grid = sc.grid.make();
  const GridFunction u0 = initial_field(sc, grid);
  const StepperConfig cfg = fixed_step(sc.stepper, sc.stepper.dt_init);
  std::vector<GridFunction> finals;
  nlohmann::json runs = nlohmann::json::array();
  std::ostringstream table;
  table << "eps,increment_to_next\n" << std::setprecision(17);
  double worst_drift = 0.0;
  for (double eps : sc.experiment.eps_values) {
    ModelParams p = sc.model;
    p.eps = eps;
    Trajectory tr = integrate_recorded(p, cfg, u0, sc.experiment.t_final, sc.experiment.mollify);
    worst_drift = std::max(worst_drift, max_mass_drift(tr.records));
    nlohmann::json js = run_summary(tr);
    js["eps"] = eps;
    runs.push_back(js);
    finals.push_back(tr.summary.final_state.u);
    out.records = std::move(tr.records);
  }
  const CheckReport ladder = check_eps_ladder(sc.experiment.eps_values, finals);
  const auto inc = cauchy_increments(finals);
  for (std::size_t i = 0; i < sc.experiment.eps_values.size(); ++i) {
    table << sc.experiment.eps_values[i] << ',';
    if (i < inc.size()) table << inc[i];
    table << '\n';
  }
  out.checks.push_back(ladder);
  CheckReport mass;
  mass.name = "mass_conservation";
  mass.passed = worst_drift <= sc.experiment.mass_tol;
  {
    std::ostringstream os;
    os << "max relative mass drift over the ladder " << std::setprecision(6) << worst_drift;
    mass.message = os.str();
  }
  mass.details = {{"max_relative_drift", worst_drift}, {"tol", sc.experiment.mass_tol}};
  out.checks.push_back(mass);
  out.summary["runs"] = runs;
  out.tables["ladder.csv"] = table.str();
}

void run_absorbing(const Scenario& sc, ScenarioOutcome& out) {
  const Grid grid = sc.grid.make();
  const double mean_u = sc.experiment.initial.mean;
  std::vector<Trajectory> trs;
  nlohmann::json amps = nlohmann::json::array();
  for (double target : sc.experiment.energies) {
    const double amp = amplitude_for_energy(sc.model, grid, mean_u, target, sc.experiment.mollify);
    amps.push_back(amp);
    const double k = 2.0 * std::numbers::pi / grid.length(0);
    const GridFunction u0 =
        GridFunction::sample(grid, [&](double x, double) { return mean_u + amp * std::cos(k * x); });
    trs.push_back(integrate_recorded(sc.model, sc.stepper, u0, sc.experiment.t_final, sc.experiment.mollify));
  }
  out.checks.push_back(check_absorbing(trs[0].records, trs[1].records, sc.experiment.terminal_tol));
  for (std::size_t i = 0; i < trs.size(); ++i) {
    CheckReport decay = check_dissipative_decay(trs[i].records, sc.model);
    decay.name += i == 0 ? "_a" : "_b";
    out.checks.push_back(decay);
    CheckReport mass = check_mass(trs[i].records, {sc.experiment.mass_tol});
    mass.name += i == 0 ? "_a" : "_b";
    out.checks.push_back(mass);
  }
  out.summary["amplitudes"] = amps;
  out.summary["run_a"] = run_summary(trs[0]);
  out.summary["run_b"] = run_summary(trs[1]);
  out.tables["records_b.csv"] = records_csv(trs[1].records, sc.experiment.cadence);
  out.records = std::move(trs[0].records);
}

void run_contraction(const Scenario& sc, ScenarioOutcome& out) {
  const Grid grid = sc.grid.make();
  const ModelParams& p = sc.model;
  const GridFunction base = initial_field(sc, grid);
  const StepperConfig cfg = fixed_step(sc.stepper, sc.stepper.dt_init);
  const double k = 2.0 * std::numbers::pi * sc.experiment.perturbation_modes / grid.length(0);
  const GridFunction bump = GridFunction::sample(grid, [&](double x, double) { return std::cos(k * x); });
  auto prepare = [&](const GridFunction& u) {
    return sc.experiment.mollify ? mollify_initial(u, p.eps) : u;
  };
  const GridFunction base_m = prepare(base);
  auto distance_at = [&](double c) { return phase_metric(p, base_m, prepare(base + c * bump)); };

  // Bisection for the perturbation size giving the requested distance.
  double lo = 0.0;
  double hi = 0.5 * base.min();
  if (distance_at(hi) < sc.experiment.distance) {
    throw ValidationError("experiment.distance", "not reachable by a perturbation that keeps u > 0");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (distance_at(mid) < sc.experiment.distance ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);

  std::vector<GridFunction> path_a;
  std::vector<GridFunction> path_b;
  std::vector<double> times;
  Trajectory a = integrate_recorded(p, cfg, base, sc.experiment.t_final, sc.experiment.mollify, 0,
                                    [&](const SolverState& s) {
                                      path_a.push_back(s.u);
                                      times.push_back(s.t);
                                    });
  Trajectory b = integrate_recorded(p, cfg, base + c * bump, sc.experiment.t_final, sc.experiment.mollify, 0,
                                    [&](const SolverState& s) { path_b.push_back(s.u); });
  std::vector<double> distances;
  std::ostringstream table;
  table << "t,distance\n" << std::setprecision(17);
  for (std::size_t i = 0; i < std::min(path_a.size(), path_b.size()); ++i) {
    distances.push_back(phase_metric(p, path_a[i], path_b[i]));
    table << times[i] << ',' << distances.back() << '\n';
  }
  ContractionOptions co;
  co.fit_start = sc.experiment.fit_start;
  co.fit_end = sc.experiment.fit_end;
  co.envelope_factor = sc.experiment.envelope_factor;
  co.divergence_bound = sc.experiment.divergence_bound;
  out.checks.push_back(check_contraction(times, distances, co));
  out.checks.push_back(check_mass(a.records, {sc.experiment.mass_tol}));
  out.checks.push_back(check_separation(a.records, separation_options(sc, false)));
  out.summary["perturbation_scale"] = c;
  out.summary["run_a"] = run_summary(a);
  out.summary["run_b"] = run_summary(b);
  out.tables["distance.csv"] = table.str();
  out.records = std::move(a.records);
}

void run_moser(const Scenario& sc, ScenarioOutcome& out) {
  const ExperimentSpec& e = sc.experiment;
  const int d = e.schedule_dim;
  const double s = sc.model.s;
  const double kappa = sc.model.kappa;
  ScheduleOptions so;
  so.main_steps = e.main_steps;
  const MoserSchedule sched = build_schedule(d, s, kappa, e.iota, e.eps_time, so);
  out.schedule = to_json(sched);

  CheckReport rep;
  rep.name = "moser_schedule";
  if (!sched.feasible) {
    rep.asserted = false;
    rep.message = "parameters outside the feasible range; no schedule";
    rep.details = {{"feasible", false}};
    out.checks.push_back(rep);
    return;
  }
  // The ladder must climb strictly, both routes to nu_n must agree, and the
  // time ladder must stay below its series bound.
  bool increasing = true;
  double route_gap = 0.0;
  double closed_gap = 0.0;
  const auto& steps = sched.exponents;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    increasing = increasing && steps[i].nu > steps[i - 1].nu;
    const double prev = steps[i - 1].nu;
    const double other = steps[i].phase == MoserPhase::bootstrap ? phase2_next_from_exponents(d, s, kappa, prev)
                                                                 : phase1_next_from_exponents(d, s, prev);
    route_gap = std::max(route_gap, std::abs(other - steps[i].nu) / std::abs(steps[i].nu));
    if (d == 3 && steps[i].phase == MoserPhase::bootstrap) {
      const double fp = phase2_fixed_point(d, s, kappa);
      const double closed = fp - (fp - sched.nu0) * std::pow(5.0 / 6.0, static_cast<double>(steps[i].n));
      closed_gap = std::max(closed_gap, std::abs(closed - steps[i].nu) / std::abs(steps[i].nu));
    }
  }
  const bool tau_ok = sched.tau_increment_sum <= sched.tau_bound;
  rep.passed = increasing && route_gap <= 1e-12 && closed_gap <= 1e-12 && tau_ok;
  std::ostringstream msg;
  msg << sched.phase2_steps << " bootstrap and " << sched.phase1_steps << " main steps; nu from "
      << sched.nu0 << " to " << steps.back().nu << "; route gap " << route_gap << ", closed-form gap "
      << closed_gap;
  rep.message = msg.str();
  rep.details = {{"feasible", true},
                 {"strictly_increasing", increasing},
                 {"route_gap", route_gap},
                 {"closed_form_gap", closed_gap},
                 {"tau_increment_sum", sched.tau_increment_sum},
                 {"tau_bound", sched.tau_bound}};
  out.checks.push_back(rep);
}

// Cell field with a block of zeros over a random fraction of the domain.
GridFunction random_mobility(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> val(0.0, 2.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  GridFunction b(grid);
  for (std::size_t c = 0; c < b.size(); ++c) b[c] = val(rng);
  const std::size_t nx = grid.cells(0);
  const std::size_t ny = grid.dim() == 2 ? grid.cells(1) : 1;
  const auto span = [&](std::size_t n) {
    const auto a = static_cast<std::size_t>(frac(rng) * n);
    const auto len = 1 + static_cast<std::size_t>(0.4 * frac(rng) * n);
    return std::pair{a, std::min(n, a + len)};
  };
  const auto [x0, x1] = span(nx);
  const auto [y0, y1] = span(ny);
  for (std::size_t j = y0; j < y1; ++j) {
    for (std::size_t i = x0; i < x1; ++i) b[grid.index(i, j)] = 0.0;
  }
  return b;
}

void run_elliptic_identity(const Scenario& sc, ScenarioOutcome& out) {
  std::mt19937_64 rng(sc.experiment.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = sc.grid.nx;
  const Grid line(n, sc.grid.lx);
  const Grid square(std::max<std::size_t>(n / 4, 2), std::max<std::size_t>(n / 4, 2), sc.grid.lx, sc.grid.lx);

  double worst = 0.0;
  int solves = 0;
  int settled = 0;
  bool cauchy = true;
  nlohmann::json ladders = nlohmann::json::array();
  for (int k = 0; k < sc.experiment.pairs; ++k) {
    const Grid& grid = k % 2 == 0 ? line : square;
    const FaceMean mean = k % 4 < 2 ? FaceMean::arithmetic : FaceMean::harmonic;
    const GridFunction b = random_mobility(grid, rng);
    GridFunction w(grid);
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = normal(rng);
    worst = std::max(worst, ipepa_identity_residual(b, w, mean).relative());

    if (k % 10 == 0) {
      ++solves;
      DegenerateSolveOptions opts;
      opts.mean = mean;
      try {
        const EllipticSolveReport rep = degenerate_elliptic_solve(b, w, opts);
        ++settled;
        // Cauchy along the floor ladder: successive increments shrink.
        const auto& inc = rep.ladder_increments;
        for (std::size_t i = 1; i < inc.size(); ++i) cauchy = cauchy && inc[i] < inc[i - 1];
        ladders.push_back({{"pair", k}, {"floors", rep.floors.size()}, {"increments", inc}});
      } catch (const DegenerateSolveError& err) {
        ladders.push_back({{"pair", k}, {"error", err.what()}});
      }
    }
  }
  CheckReport id;
  id.name = "integration_by_parts";
  id.passed = worst <= sc.experiment.identity_tol;
  {
    std::ostringstream os;
    os << "worst relative residual " << std::setprecision(3) << worst << " over " << sc.experiment.pairs
       << " pairs";
    id.message = os.str();
  }
  id.details = {{"worst_relative", worst}, {"tol", sc.experiment.identity_tol}};
  out.checks.push_back(id);

  CheckReport ladder;
  ladder.name = "degenerate_solve_ladder";
  ladder.passed = settled == solves && cauchy;
  ladder.message = std::to_string(settled) + " of " + std::to_string(solves) +
                   " degenerate solves settled; increments " + (cauchy ? "shrink" : "do not shrink");
  ladder.details = {{"ladders", ladders}};
  out.checks.push_back(ladder);
}

}  // namespace

StepperConfig fixed_step(StepperConfig cfg, double dt) {
  cfg.dt_init = dt;
  cfg.dt_min = dt;
  cfg.dt_max = dt;
  return cfg;
}

double amplitude_for_energy(const ModelParams& p, const Grid& grid, double mean_u, double target,
                            bool mollify) {
  const double k = 2.0 * std::numbers::pi / grid.length(0);
  auto energy_at = [&](double amp) {
    GridFunction u = GridFunction::sample(grid, [&](double x, double) { return mean_u + amp * std::cos(k * x); });
    if (mollify) u = mollify_initial(u, p.eps);
    return energy(p, u, true).total;
  };
  double lo = 0.0;
  double hi = mean_u * (1.0 - 1e-9);
  if (energy_at(lo) > target || energy_at(hi) < target) {
    throw ValidationError("experiment.energies",
                          "target energy outside the range reachable by a positive cosine datum");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * mean_u; ++it) {
    const double mid = 0.5 * (lo + hi);
    (energy_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ScenarioOutcome execute(const Scenario& scenario) {
  scenario.validate();
  ScenarioOutcome out;
  out.name = scenario.name;
  try {
    switch (scenario.experiment.kind) {
      case ExperimentKind::single_run:
        run_single(scenario, out);
        break;
      case ExperimentKind::separation:
        run_separation(scenario, out);
        break;
      case ExperimentKind::eps_ladder:
        run_eps_ladder(scenario, out);
        break;
      case ExperimentKind::absorbing:
        run_absorbing(scenario, out);
        break;
      case ExperimentKind::contraction:
        run_contraction(scenario, out);
        break;
      case ExperimentKind::moser_schedule:
        run_moser(scenario, out);
        break;
      case ExperimentKind::elliptic_identity:
        run_elliptic_identity(scenario, out);
        break;
    }
  } catch (const StepFailure& err) {
    out.checks.push_back(failure("integration", err.what()));
  } catch (const SingularityError& err) {
    out.checks.push_back(failure("integration", err.what()));
  } catch (const SolverError& err) {
    out.checks.push_back(failure("integration", err.what()));
  }
  out.exit_code = 0;
  for (const auto& c : out.checks) {
    if (c.asserted && !c.passed) out.exit_code = 1;
  }
  return out;
}

nlohmann::json report_json(const Scenario& scenario, const ScenarioOutcome& outcome) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : outcome.checks) checks.push_back(to_json(c));
  return {{"scenario", scenario.name},
          {"kind", to_string(scenario.experiment.kind)},
          {"property", scenario.experiment.property},
          {"status", outcome.exit_code == 0 ? "pass" : "fail"},
          {"exit_code", outcome.exit_code},
          {"checks", checks},
          {"summary", outcome.summary},
          {"artifacts", outcome.artifacts}};
}

nlohmann::json manifest_json(const Scenario& scenario, const ScenarioOutcome& outcome) {
  return {{"scenario", scenario.name},
          {"property", scenario.experiment.property},
          {"kind", to_string(scenario.experiment.kind)},
          {"seed", scenario.experiment.seed},
          {"generator", kGenerator},
          {"config", to_ini(scenario)},
          {"artifacts", outcome.artifacts}};
}

void write_artifacts(const Scenario& scenario, ScenarioOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  outcome.directory = dir;
  outcome.artifacts = {"records.csv", "report.json", "manifest.json"};
  if (outcome.schedule) outcome.artifacts.push_back("schedule.json");
  for (const auto& [file, content] : outcome.tables) outcome.artifacts.push_back(file);

  auto write = [&](const std::string& file, const std::string& content) {
    std::ofstream os(dir / file);
    if (!os) throw std::runtime_error("cannot write " + (dir / file).string());
    os << content;
  };
  write("records.csv", records_csv(outcome.records, scenario.experiment.cadence));
  if (outcome.schedule) write("schedule.json", outcome.schedule->dump(2) + "\n");
  for (const auto& [file, content] : outcome.tables) write(file, content);
  write("report.json", report_json(scenario, outcome).dump(2) + "\n");
  write("manifest.json", manifest_json(scenario, outcome).dump(2) + "\n");
}

ScenarioOutcome run_scenario(const Scenario& scenario, const std::filesystem::path& output_root) {
  ScenarioOutcome out = execute(scenario);
  write_artifacts(scenario, out, output_root / scenario.name);
  return out;
}

}  // namespace filmflow
