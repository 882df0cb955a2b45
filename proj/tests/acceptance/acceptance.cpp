// Acceptance run: one PASS/FAIL line per criterion, each with its runtime
// against the allowed budget. Exit status is the number of failures.
//
// Scenario-based criteria run the bundled scenarios through the library and
// then re-derive the verdict from the raw records where that is cheap, so a
// bug in a check cannot silently pass its own criterion.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "filmflow/diagnostics.hpp"
#include "filmflow/moser.hpp"
#include "filmflow/nonlinearities.hpp"
#include "filmflow/scenario.hpp"

using namespace filmflow;

namespace {

struct Verdict {
  bool passed = true;
  std::string detail;
};

/// Collects failure reasons; the first one becomes the detail line.
class Audit {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && passed_) {
      passed_ = false;
      reason_ = what;
    }
  }
  template <class T>
  void note(const std::string& key, const T& value) {
    std::ostringstream os;
    os << std::setprecision(4) << value;
    notes_ += (notes_.empty() ? "" : ", ") + key + " " + os.str();
  }
  Verdict verdict() const { return {passed_, passed_ ? notes_ : reason_ + (notes_.empty() ? "" : "; " + notes_)}; }

 private:
  bool passed_ = true;
  std::string reason_;
  std::string notes_;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& err) {
    v = {false, std::string("exception: ") + err.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = v.passed && in_time;
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << v.detail << " ("
            << std::fixed << std::setprecision(2) << secs << " s, budget " << budget_s << " s"
            << (in_time ? "" : ", over budget") << ")" << std::defaultfloat << std::endl;
}

const CheckReport* find_check(const ScenarioOutcome& out, const std::string& name) {
  for (const auto& c : out.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void require_check(Audit& a, const ScenarioOutcome& out, const std::string& name) {
  const CheckReport* c = find_check(out, name);
  a.require(c != nullptr, "check '" + name + "' missing");
  if (!c) return;
  a.require(c->asserted, "check '" + name + "' is report-only");
  a.require(c->passed, name + ": " + c->message);
}

Scenario builtin(const std::string& name) {
  auto s = find_builtin(name);
  if (!s) throw std::runtime_error("builtin scenario '" + name + "' missing");
  return *s;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return r;
}

// |FD - exact| relative to max(|exact|, |F(r)| / r); the second term is the
// natural size of a derivative on a log grid when the derivative itself is tiny.
double fd_error(const std::function<double(double)>& F, double exact, double r) {
  const double h = 1e-5 * r;
  const double fd = (F(r + h) - F(r - h)) / (2.0 * h);
  const double scale = std::max(std::abs(exact), std::abs(F(r)) / r);
  return std::abs(fd - exact) / scale;
}

Verdict nonlinearities() {
  Audit a;
  double worst_fd = 0.0;
  int points = 0;
  struct Case {
    double s, kappa, eps;
  };
  for (Case c : {Case{1, 3, 1e-3}, Case{2, 6, 1e-2}, Case{0, 2, 1e-1}, Case{3, 5, 1e-3}}) {
    ModelParams p;
    p.s = c.s;
    p.kappa = c.kappa;
    p.eps = c.eps;
    for (double r : log_grid(1e-6, 1e3, 100)) {
      ++points;
      a.require(eval_F_eps(p, r) <= eval_F(p, r) * (1.0 + 1e-15), "F_eps > F");
      if (r >= p.eps) {
        a.require(eval_f_eps(p, r) == eval_f(p, r), "f_eps != f above eps");
        a.require(eval_F_eps(p, r) == eval_F(p, r), "F_eps != F above eps");
      }
      a.require(eval_b_eps(p, r) >= eval_b(p, r), "b_eps < b");
      const double M = eval_entropy_pair(p, r).M;
      a.require(eval_entropy_pair_eps(p, r).M <= M * (1.0 + 1e-12) + 1e-14, "M_eps > M");

      const double h = 1e-5 * r;
      if (std::abs(r - p.eps) < 4 * h || std::abs(r - 1.0) < 1e-2) continue;
      worst_fd = std::max({worst_fd, fd_error([&](double x) { return eval_F(p, x); }, eval_f(p, r), r),
                           fd_error([&](double x) { return eval_F_eps(p, x); }, eval_f_eps(p, r), r),
                           fd_error([&](double x) { return eval_entropy_pair(p, x).M; },
                                    eval_entropy_pair(p, r).m, r),
                           fd_error([&](double x) { return eval_entropy_pair(p, x).m; }, 1.0 / eval_b(p, r), r),
                           fd_error([&](double x) { return eval_entropy_pair_eps(p, x).M; },
                                    eval_entropy_pair_eps(p, r).m, r),
                           fd_error([&](double x) { return eval_f_eps(p, x); }, eval_f_eps_prime(p, r), r)});
    }
  }
  a.require(worst_fd <= 1e-6, "finite-difference mismatch above 1e-6");
  a.note("points", points);
  a.note("worst FD error", worst_fd);
  return a.verdict();
}

Verdict conservation() {
  Audit a;
  const Scenario sc = builtin("mass_conservation_long_run");
  a.require(sc.grid.dim == 1 && sc.grid.nx == 256, "grid is not 1D with N = 256");
  const ScenarioOutcome out = execute(sc);
  const std::size_t steps = out.records.size() - 1;
  a.require(steps >= 10000, "fewer than 10^4 steps");
  const double m0 = out.records.front().mass;
  double drift = 0.0;
  for (const auto& r : out.records) drift = std::max(drift, std::abs(r.mass - m0) / std::abs(m0));
  a.require(drift <= 1e-12, "mass drift above 1e-12");
  require_check(a, out, "mass_conservation");
  a.note("steps", steps);
  a.note("max relative drift", drift);
  return a.verdict();
}

Verdict energy_law() {
  Audit a;
  const Scenario mono = builtin("energy_law_cosine");
  a.require(mono.stepper.scheme == Scheme::convex_concave && mono.model.delta == 1.0,
            "monotone run is not convex_concave with delta = 1");
  const ScenarioOutcome out = execute(mono);
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < out.records.size(); ++k) {
    const double e0 = out.records[k - 1].energy.total;
    const double inc = out.records[k].energy.total - e0;
    worst_increase = std::max(worst_increase, inc / (1.0 + std::abs(e0)));
  }
  a.require(worst_increase <= 1e-12, "energy increased on some step");
  require_check(a, out, "energy_law");

  const Scenario ref = builtin("energy_refinement_cosine");
  a.require(ref.stepper.scheme == Scheme::fully_implicit && ref.experiment.refine,
            "refinement run is not fully_implicit with refine on");
  const ScenarioOutcome rout = execute(ref);
  require_check(a, rout, "energy_residual_refinement");
  const CheckReport* rc = find_check(rout, "energy_residual_refinement");
  a.note("steps", out.records.size() - 1);
  a.note("largest relative increase", worst_increase);
  if (rc) a.note("residual ratio dt/(dt/2)", rc->details.value("ratio", nlohmann::json(0.0)).dump());
  return a.verdict();
}

Verdict entropy_law() {
  Audit a;
  const Scenario sc = builtin("entropy_law_cosine");
  a.require(sc.model.g.is_zero() && sc.model.gamma.is_zero(), "entropy run has g or gamma");
  const ScenarioOutcome out = execute(sc);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < out.records.size(); ++k) {
    const double l0 = out.records[k - 1].lyapunov;
    worst = std::max(worst, (out.records[k].lyapunov - l0) / (1.0 + std::abs(l0)));
  }
  a.require(worst <= sc.stepper.newton_tol, "Lyapunov quantity increased beyond the Newton tolerance");
  require_check(a, out, "entropy_law");
  a.note("steps", out.records.size() - 1);
  a.note("largest relative increase", worst);
  return a.verdict();
}

Verdict elliptic() {
  Audit a;
  const Scenario sc = builtin("ipepa_identity");
  a.require(sc.experiment.pairs >= 100, "fewer than 100 pairs");
  a.require(sc.experiment.identity_tol <= 1e-12, "identity tolerance looser than 1e-12");
  const ScenarioOutcome out = execute(sc);
  require_check(a, out, "integration_by_parts");
  require_check(a, out, "degenerate_solve_ladder");
  if (const CheckReport* c = find_check(out, "integration_by_parts")) a.note("identity", c->message);
  if (const CheckReport* c = find_check(out, "degenerate_solve_ladder")) a.note("ladder", c->message);
  return a.verdict();
}

Verdict separation() {
  Audit a;
  const Scenario sc = builtin("separation_1d_canonical");
  a.require(sc.model.delta == 1.0 && sc.model.beta == 0.0 && sc.model.s == 1.0 && sc.model.kappa == 6.0,
            "model differs from delta=1, beta=0, s=1, kappa=6");
  a.require(sc.grid.nx == 256 && sc.experiment.t_final == 1.0, "grid or horizon differs from N=256, T=1");
  a.require(sc.experiment.separation_mode != SeparationMode::report_only, "separation is report-only");
  const double u0_min = initial_field(sc, sc.grid.make()).min();
  a.require(std::abs(u0_min - 0.01) < 1e-3, "initial minimum is not 0.01");

  const ScenarioOutcome out = execute(sc);
  require_check(a, out, "separation");
  // Independent re-derivation: after t = 0.1 T the floor is at least 10x the
  // initial minimum and never falls more than 1% below its running peak once
  // it has been reached.
  const double t_min = 0.1 * sc.experiment.t_final;
  double lowest = std::numeric_limits<double>::infinity();
  double peak = 0.0;
  double worst_dip = 0.0;
  for (const auto& r : out.records) {
    if (r.t < t_min) continue;
    lowest = std::min(lowest, r.min_u);
    peak = std::max(peak, r.min_u);
    worst_dip = std::max(worst_dip, (peak - r.min_u) / peak);
  }
  a.require(lowest >= 10.0 * u0_min, "post-transient floor below 10x the initial minimum");
  a.require(worst_dip <= 0.01, "floor dipped more than 1% below its established value");
  a.note("initial min", u0_min);
  a.note("post-transient floor", lowest);
  a.note("largest dip", worst_dip);
  return a.verdict();
}

Verdict moser() {
  Audit a;
  // Fixed points and monotonicity flips.
  for (double s = 0.0; s <= 5.0; s += 0.5) {
    const double t1 = 3.0 * (s + 2.0);
    a.require(phase1_next(3, s, t1) == t1 && phase1_threshold(3, s) == t1, "phase-1 fixed point");
    a.require(phase1_next(3, s, t1 * (1 + 1e-9)) > t1 * (1 + 1e-9), "phase 1 not increasing above 3(s+2)");
    a.require(phase1_next(3, s, t1 * (1 - 1e-9)) < t1 * (1 - 1e-9), "phase 1 not decreasing below 3(s+2)");
    a.require(phase1_next(2, s, s + 2.0) == s + 2.0, "d=2 phase-1 fixed point");
    for (double kappa = s + 1.5; kappa < 2 * s + 20; kappa += 1.7) {
      const double t2 = 3.0 * (kappa - s - 1.0);
      a.require(phase2_fixed_point(3, s, kappa) == t2, "phase-2 fixed point");
      a.require(std::abs(phase2_next(3, s, kappa, t2) - t2) <= 4 * std::numeric_limits<double>::epsilon() * t2,
                "phase-2 map does not fix 3(kappa-s-1)");
      a.require(phase2_next(3, s, kappa, t2 * (1 - 1e-9)) > t2 * (1 - 1e-9), "phase 2 not increasing below");
      a.require(phase2_next(3, s, kappa, t2 * (1 + 1e-9)) < t2 * (1 + 1e-9), "phase 2 not decreasing above");
    }
  }
  // Feasibility sweep, including kappa exactly on the boundary.
  int pairs = 0;
  for (int i = 0; i < 25; ++i) {
    const double s = 0.2 * i;
    for (int j = 0; j < 20; ++j) {
      const double k3 = 2 * s + 3 + 0.5 * (j - 10);
      const double k2 = s + 1 + 0.25 * (j - 10);
      a.require(moser_feasible(3, s, k3) == (k3 > 2 * s + 3), "d=3 feasibility flag");
      a.require(moser_feasible(2, s, k2) == (k2 > s + 1 && s + 1 >= 2), "d=2 feasibility flag");
      pairs += 2;
    }
  }
  // Closed form of the bootstrap climb, and termination.
  double closed_gap = 0.0;
  int longest = 0;
  for (double s = 0.0; s <= 5.0; s += 0.25) {
    for (double k = 0.01; k <= 17.0; k += 0.5) {
      const double kappa = 2 * s + 3 + k;
      const MoserSchedule sch = build_schedule(3, s, kappa, 0.5, 0.1);
      a.require(sch.feasible, "feasible triple flagged infeasible");
      a.require(sch.phase2_steps <= 10000, "bootstrap did not terminate within 10^4 steps");
      longest = std::max(longest, sch.phase2_steps);
      const double fp = 3.0 * (kappa - s - 1.0);
      for (int n = 0; n <= sch.phase2_steps; ++n) {
        const double closed = fp - (fp - sch.nu0) * std::pow(5.0 / 6.0, n);
        closed_gap = std::max(closed_gap, std::abs(closed - sch.exponents[n].nu) / sch.exponents[n].nu);
      }
      a.require(sch.tau_increment_sum <= sch.tau_bound, "tau ladder exceeds its series bound");
    }
  }
  a.require(closed_gap <= 1e-12, "closed form differs from the recursion");
  a.note("feasibility pairs", pairs);
  a.note("closed-form gap", closed_gap);
  a.note("longest bootstrap", longest);
  return a.verdict();
}

Verdict eps_ladder() {
  Audit a;
  const Scenario sc = builtin("eps_ladder_existence");
  a.require(sc.experiment.t_final == 0.5, "ladder horizon is not T = 0.5");
  const auto& eps = sc.experiment.eps_values;
  a.require(eps.size() >= 3 && eps[0] == 1e-2 && eps[1] == 1e-3 && eps[2] == 1e-4,
            "ladder does not start at 1e-2, 1e-3, 1e-4");
  const ScenarioOutcome out = execute(sc);
  require_check(a, out, "eps_ladder");
  const CheckReport* c = find_check(out, "eps_ladder");
  if (c) {
    const auto inc = c->details.at("increments").get<std::vector<double>>();
    a.require(inc.size() >= 2 && inc[1] < inc[0], "increment does not decrease over 1e-2, 1e-3, 1e-4");
    std::ostringstream os;
    os << std::setprecision(3);
    for (std::size_t i = 0; i < inc.size(); ++i) os << (i ? " > " : "") << inc[i];
    a.note("L2 increments", os.str());
  }
  return a.verdict();
}

Verdict absorbing() {
  Audit a;
  const Scenario sc = builtin("absorbing_two_energies");
  const auto& e = sc.experiment.energies;
  a.require(e.size() == 2 && std::abs(e[1] / e[0] - 100.0) < 1e-9, "initial energies do not differ by 100x");
  a.require(sc.experiment.t_final <= 10.0, "horizon beyond T = 10");
  const ScenarioOutcome out = execute(sc);
  require_check(a, out, "absorbing_energy");
  if (const CheckReport* c = find_check(out, "absorbing_energy")) {
    const auto& d = c->details;
    if (d.contains("initial")) a.note("initial energies", d["initial"].dump());
    if (d.contains("terminal")) a.note("terminal energies", d["terminal"].dump());
    a.note("result", c->message);
  }
  return a.verdict();
}

Verdict contraction() {
  Audit a;
  const Scenario sc = builtin("contraction_after_separation");
  a.require(sc.experiment.distance == 1e-3, "initial distance is not 1e-3");
  a.require(sc.experiment.fit_start == 0.1 && sc.experiment.fit_end == 1.0, "fit window is not [0.1, 1]");
  a.require(sc.experiment.divergence_bound == 0.1, "divergence bound is not 0.1");
  const ScenarioOutcome out = execute(sc);
  require_check(a, out, "contraction");
  if (const CheckReport* c = find_check(out, "contraction")) a.note("result", c->message);
  return a.verdict();
}

}  // namespace

int main() {
  criterion(1, "nonlinearity identities", 1.0, nonlinearities);
  criterion(2, "discrete conservation", 30.0, conservation);
  criterion(3, "energy law", 120.0, energy_law);
  criterion(4, "entropy law", 120.0, entropy_law);
  criterion(5, "elliptic identity", 30.0, elliptic);
  criterion(6, "separation", 300.0, separation);
  criterion(7, "Moser schedules", 1.0, moser);
  criterion(8, "eps-ladder", 600.0, eps_ladder);
  criterion(9, "absorbing behaviour", 600.0, absorbing);
  criterion(10, "contraction after separation", 300.0, contraction);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
