#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "filmflow/diagnostics.hpp"

using namespace filmflow;
using doctest::Approx;

namespace {

// Kendall tau-a by brute force.
double kendall_oracle(const std::vector<double>& v) {
  double concordant = 0.0, discordant = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (v[j] > v[i]) concordant += 1.0;
      if (v[j] < v[i]) discordant += 1.0;
    }
  const double pairs = v.size() * (v.size() - 1) / 2.0;
  return (concordant - discordant) / pairs;
}

std::vector<DiagnosticsRecord> floor_records(const std::function<double(double)>& floor, double T = 1.0,
                                             int n = 200) {
  std::vector<DiagnosticsRecord> out;
  for (int k = 0; k <= n; ++k) {
    DiagnosticsRecord r;
    r.t = T * k / n;
    r.dt = k > 0 ? T / n : 0.0;
    r.mass = 1.0;
    r.min_u = floor(r.t);
    out.push_back(r);
  }
  return out;
}

ModelParams params() {
  ModelParams p;
  p.s = 1.0;
  p.kappa = 3.0;
  p.delta = 1.0;
  p.eps = 1e-3;
  return p;
}

}  // namespace

TEST_CASE("Kendall tau") {
  CHECK(kendall_tau({1, 2, 3, 4}) == Approx(1.0));
  CHECK(kendall_tau({4, 3, 2, 1}) == Approx(-1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> v(12);
    for (auto& x : v) x = U(rng);
    CHECK(kendall_tau(v) == Approx(kendall_oracle(v)).epsilon(1e-12));
  }
  CHECK(kendall_tau({1, 1, 1}) == Approx(0.0));
}

TEST_CASE("a constant run has zero residuals") {
  Grid g(32, 1.0);
  ModelParams p = params();
  StepperConfig cfg;
  cfg.dt_init = 1e-2;
  Recorder rec(p, cfg);
  run(p, cfg, GridFunction(g, 0.7), 0.2, rec.observer());
  const auto& r = rec.records();
  REQUIRE(r.size() > 2);
  for (const auto& x : r) {
    CHECK(std::abs(x.energy_residual) <= 1e-14);
    CHECK(std::abs(x.entropy_residual) <= 1e-14);
    CHECK(x.dissipation == 0.0);
    CHECK(x.min_u == Approx(0.7));
  }
  CHECK(check_mass(r).passed);
  CHECK(check_energy_law(r, {true}).passed);
  CHECK(check_entropy_law(r, p).passed);
  CHECK(check_dissipative_decay(r, p).passed);
  SeparationOptions flat;
  flat.growth_factor = 0.0;  // nothing to grow from a constant datum
  CHECK(check_separation(r, flat).passed);
  std::ostringstream os;
  write_records_csv(os, r);
  const std::string csv = os.str();
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "t,dt,mass,energy,dirichlet,potential_F,potential_Gamma,forcing,entropy,lyapunov,min_u,max_u,"
        "dissipation,viscous_dissipation,energy_residual,entropy_residual,newton_iters");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.size() + 1));
}

TEST_CASE("records of a perturbed run satisfy the discrete laws") {
  Grid g(64, 4.0);
  ModelParams p = params();
  StepperConfig cfg;
  cfg.scheme = Scheme::convex_concave;
  cfg.dt_init = cfg.dt_min = cfg.dt_max = 2e-3;
  Recorder rec(p, cfg);
  auto u0 = GridFunction::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(std::numbers::pi * x / 2); });
  run(p, cfg, u0, 0.2, rec.observer());
  const auto& r = rec.records();
  for (const auto& x : r) {
    CHECK(x.dissipation >= 0.0);
    CHECK(x.viscous_dissipation >= 0.0);
  }
  CHECK(max_mass_drift(r) <= 1e-13);
  CHECK(check_energy_law(r, {true}).passed);
  CHECK(check_entropy_law(r, p).passed);
  const auto json = to_json(check_mass(r));
  CHECK(json["name"].is_string());
  CHECK(json["passed"] == true);
}

TEST_CASE("energy law detects an increase") {
  auto r = floor_records([](double) { return 1.0; });
  for (std::size_t k = 0; k < r.size(); ++k) r[k].energy.total = 1.0 - 0.001 * k;
  CHECK(check_energy_law(r, {true}).passed);
  r[50].energy.total += 0.1;
  CHECK_FALSE(check_energy_law(r, {true}).passed);
  const auto report_only = check_energy_law(r, {false});
  CHECK_FALSE(report_only.asserted);
  CHECK(report_only.passed);
}

TEST_CASE("entropy law is gated on g = 0 and gamma = 0") {
  auto r = floor_records([](double) { return 1.0; });
  for (std::size_t k = 0; k < r.size(); ++k) r[k].lyapunov = 1.0 + 0.01 * k;
  ModelParams p = params();
  CHECK_FALSE(check_entropy_law(r, p).passed);
  p.g = ForcingSpec::constant(0.1);
  const auto gated = check_entropy_law(r, p);
  CHECK_FALSE(gated.asserted);
  CHECK(gated.passed);
}

TEST_CASE("separation floor") {
  SeparationOptions opts;
  // Rising then flat floor, starting at 0.01.
  CHECK(check_separation(floor_records([](double t) { return 0.01 + 0.5 * std::min(1.0, 20 * t); }), opts).passed);
  // A later dip of 5 percent.
  CHECK_FALSE(check_separation(floor_records([](double t) { return t > 0.7 && t < 0.8 ? 0.475 : (t < 0.05 ? 0.01 : 0.5); }), opts).passed);
  // Never separates enough.
  CHECK_FALSE(check_separation(floor_records([](double t) { return 0.01 + 0.01 * t; }), opts).passed);
  // Touches zero.
  CHECK_FALSE(check_separation(floor_records([](double t) { return t > 0.5 ? -1e-3 : 0.3; }), opts).passed);
  // Constant datum: floor equals the mean throughout.
  opts.growth_factor = 0.0;
  CHECK(check_separation(floor_records([](double) { return 0.6; }), opts).passed);
  opts.assert_floor = false;
  const auto info = check_separation(floor_records([](double t) { return 0.5 - 0.4 * t; }), opts);
  CHECK_FALSE(info.asserted);
  CHECK(info.passed);
}

TEST_CASE("dissipative decay fit") {
  ModelParams p = params();
  p.kappa = 6.0;
  auto r = floor_records([](double) { return 1.0; }, 5.0, 500);
  // E' = -E^theta + 1 relaxes towards 1.
  const double theta = (p.kappa - 1 - p.s) / (p.kappa - 1);
  double E = 50.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k].energy.total = E;
    if (k + 1 < r.size()) E += (r[k + 1].t - r[k].t) * (1.0 - std::pow(E, theta));
  }
  const auto fit = fit_dissipative_decay(r, p);
  CHECK(fit.fitted);
  CHECK(fit.theta == Approx(theta));
  CHECK(fit.alpha == Approx(1.0).epsilon(0.05));
  CHECK(check_dissipative_decay(r, p).passed);

  p.kappa = p.s + 1.0;
  CHECK_FALSE(fit_dissipative_decay(r, p).fitted);
  CHECK(check_dissipative_decay(r, p).passed);
}

TEST_CASE("absorbing and contraction checks") {
  auto a = floor_records([](double) { return 1.0; });
  auto b = a;
  a.back().energy.total = 6.4;
  b.back().energy.total = 6.9;
  CHECK(check_absorbing(a, b).passed);
  b.back().energy.total = 8.0;
  CHECK_FALSE(check_absorbing(a, b).passed);

  std::vector<double> t, d;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.01 * k);
    d.push_back(1e-3 * std::exp(-3.0 * t.back()) * (1.0 + 0.1 * std::sin(10 * t.back())));
  }
  CHECK(check_contraction(t, d).passed);
  d[80] = 0.5;  // crosses the divergence bound
  CHECK_FALSE(check_contraction(t, d).passed);
}

TEST_CASE("eps ladder") {
  Grid g(8, 1.0);
  std::vector<GridFunction> finals{GridFunction(g, 1.0), GridFunction(g, 1.1), GridFunction(g, 1.11),
                                   GridFunction(g, 1.111)};
  const auto inc = cauchy_increments(finals);
  REQUIRE(inc.size() == 3);
  CHECK(inc[0] == Approx(0.1));
  CHECK(inc[1] == Approx(0.01));
  CHECK(check_eps_ladder({1e-2, 1e-3, 1e-4, 1e-5}, finals).passed);
  finals[3] = GridFunction(g, 1.5);
  CHECK_FALSE(check_eps_ladder({1e-2, 1e-3, 1e-4, 1e-5}, finals).passed);
}

TEST_CASE("mass check") {
  auto r = floor_records([](double) { return 1.0; });
  CHECK(check_mass(r).passed);
  r[10].mass = 1.0 + 1e-10;
  CHECK(max_mass_drift(r) == Approx(1e-10).epsilon(1e-3));
  CHECK_FALSE(check_mass(r).passed);
}
