#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "filmflow/errors.hpp"
#include "filmflow/functionals.hpp"

using namespace filmflow;
using doctest::Approx;

namespace {

ModelParams params(double kappa, double s = 1.0) {
  ModelParams p;
  p.kappa = kappa;
  p.s = s;
  p.eps = 1e-3;
  return p;
}

GridFunction positive_field(const Grid& g, std::mt19937_64& rng, double mu, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  GridFunction u(g);
  for (auto& v : u.values()) v = U(rng);
  const double m = mean(u);
  for (auto& v : u.values()) v += mu - m;
  return u;
}

}  // namespace

TEST_CASE("energy of constants") {
  Grid g(32, 1.0);
  ModelParams p = params(2);
  for (double mu : {0.2, 1.0, 3.0}) {
    const auto e = energy(p, GridFunction(g, mu), false);
    CHECK(e.total == Approx(1.0 / mu));
    CHECK(e.dirichlet == 0.0);
  }
  p.g = ForcingSpec::constant(0.5);
  const auto e = energy(p, GridFunction(g, 1.0), false);
  CHECK(e.forcing == Approx(-0.5));
  CHECK(e.total == Approx(0.5));
  CHECK(e.total == Approx(e.dirichlet + e.potential_F + e.potential_Gamma + e.forcing));
}

TEST_CASE("energy pieces against direct sums") {
  Grid g(50, 2.0);
  ModelParams p = params(3);
  p.gamma = GammaSpec::physical(0.0, 0.3, 3.0);
  p.g = ForcingSpec::cosine(0.1, 0.2);
  auto u = GridFunction::sample(g, [](double x, double) { return 1.0 + 0.5 * std::sin(x); });
  const auto e = energy(p, u, false);
  const double h = g.h(0);
  double dir = 0.0, F = 0.0, G = 0.0, forcing = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) dir += 0.5 * std::pow((u[i + 1] - u[i]) / h, 2) * h;
  const auto gf = forcing_field(p, g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    F += std::pow(u[i], -2.0) / 2.0 * h;
    G += eval_Gamma(p, u[i]) * h;
    forcing -= gf[i] * u[i] * h;
    CHECK(gf[i] == Approx(0.1 + 0.2 * std::cos(2.0 * std::numbers::pi * g.center(i, 0) / 2.0)));
  }
  CHECK(e.dirichlet == Approx(dir).epsilon(1e-13));
  CHECK(e.potential_F == Approx(F).epsilon(1e-13));
  CHECK(e.potential_Gamma == Approx(G).epsilon(1e-13));
  CHECK(e.forcing == Approx(forcing).epsilon(1e-13));
}

TEST_CASE("regularized energy and entropy lie below the originals") {
  Grid g(40, 1.0);
  std::mt19937_64 rng(3);
  ModelParams p = params(4, 2);
  p.eps = 0.2;
  for (int k = 0; k < 10; ++k) {
    const auto u = positive_field(g, rng, 0.3, 0.25);
    CHECK(energy(p, u, true).total <= energy(p, u, false).total);
    CHECK(entropy_total(p, u, true) <= entropy_total(p, u, false) + 1e-14);
  }
}

TEST_CASE("unregularized functionals reject nonpositive cells") {
  Grid g(4, 1.0);
  GridFunction u(g, std::vector<double>{1.0, 0.5, 0.0, 1.0});
  ModelParams p = params(3);
  CHECK_THROWS_WITH_AS(energy(p, u, false), doctest::Contains("2"), SingularityError);
  CHECK_THROWS_AS(entropy_total(p, u, false), SingularityError);
  CHECK_THROWS_AS(phase_metric(p, u, GridFunction(g, 1.0)), SingularityError);
  CHECK(std::isfinite(energy(p, u, true).total));
}

TEST_CASE("entropy of constants") {
  Grid g(8, 3.0);
  ModelParams p = params(5, 3);
  CHECK(entropy_total(p, GridFunction(g, 1.0), false) == 0.0);
  CHECK(entropy_total(p, GridFunction(g, 2.0), false) == Approx(0.25 * 3.0));
}

TEST_CASE("phase metric") {
  Grid g(20, 1.0);
  ModelParams p = params(2);
  std::mt19937_64 rng(5);
  const auto u = positive_field(g, rng, 1.0, 0.5);
  CHECK(phase_metric(p, u, u) == 0.0);
  CHECK(phase_metric(p, GridFunction(g, 1.0), GridFunction(g, 2.0)) == Approx(1.5));
  for (int k = 0; k < 20; ++k) {
    const auto a = positive_field(g, rng, 1.0, 0.5);
    const auto b = positive_field(g, rng, 1.0, 0.5);
    const auto c = positive_field(g, rng, 1.0, 0.5);
    CHECK(phase_metric(p, a, b) == Approx(phase_metric(p, b, a)).epsilon(1e-14));
    CHECK(phase_metric(p, a, c) <= phase_metric(p, a, b) + phase_metric(p, b, c) + 1e-14);
  }
}

TEST_CASE("dissipation rate") {
  Grid g(30, 1.0);
  ModelParams p = params(3, 2);
  p.eps = 1e-8;
  std::mt19937_64 rng(9);
  const auto u = positive_field(g, rng, 1.0, 0.5);
  CHECK(dissipation_rate(p, u, GridFunction(g, 4.0)) == 0.0);
  const auto w = positive_field(g, rng, 0.0, 1.0);
  CHECK(dissipation_rate(p, u, w) >= 0.0);
  const auto grad = gradient_faces(w);
  CHECK(dissipation_rate(p, GridFunction(g, 1.0), w) == Approx(inner(grad, grad)).epsilon(1e-7));
}

TEST_CASE("constants minimize the energy at fixed mean") {
  Grid g(64, 1.0);
  ModelParams p = params(3);
  std::mt19937_64 rng(13);
  for (double mu : {0.3, 1.0, 2.0}) {
    const double e0 = energy(p, GridFunction(g, mu), false).total;
    for (int k = 0; k < 10; ++k) {
      CHECK(energy(p, positive_field(g, rng, mu, 0.5 * mu), false).total >= e0);
    }
  }
}

TEST_CASE("coercivity witness") {
  Grid g(16, 2.0);
  ModelParams p = params(3);
  const auto w = coercivity_witness(p, GridFunction(g, 0.5));
  CHECK(w.lower_combo == Approx(0.25 * 2.0 + std::pow(0.5, -2.0) * 2.0));
  CHECK(w.energy == Approx(std::pow(0.5, -2.0) / 2.0 * 2.0));

  // Along u = t with t -> 0 both sides diverge, and the energy grows monotonically.
  double prev_e = 0.0;
  std::vector<double> ratio;
  for (int j = 1; j <= 6; ++j) {
    const auto c = coercivity_witness(p, GridFunction(g, std::pow(10.0, -j)));
    CHECK(c.energy > prev_e);
    prev_e = c.energy;
    ratio.push_back(c.energy / c.lower_combo);
  }
  CHECK(prev_e > 1e10);
  // Fitted sandwich: energy / combo stays in a fixed band.
  for (double r : ratio) CHECK(r == Approx(ratio.back()).epsilon(1e-3));

  // Steep profiles: combo and energy blow up together.
  for (double k : {1.0, 10.0, 100.0}) {
    auto u = GridFunction::sample(g, [&](double x, double) { return 1.0 + 0.5 * std::sin(k * x); });
    const auto c = coercivity_witness(p, u);
    CHECK(c.energy >= 0.25 * (c.lower_combo - 4.0 * g.volume()) - 10.0);
    CHECK(c.energy <= c.upper_combo);
  }
}

TEST_CASE("energy row") {
  std::ostringstream os;
  write_energy_row(os, 0.5, EnergyBreakdown{1, 2, 3, 4, 10});
  CHECK(os.str() == "0.5,1,2,3,4,10\n");
}
