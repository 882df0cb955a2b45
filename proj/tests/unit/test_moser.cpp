#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "filmflow/errors.hpp"
#include "filmflow/moser.hpp"

using namespace filmflow;
using doctest::Approx;

TEST_CASE("one-step maps") {
  CHECK(phase1_next(3, 0, 12) == 13.0);
  CHECK(phase1_next(3, 0, 6) == 6.0);
  CHECK(phase1_next(2, 0, 4) == 5.0);
  CHECK(phase2_next(3, 0, 4, 6) == 6.5);
  CHECK(phase2_next(3, 0, 4, 9) == 9.0);
  CHECK(phase2_next(2, 1, 4, 3) == 4.0);
  CHECK_THROWS(phase1_next(1, 0, 2));
}

TEST_CASE("fixed points and where monotonicity flips") {
  for (double s : {0.0, 0.5, 1.0, 2.0, 4.5}) {
    const double t1 = 3.0 * (s + 2.0);
    CHECK(phase1_threshold(3, s) == t1);
    CHECK(phase1_next(3, s, t1) == t1);
    CHECK(phase1_next(3, s, t1 + 1e-6) > t1 + 1e-6);
    CHECK(phase1_next(3, s, t1 - 1e-6) < t1 - 1e-6);

    CHECK(phase1_threshold(2, s) == s + 2.0);
    CHECK(phase1_next(2, s, s + 2.0) == s + 2.0);
    CHECK(phase1_next(2, s, s + 2.0 + 1e-6) > s + 2.0 + 1e-6);
    CHECK(phase1_next(2, s, s + 2.0 - 1e-6) < s + 2.0 - 1e-6);

    for (double kappa : {s + 1.5, 2 * s + 3.5, 2 * s + 10.0}) {
      const double t2 = 3.0 * (kappa - s - 1.0);
      CHECK(phase2_fixed_point(3, s, kappa) == t2);
      CHECK(phase2_next(3, s, kappa, t2) == Approx(t2).epsilon(1e-15));
      CHECK(phase2_next(3, s, kappa, t2 - 1e-6) > t2 - 1e-6);
      CHECK(phase2_next(3, s, kappa, t2 + 1e-6) < t2 + 1e-6);
      CHECK(std::isinf(phase2_fixed_point(2, s, kappa)));
      CHECK(phase2_next(2, s, kappa, 3.0) - 3.0 == Approx(0.5 * (kappa - 1.0 - s)));
    }
  }
}

TEST_CASE("interpolation exponents reproduce the recursions") {
  for (double s : {0.0, 1.0, 2.5}) {
    for (double nu : {7.0, 10.0, 25.0, 100.0}) {
      CHECK(phase1_next_from_exponents(3, s, nu) == Approx(phase1_next(3, s, nu)).epsilon(1e-12));
      CHECK(phase1_next_from_exponents(2, s, nu) == Approx(phase1_next(2, s, nu)).epsilon(1e-12));
    }
    for (double nu : {1.5, 3.0, 8.0}) {
      const double kappa = 2 * s + 5;
      CHECK(phase2_next_from_exponents(3, s, kappa, nu) == Approx(phase2_next(3, s, kappa, nu)).epsilon(1e-12));
      CHECK(phase2_next_from_exponents(2, s, kappa, nu) == Approx(phase2_next(2, s, kappa, nu)).epsilon(1e-12));
    }
  }
  // Hoelder pairs: 1/p + 1/p* = 1.
  const auto e = phase1_exponents(3, 1.0, 12.0);
  CHECK(1.0 / e.p + 1.0 / e.p_star == Approx(1.0));
  CHECK(e.theta > 0.0);
  CHECK(e.theta < 1.0);
}

TEST_CASE("feasibility") {
  CHECK(moser_feasible(3, 0, 4));
  CHECK_FALSE(moser_feasible(3, 1, 5));
  CHECK(moser_feasible(3, 1, std::nextafter(5.0, 6.0)));
  CHECK(moser_feasible(2, 1, 2.5));
  CHECK_FALSE(moser_feasible(2, 1, 2.0));
  CHECK_FALSE(moser_feasible(2, 0.5, 3.0));  // s + 1 < 2
}

TEST_CASE("schedule for d = 3, s = 0, kappa = 4") {
  const auto sch = build_schedule(3, 0, 4, 0.5, 0.1);
  REQUIRE(sch.feasible);
  CHECK(sch.nu0 == 1.5);
  REQUIRE(sch.exponents.size() > 3);
  CHECK(sch.exponents[1].nu == Approx(2.75));
  CHECK(sch.exponents[2].nu == Approx(2.75 * 5.0 / 6.0 + 1.5));
  for (int n = 0; n <= sch.phase2_steps; ++n) {
    CHECK(sch.exponents[n].nu == Approx(9.0 - 7.5 * std::pow(5.0 / 6.0, n)).epsilon(1e-12));
  }
  for (std::size_t k = 1; k < sch.exponents.size(); ++k) {
    CHECK(sch.exponents[k].nu > sch.exponents[k - 1].nu);
    CHECK(sch.exponents[k].tau > sch.exponents[k - 1].tau);
  }
  // The handover happens right after the first exponent above 6.
  const auto& last_boot = sch.exponents[sch.phase2_steps];
  CHECK(last_boot.nu > 6.0);
  CHECK(sch.exponents[sch.phase2_steps - 1].nu <= 6.0);
  CHECK(sch.exponents[sch.phase2_steps + 1].phase == MoserPhase::main);
  CHECK(sch.tau_increment_sum <= sch.tau_bound);
  CHECK(sch.tau_ladder.back() == Approx(sch.tau_increment_sum));
}

TEST_CASE("infeasible and two-dimensional schedules") {
  const auto bad = build_schedule(3, 1, 5, 0.5, 0.1);
  CHECK_FALSE(bad.feasible);
  CHECK(bad.exponents.empty());

  const auto two = build_schedule(2, 1, 2.5, 0.0, 0.1);
  REQUIRE(two.feasible);
  CHECK(two.nu0 == 1.5);
  CHECK(two.exponents[1].nu - two.exponents[0].nu == Approx(0.25));
  CHECK(two.phase2_steps > 0);

  CHECK_THROWS(build_schedule(3, 0, 4, 1.5, 0.1));
  CHECK_THROWS(build_schedule(3, 0, 4, 0.5, 0.0));
}

TEST_CASE("termination across the feasible range") {
  for (double s = 0.0; s <= 5.0; s += 0.25) {
    for (double k = 0.05; k <= 17.0; k += 0.85) {
      const auto sch = build_schedule(3, s, 2 * s + 3 + k, 0.5, 0.1);
      CHECK(sch.feasible);
      CHECK(sch.phase2_steps <= 10000);
    }
  }
}

TEST_CASE("schedule json") {
  const auto j = to_json(build_schedule(3, 0, 4, 0.5, 0.1));
  CHECK(j["feasible"] == true);
  CHECK(j["d"] == 3);
  CHECK(j["nu0"] == 1.5);
  CHECK(j["exponents"][0]["theta"].is_null());
  CHECK(j["exponents"][1]["phase"] == 2);
}

TEST_CASE("z-norm ladder on constant trajectories") {
  Grid g(10, 2.0);
  const auto sch = build_schedule(3, 0, 4, 0.5, 0.1);
  std::vector<Snapshot> ones, twos;
  for (int k = 0; k <= 10; ++k) {
    ones.push_back({0.1 * k, GridFunction(g, 1.0)});
    twos.push_back({0.1 * k, GridFunction(g, 2.0)});
  }
  for (const auto& e : z_norm_ladder(ones, sch)) {
    CHECK(e.sup_lnu == Approx(std::pow(2.0, 1.0 / e.nu)));
  }
  auto two_sch = sch;
  two_sch.exponents = {{0, 2.0, MoserPhase::bootstrap, {}, 0.0}};
  const auto z = z_norm_ladder(twos, two_sch);
  REQUIRE(z.size() == 1);
  CHECK(z[0].sup_lnu == Approx(0.5 * std::sqrt(2.0)));
  // (int_0^1 ||z||_{L^6}^2 dt)^{1/2} with ||z||_{L^6} = 0.5 * 2^{1/6}.
  CHECK(z[0].lnu_l3nu == Approx(0.5 * std::pow(2.0, 1.0 / 6.0)));

  std::vector<Snapshot> bad{{0.0, GridFunction(g, 0.0)}};
  CHECK_THROWS_AS(z_norm_ladder(bad, sch), SingularityError);
}
