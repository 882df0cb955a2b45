#include "filmflow/functionals.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "filmflow/errors.hpp"

namespace filmflow {

namespace {

void require_positive_field(const GridFunction& u, const char* what) {
  for (std::size_t c = 0; c < u.size(); ++c) {
    if (!(u[c] > 0.0)) throw SingularityError(std::string(what) + " needs u > 0", c, u[c]);
  }
}

}  // namespace

GridFunction forcing_field(const ModelParams& p, const Grid& grid) {
  const ForcingSpec& g = p.g;
  switch (g.kind) {
    case ForcingSpec::Kind::constant:
      return GridFunction(grid, g.value);
    case ForcingSpec::Kind::cosine: {
      const double k = 2.0 * std::numbers::pi / grid.length(0);
      return GridFunction::sample(
          grid, [&](double x, double) { return g.value + g.amplitude * std::cos(k * x); });
    }
    case ForcingSpec::Kind::sampled:
      return GridFunction(grid, g.samples);
  }
  throw std::logic_error("unknown forcing kind");
}

FaceField mobility_faces(const ModelParams& p, const GridFunction& u, FaceMean mean) {
  return face_average(map(u, [&p](double r) { return eval_b_eps(p, r); }), mean);
}

EnergyBreakdown energy(const ModelParams& p, const GridFunction& u, bool regularized) {
  if (!regularized) require_positive_field(u, "unregularized energy");
  EnergyBreakdown e;
  const FaceField grad = gradient_faces(u);
  e.dirichlet = 0.5 * inner(grad, grad);

  const double vol = u.grid().cell_volume();
  const GridFunction g = forcing_field(p, u.grid());
  const bool with_gamma = !p.gamma.is_zero();
  double pot = 0.0;
  double gam = 0.0;
  double force = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    pot += regularized ? eval_F_eps(p, u[c]) : eval_F(p, u[c]);
    if (with_gamma) gam += eval_Gamma(p, u[c]);
    force -= g[c] * u[c];
  }
  e.potential_F = pot * vol;
  e.potential_Gamma = gam * vol;
  e.forcing = force * vol;
  e.total = e.dirichlet + e.potential_F + e.potential_Gamma + e.forcing;
  return e;
}

double entropy_total(const ModelParams& p, const GridFunction& u, bool regularized) {
  if (!regularized) require_positive_field(u, "unregularized entropy");
  double sum = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    sum += regularized ? eval_entropy_pair_eps(p, u[c]).M : eval_entropy_pair(p, u[c]).M;
  }
  return sum * u.grid().cell_volume();
}

double h1_norm(const GridFunction& v) {
  const FaceField grad = gradient_faces(v);
  return std::sqrt(inner(v, v) + inner(grad, grad));
}

double phase_metric(const ModelParams& p, const GridFunction& u1, const GridFunction& u2) {
  require_positive_field(u1, "phase metric");
  require_positive_field(u2, "phase metric");
  double l1 = 0.0;
  for (std::size_t c = 0; c < u1.size(); ++c) {
    l1 += std::abs(std::pow(u1[c], 1.0 - p.kappa) - std::pow(u2[c], 1.0 - p.kappa));
  }
  return h1_norm(u1 - u2) + l1 * u1.grid().cell_volume();
}

double dissipation_rate(const ModelParams& p, const GridFunction& u, const GridFunction& w,
                        FaceMean mean) {
  const FaceField b = mobility_faces(p, u, mean);
  const FaceField grad = gradient_faces(w);
  return inner(multiply(b, grad), grad);
}

CoercivityWitness coercivity_witness(const ModelParams& p, const GridFunction& u) {
  require_positive_field(u, "coercivity witness");
  const double v = h1_norm(u);
  double l1 = 0.0;
  for (double x : u.values()) l1 += std::pow(x, 1.0 - p.kappa);
  l1 *= u.grid().cell_volume();
  CoercivityWitness out;
  out.lower_combo = v * v + l1;
  out.upper_combo = 1.0 + out.lower_combo;
  out.energy = energy(p, u, false).total;
  return out;
}

void write_energy_row(std::ostream& os, double t, const EnergyBreakdown& e) {
  os << std::setprecision(17) << t << ',' << e.dirichlet << ',' << e.potential_F << ','
     << e.potential_Gamma << ',' << e.forcing << ',' << e.total << '\n';
}

}  // namespace filmflow
