#pragma once

#include <iosfwd>

#include "filmflow/grid.hpp"
#include "filmflow/nonlinearities.hpp"

namespace filmflow {

struct EnergyBreakdown {
  double dirichlet = 0.0;        ///< 1/2 |grad u|^2 (face quadrature)
  double potential_F = 0.0;      ///< int F(u) or F_eps(u)
  double potential_Gamma = 0.0;  ///< int Gamma(u)
  double forcing = 0.0;          ///< -int g u
  double total = 0.0;
};

/// Forcing g sampled at cell centres.
GridFunction forcing_field(const ModelParams& p, const Grid& grid);

/// Face mobility b_eps(u) averaged from adjacent cells.
FaceField mobility_faces(const ModelParams& p, const GridFunction& u,
                         FaceMean mean = FaceMean::arithmetic);

/// Discrete energy; with `regularized` false every cell must be positive.
EnergyBreakdown energy(const ModelParams& p, const GridFunction& u, bool regularized);

/// int M(u) (or M_eps(u) when regularized).
double entropy_total(const ModelParams& p, const GridFunction& u, bool regularized);

/// ||u1 - u2||_{H^1} + ||u1^{1-kappa} - u2^{1-kappa}||_{L^1}.
double phase_metric(const ModelParams& p, const GridFunction& u1, const GridFunction& u2);

/// Discrete H^1 norm sqrt(||v||^2 + ||grad v||^2).
double h1_norm(const GridFunction& v);

/// sum_faces b_face |grad w|^2 vol with b_face the face-averaged b_eps(u).
double dissipation_rate(const ModelParams& p, const GridFunction& u, const GridFunction& w,
                        FaceMean mean = FaceMean::arithmetic);

struct CoercivityWitness {
  double lower_combo = 0.0;  ///< ||u||_V^2 + ||u^{1-kappa}||_{L^1}
  double upper_combo = 0.0;  ///< 1 + lower_combo
  double energy = 0.0;
};

CoercivityWitness coercivity_witness(const ModelParams& p, const GridFunction& u);

/// One CSV row: t,dirichlet,F,Gamma,forcing,total.
void write_energy_row(std::ostream& os, double t, const EnergyBreakdown& e);

}  // namespace filmflow
