#pragma once

/// @file elliptic.hpp
/// @brief The two auxiliary elliptic problems: the Neumann mollifier of the
/// initial datum and the (possibly degenerate) problem
///     -div(b grad w) + w = phi,   zero flux on the boundary,
/// plus the discrete integration-by-parts identity for -div(b grad w).

#include <cstddef>
#include <vector>

#include "filmflow/grid.hpp"

namespace filmflow {

struct EllipticSolveReport {
  GridFunction solution;
  double residual_norm = 0.0;   ///< relative CG residual of the last linear solve
  std::size_t iterations = 0;   ///< CG iterations summed over the floor ladder
  std::vector<double> floors;   ///< floor values eta used (empty if none needed)
  /// ||w_{eta_k} - w_{eta_{k-1}}|| / ||w_{eta_k}|| along the ladder.
  std::vector<double> ladder_increments;
  /// Same for the Richardson-extrapolated iterates.
  std::vector<double> extrapolated_increments;
};

struct CgOptions {
  double rel_tol = 1e-12;
  std::size_t max_iterations = 0;  ///< 0 selects 10 * cell count
};

struct DegenerateSolveOptions {
  FaceMean mean = FaceMean::arithmetic;
  double eta0 = 1e-3;          ///< first floor, relative to min(max face b, h_min^2)
  double ladder_tol = 1e-10;   ///< stop once extrapolated iterates move less than this
  std::size_t ladder_max = 40;
  CgOptions cg;
};

/// Solves (I - eps^2 Lap_h) u = u0. Preserves the mean.
GridFunction mollify_initial(const GridFunction& u0, double eps, const CgOptions& cg = {});

/// Solves -div(max(b_face, eta) grad w) + w = phi. When some face value of b
/// vanishes the floor eta is halved along a ladder and the iterates are
/// Richardson-extrapolated to eta = 0; b == 0 everywhere returns phi.
EllipticSolveReport degenerate_elliptic_solve(const GridFunction& b, const GridFunction& phi,
                                              const DegenerateSolveOptions& opts = {});

struct IpepaResidual {
  double absolute = 0.0;
  double scale = 0.0;  ///< sum_faces |b_face| |grad w|^2 vol
  double relative() const { return scale > 0.0 ? absolute / scale : absolute; }
};

/// |(-div(b grad w), w) - sum_faces b |grad w|^2 vol|.
IpepaResidual ipepa_identity_residual(const GridFunction& b, const GridFunction& w,
                                      FaceMean mean = FaceMean::arithmetic);

}  // namespace filmflow
