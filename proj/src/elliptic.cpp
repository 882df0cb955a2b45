#include "filmflow/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "filmflow/errors.hpp"

namespace filmflow {

namespace {

struct CgResult {
  GridFunction x;
  double residual = 0.0;
  std::size_t iterations = 0;
};

double dot(const GridFunction& a, const GridFunction& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Conjugate gradients for a symmetric positive definite operator.
CgResult conjugate_gradient(const std::function<GridFunction(const GridFunction&)>& apply,
                            const GridFunction& rhs, GridFunction x, const CgOptions& opts) {
  const std::size_t max_it = opts.max_iterations ? opts.max_iterations : 10 * rhs.size();
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  if (rhs_norm == 0.0) return {GridFunction(rhs.grid()), 0.0, 0};

  GridFunction r = rhs - apply(x);
  GridFunction p = r;
  double rr = dot(r, r);
  std::size_t it = 0;
  while (std::sqrt(rr) > opts.rel_tol * rhs_norm) {
    if (it == max_it) {
      throw SolverError("conjugate gradient stalled at relative residual " +
                        std::to_string(std::sqrt(rr) / rhs_norm));
    }
    const GridFunction ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw SolverError("conjugate gradient breakdown: operator not positive");
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
    ++it;
  }
  return {std::move(x), std::sqrt(rr) / rhs_norm, it};
}

double relative_change(const GridFunction& now, const GridFunction& before) {
  const double scale = std::max(l2_norm(now), 1e-300);
  return l2_norm(now - before) / scale;
}

}  // namespace

GridFunction mollify_initial(const GridFunction& u0, double eps, const CgOptions& cg) {
  if (eps == 0.0) return u0;
  const double e2 = eps * eps;
  auto apply = [e2](const GridFunction& v) { return v - e2 * laplacian(v); };
  return conjugate_gradient(apply, u0, u0, cg).x;
}

EllipticSolveReport degenerate_elliptic_solve(const GridFunction& b, const GridFunction& phi,
                                              const DegenerateSolveOptions& opts) {
  if (b.grid() != phi.grid()) throw std::invalid_argument("grid mismatch");
  if (b.min() < 0.0) throw std::invalid_argument("degenerate_elliptic_solve needs b >= 0");

  const FaceField b_face = face_average(b, opts.mean);
  double face_min = INFINITY;
  double face_max = 0.0;
  for (int a = 0; a < b.grid().dim(); ++a) {
    for (double v : b_face.axis(a)) {
      face_min = std::min(face_min, v);
      face_max = std::max(face_max, v);
    }
  }

  auto solve_with = [&](const FaceField& coeff, const GridFunction& guess) {
    auto apply = [&coeff](const GridFunction& v) {
      return v - divergence(multiply(coeff, gradient_faces(v)));
    };
    return conjugate_gradient(apply, phi, guess, opts.cg);
  };

  EllipticSolveReport report{phi, 0.0, 0, {}, {}, {}};
  if (face_max == 0.0) return report;  // b == 0 (or a single cell): w = phi
  if (face_min > 0.0) {
    CgResult r = solve_with(b_face, phi);
    report.solution = std::move(r.x);
    report.residual_norm = r.residual;
    report.iterations = r.iterations;
    return report;
  }

  // Some face carries no mobility: floor it and extrapolate eta -> 0.
  auto floored = [&](double eta) {
    FaceField c = b_face;
    for (int a = 0; a < b.grid().dim(); ++a) {
      for (double& v : c.axis(a)) v = std::max(v, eta);
    }
    return c;
  };

  // The floor enters through eta / h^2; start where w(eta) is already affine.
  double h_min = b.grid().h(0);
  for (int a = 1; a < b.grid().dim(); ++a) h_min = std::min(h_min, b.grid().h(a));
  double eta = opts.eta0 * std::min(face_max, h_min * h_min);
  CgResult prev = solve_with(floored(eta), phi);
  report.floors.push_back(eta);
  report.iterations += prev.iterations;
  GridFunction prev_extrap = prev.x;
  for (std::size_t k = 1; k < opts.ladder_max; ++k) {
    eta *= 0.5;
    CgResult cur = solve_with(floored(eta), prev.x);
    report.floors.push_back(eta);
    report.iterations += cur.iterations;
    report.residual_norm = cur.residual;
    report.ladder_increments.push_back(relative_change(cur.x, prev.x));

    // w(eta) is affine in eta to leading order: w(0) ~ 2 w(eta/2) - w(eta).
    GridFunction extrap = 2.0 * cur.x - prev.x;
    if (k > 1) {
      const double step = relative_change(extrap, prev_extrap);
      report.extrapolated_increments.push_back(step);
      if (step <= opts.ladder_tol) {
        report.solution = std::move(extrap);
        return report;
      }
    }
    prev_extrap = std::move(extrap);
    prev = std::move(cur);
  }
  throw DegenerateSolveError("floor ladder did not settle after " +
                             std::to_string(opts.ladder_max) + " halvings");
}

IpepaResidual ipepa_identity_residual(const GridFunction& b, const GridFunction& w,
                                      FaceMean mean) {
  const FaceField b_face = face_average(b, mean);
  const FaceField grad = gradient_faces(w);
  const FaceField flux = multiply(b_face, grad);
  const double lhs = -inner(divergence(flux), w);
  const double rhs = inner(flux, grad);
  double scale = 0.0;
  for (int a = 0; a < b.grid().dim(); ++a) {
    for (std::size_t f = 0; f < grad.axis(a).size(); ++f) {
      scale += std::abs(b_face.axis(a)[f]) * grad.axis(a)[f] * grad.axis(a)[f];
    }
  }
  scale *= b.grid().cell_volume();
  return {std::abs(lhs - rhs), scale};
}

}  // namespace filmflow
