#include "filmflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace filmflow {

Grid::Grid(std::size_t n, double length) : dim_(1), n_{n, 1}, length_{length, 1.0} {
  if (n == 0) throw std::invalid_argument("grid needs at least one cell");
  if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
}

Grid::Grid(std::size_t nx, std::size_t ny, double lx, double ly)
    : dim_(2), n_{nx, ny}, length_{lx, ly} {
  if (nx == 0 || ny == 0) throw std::invalid_argument("grid needs at least one cell per axis");
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("grid lengths must be positive");
}

double Grid::cell_volume() const { return dim_ == 1 ? h(0) : h(0) * h(1); }

double Grid::volume() const { return dim_ == 1 ? length_[0] : length_[0] * length_[1]; }

double Grid::center(std::size_t cell, int axis) const {
  const std::size_t i = axis == 0 ? cell % n_[0] : cell / n_[0];
  return (static_cast<double>(i) + 0.5) * h(axis);
}

std::size_t Grid::face_count(int axis) const {
  if (axis >= dim_) return 0;
  return axis == 0 ? (n_[0] - 1) * n_[1] : n_[0] * (n_[1] - 1);
}

std::pair<std::size_t, std::size_t> Grid::face_cells(int axis, std::size_t f) const {
  if (axis == 0) {
    const std::size_t row = f / (n_[0] - 1);
    const std::size_t i = f % (n_[0] - 1);
    const std::size_t lo = index(i, row);
    return {lo, lo + 1};
  }
  return {f, f + n_[0]};
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && n_ == other.n_ && length_ == other.length_;
}

// --- GridFunction ---------------------------------------------------------

GridFunction::GridFunction(const Grid& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

GridFunction::GridFunction(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("value count does not match grid cell count");
  }
}

GridFunction GridFunction::sample(const Grid& grid,
                                  const std::function<double(double, double)>& fn) {
  GridFunction out(grid);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const double y = grid.dim() == 2 ? grid.center(c, 1) : 0.0;
    out[c] = fn(grid.center(c, 0), y);
  }
  return out;
}

double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  if (grid_ != other.grid_) throw std::invalid_argument("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  if (grid_ != other.grid_) throw std::invalid_argument("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double factor) {
  for (double& v : values_) v *= factor;
  return *this;
}

GridFunction operator+(GridFunction lhs, const GridFunction& rhs) { return lhs += rhs; }
GridFunction operator-(GridFunction lhs, const GridFunction& rhs) { return lhs -= rhs; }
GridFunction operator*(double factor, GridFunction rhs) { return rhs *= factor; }

GridFunction map(const GridFunction& u, const std::function<double(double)>& fn) {
  GridFunction out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
  return out;
}

// --- FaceField ------------------------------------------------------------

FaceField::FaceField(const Grid& grid, double fill) : grid_(grid) {
  for (int a = 0; a < 2; ++a) values_[a].assign(grid.face_count(a), fill);
}

double FaceField::norm() const { return std::sqrt(inner(*this, *this)); }

// --- calculus -------------------------------------------------------------

FaceField gradient_faces(const GridFunction& u) {
  const Grid& g = u.grid();
  FaceField out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const double inv_h = 1.0 / g.h(a);
    auto& face = out.axis(a);
    for (std::size_t f = 0; f < face.size(); ++f) {
      const auto [lo, hi] = g.face_cells(a, f);
      face[f] = (u[hi] - u[lo]) * inv_h;
    }
  }
  return out;
}

GridFunction divergence(const FaceField& flux) {
  const Grid& g = flux.grid();
  GridFunction out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const double inv_h = 1.0 / g.h(a);
    const auto& face = flux.axis(a);
    for (std::size_t f = 0; f < face.size(); ++f) {
      const auto [lo, hi] = g.face_cells(a, f);
      out[lo] += face[f] * inv_h;
      out[hi] -= face[f] * inv_h;
    }
  }
  return out;
}

GridFunction laplacian(const GridFunction& u) { return divergence(gradient_faces(u)); }

FaceField face_average(const GridFunction& c, FaceMean mean) {
  const Grid& g = c.grid();
  FaceField out(g);
  for (int a = 0; a < g.dim(); ++a) {
    auto& face = out.axis(a);
    for (std::size_t f = 0; f < face.size(); ++f) {
      const auto [lo, hi] = g.face_cells(a, f);
      const double x = c[lo];
      const double y = c[hi];
      if (mean == FaceMean::arithmetic) {
        face[f] = 0.5 * (x + y);
      } else {
        face[f] = (x + y) > 0.0 ? 2.0 * x * y / (x + y) : 0.0;
      }
    }
  }
  return out;
}

FaceField multiply(const FaceField& a, const FaceField& b) {
  FaceField out(a.grid());
  for (int ax = 0; ax < a.grid().dim(); ++ax) {
    for (std::size_t f = 0; f < out.axis(ax).size(); ++f) {
      out.axis(ax)[f] = a.axis(ax)[f] * b.axis(ax)[f];
    }
  }
  return out;
}

double integrate(const GridFunction& u) {
  double sum = 0.0;
  for (double v : u.values()) sum += v;
  return sum * u.grid().cell_volume();
}

double mean(const GridFunction& u) { return integrate(u) / u.grid().volume(); }

double inner(const GridFunction& u, const GridFunction& v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum * u.grid().cell_volume();
}

double inner(const FaceField& a, const FaceField& b) {
  double sum = 0.0;
  for (int ax = 0; ax < a.grid().dim(); ++ax) {
    for (std::size_t f = 0; f < a.axis(ax).size(); ++f) sum += a.axis(ax)[f] * b.axis(ax)[f];
  }
  return sum * a.grid().cell_volume();
}

double l2_norm(const GridFunction& u) { return std::sqrt(inner(u, u)); }

void write_csv(std::ostream& os, const GridFunction& u) {
  const Grid& g = u.grid();
  os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  os << std::setprecision(17);
  for (std::size_t c = 0; c < g.size(); ++c) {
    os << g.center(c, 0) << ',';
    if (g.dim() == 2) os << g.center(c, 1) << ',';
    os << u[c] << '\n';
  }
}

}  // namespace filmflow
