#pragma once

/// @file grid.hpp
/// @brief Cell-centred uniform grids on [0,Lx] (x [0,Ly]) with homogeneous
/// Neumann closure, and the discrete calculus built on them.
///
/// Unknowns live at cell centres. Gradients live on interior faces; boundary
/// faces carry zero flux, so the discrete divergence telescopes and the cell
/// sum of any divergence vanishes. With these conventions
///
///   sum_cells div(F) v vol = - sum_faces F (grad v) vol
///
/// holds exactly, which is what makes mass conservation and the discrete
/// energy identities exact.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace filmflow {

class Grid {
 public:
  /// 1D grid of `n` cells on [0, length].
  Grid(std::size_t n, double length);
  /// 2D grid of nx x ny cells on [0, lx] x [0, ly].
  Grid(std::size_t nx, std::size_t ny, double lx, double ly);

  int dim() const noexcept { return dim_; }
  std::size_t cells(int axis) const { return n_[axis]; }
  double length(int axis) const { return length_[axis]; }
  double h(int axis) const { return length_[axis] / static_cast<double>(n_[axis]); }
  std::size_t size() const noexcept { return n_[0] * n_[1]; }
  /// Cell volume h_x (* h_y).
  double cell_volume() const;
  /// |Omega|.
  double volume() const;

  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + n_[0] * j; }
  /// Cell-centre coordinate along `axis`.
  double center(std::size_t cell, int axis) const;

  /// Interior faces normal to `axis`.
  std::size_t face_count(int axis) const;
  /// Cells on the low and high side of interior face `f` normal to `axis`.
  std::pair<std::size_t, std::size_t> face_cells(int axis, std::size_t f) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int dim_;
  std::array<std::size_t, 2> n_;
  std::array<double, 2> length_;
};

/// Scalar field, one value per cell.
class GridFunction {
 public:
  explicit GridFunction(const Grid& grid, double fill = 0.0);
  GridFunction(const Grid& grid, std::vector<double> values);

  /// Samples `fn(x, y)` at cell centres (y = 0 in 1D).
  static GridFunction sample(const Grid& grid, const std::function<double(double, double)>& fn);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double min() const;
  double max() const;
  bool all_finite() const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double factor);

 private:
  Grid grid_;
  std::vector<double> values_;
};

GridFunction operator+(GridFunction lhs, const GridFunction& rhs);
GridFunction operator-(GridFunction lhs, const GridFunction& rhs);
GridFunction operator*(double factor, GridFunction rhs);

/// Applies `fn` cellwise.
GridFunction map(const GridFunction& u, const std::function<double(double)>& fn);

/// One value per interior face and axis.
class FaceField {
 public:
  explicit FaceField(const Grid& grid, double fill = 0.0);

  const Grid& grid() const noexcept { return grid_; }
  std::vector<double>& axis(int a) { return values_[a]; }
  const std::vector<double>& axis(int a) const { return values_[a]; }

  /// sqrt(sum_faces value^2 * cell_volume).
  double norm() const;

 private:
  Grid grid_;
  std::array<std::vector<double>, 2> values_;
};

/// How cell values are averaged onto a face.
enum class FaceMean { arithmetic, harmonic };

FaceField gradient_faces(const GridFunction& u);
GridFunction divergence(const FaceField& flux);
GridFunction laplacian(const GridFunction& u);
/// Face average of a cell field.
FaceField face_average(const GridFunction& c, FaceMean mean = FaceMean::arithmetic);
/// Pointwise product of face fields.
FaceField multiply(const FaceField& a, const FaceField& b);

double integrate(const GridFunction& u);
double mean(const GridFunction& u);
/// Cell inner product sum u v vol.
double inner(const GridFunction& u, const GridFunction& v);
/// Face inner product sum a b vol.
double inner(const FaceField& a, const FaceField& b);
double l2_norm(const GridFunction& u);

/// CSV snapshot: header "x,value" (1D) or "x,y,value" (2D), one row per cell.
void write_csv(std::ostream& os, const GridFunction& u);

}  // namespace filmflow
