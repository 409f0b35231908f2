#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjlab/vec.hpp"

namespace hjlab {

/// Uniform cell-corner grid on the torus [0,1)^dim. Node i sits at i/res on
/// every axis; there is no duplicated seam node.
class Grid {
 public:
  Grid(int dim, int res);

  int dim() const { return dim_; }
  int res() const { return res_; }
  double spacing() const { return 1.0 / res_; }
  std::size_t size() const { return size_; }

  /// Flat index of a multi-index; every component wraps modulo res.
  std::size_t index(std::array<long, 3> idx) const;
  std::array<long, 3> multi_index(std::size_t flat) const;
  Vec3 node(std::size_t flat) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_;
  int res_;
  std::size_t size_;
};

Grid make_grid(int dim, int res);

/// Sampled Z^n-periodic function. Values are stored axis-0 fastest.
class PeriodicField {
 public:
  PeriodicField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double min() const;
  double max() const;
  double mean() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

using PointFunction = std::function<double(const Vec3&)>;

/// values[i] = f(node_i). Throws std::domain_error on a non-finite sample.
PeriodicField sample(const PointFunction& f, const Grid& grid);

/// Multilinear interpolation of the periodic extension; exact at nodes.
double interp(const PeriodicField& field, const Vec3& x);

/// |int_0^L f - L int_0^1 f| for a nonnegative 1D field, using the trapezoid
/// rule on the periodic piecewise-linear extension. L is split into its
/// integer part and remainder.
double ergodic_defect(const PeriodicField& f, double length);

/// Trapezoid value of int_0^1 f for a 1D field.
double periodic_integral(const PeriodicField& f);

/// Uniform tensor grid on a box: node i along an axis sits at lo + i*h,
/// i = 0..n-1. Used for solver boxes and p/q tables.
struct UniformBox {
  int dim = 1;
  int n = 2;
  double lo = 0.0;
  double h = 1.0;

  std::size_t size() const;
  double hi() const { return lo + (n - 1) * h; }
  double coord(long i) const { return lo + static_cast<double>(i) * h; }
  std::size_t index(std::array<long, 3> idx) const;
  std::array<long, 3> multi_index(std::size_t flat) const;
  Vec3 node(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;

  /// Box [-half_width, half_width]^dim with n nodes per axis.
  static UniformBox symmetric(int dim, int n, double half_width);

  friend bool operator==(const UniformBox&, const UniformBox&) = default;
};

/// Multilinear interpolation on a box grid; points outside are clamped to the
/// box, which realizes constant extension beyond the boundary.
double interp_box(const UniformBox& box, const std::vector<double>& values,
                  const Vec3& x);

// Columnar CSV (index coordinates + value) with a JSON header (dim, res).
void write_field_csv(const PeriodicField& field, std::ostream& out);
PeriodicField read_field_csv(std::istream& in, const Grid& grid);
std::string field_header_json(const PeriodicField& field);
Grid grid_from_header_json(const std::string& json_text);

/// Writes `<stem>.csv` and `<stem>.json`.
void save_field(const PeriodicField& field, const std::filesystem::path& stem);
PeriodicField load_field(const std::filesystem::path& stem);

}  // namespace hjlab
