#include "hjlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hjlab {

namespace {

long wrap(long i, long n) {
  long r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

Grid::Grid(int dim, int res) : dim_(dim), res_(res), size_(1) {
  if (dim < 1 || dim > 3) {
    throw std::invalid_argument("grid dimension must be 1, 2 or 3");
  }
  if (res < 4) {
    throw std::invalid_argument("grid resolution must be at least 4");
  }
  for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(res);
}

std::size_t Grid::index(std::array<long, 3> idx) const {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int d = 0; d < dim_; ++d) {
    flat += static_cast<std::size_t>(wrap(idx[static_cast<std::size_t>(d)], res_)) * stride;
    stride *= static_cast<std::size_t>(res_);
  }
  return flat;
}

std::array<long, 3> Grid::multi_index(std::size_t flat) const {
  std::array<long, 3> idx{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    idx[static_cast<std::size_t>(d)] = static_cast<long>(flat % static_cast<std::size_t>(res_));
    flat /= static_cast<std::size_t>(res_);
  }
  return idx;
}

Vec3 Grid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec3 x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim_; ++d) {
    x[static_cast<std::size_t>(d)] = static_cast<double>(idx[static_cast<std::size_t>(d)]) / res_;
  }
  return x;
}

Grid make_grid(int dim, int res) { return Grid(dim, res); }

PeriodicField::PeriodicField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("field size does not match grid");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::domain_error("field value is not finite");
  }
}

double PeriodicField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

double PeriodicField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

double PeriodicField::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

PeriodicField sample(const PointFunction& f, const Grid& grid) {
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid.node(i));
    if (!std::isfinite(v)) {
      throw std::domain_error("non-finite sample at node " + std::to_string(i));
    }
    values[i] = v;
  }
  return PeriodicField(grid, std::move(values));
}

double interp(const PeriodicField& field, const Vec3& x) {
  const Grid& g = field.grid();
  const int dim = g.dim();
  const double res = g.res();
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    const std::size_t k = static_cast<std::size_t>(d);
    const double s = (x[k] - std::floor(x[k])) * res;
    double fl = std::floor(s);
    double fr = s - fl;
    // s can round up to exactly res for x slightly below an integer.
    if (fl >= res) {
      fl = 0.0;
      fr = 0.0;
    }
    base[k] = static_cast<long>(fl);
    frac[k] = fr;
  }
  const int corners = 1 << dim;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<long, 3> idx = base;
    for (int d = 0; d < dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(d);
      if (c & (1 << d)) {
        w *= frac[k];
        idx[k] += 1;
      } else {
        w *= 1.0 - frac[k];
      }
    }
    if (w != 0.0) acc += w * field[g.index(idx)];
  }
  return acc;
}

double periodic_integral(const PeriodicField& f) {
  if (f.grid().dim() != 1) throw std::invalid_argument("1D field required");
  return f.mean();
}

double ergodic_defect(const PeriodicField& f, double length) {
  if (f.grid().dim() != 1) throw std::invalid_argument("1D field required");
  if (!(length > 0.0)) throw std::invalid_argument("length must be positive");
  for (double v : f.values()) {
    if (v < 0.0) throw std::invalid_argument("ergodic_defect needs f >= 0");
  }
  const long n = f.grid().res();
  const double h = f.grid().spacing();
  const double period_integral = periodic_integral(f);
  const double whole = std::floor(length);
  const double rem = length - whole;

  // int_0^rem of the piecewise-linear interpolant
  const long full_cells = std::min(static_cast<long>(std::floor(rem / h)), n - 1);
  double partial = 0.0;
  for (long i = 0; i < full_cells; ++i) {
    partial += 0.5 * h * (f[static_cast<std::size_t>(i)] + f[static_cast<std::size_t>((i + 1) % n)]);
  }
  const double s = rem - static_cast<double>(full_cells) * h;
  const double f0 = f[static_cast<std::size_t>(full_cells)];
  const double f1 = f[static_cast<std::size_t>((full_cells + 1) % n)];
  partial += s * (f0 + 0.5 * (f1 - f0) * s / h);

  return std::abs(partial - rem * period_integral);
}

std::size_t UniformBox::size() const {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

std::size_t UniformBox::index(std::array<long, 3> idx) const {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int d = 0; d < dim; ++d) {
    const long i = std::clamp<long>(idx[static_cast<std::size_t>(d)], 0, n - 1);
    flat += static_cast<std::size_t>(i) * stride;
    stride *= static_cast<std::size_t>(n);
  }
  return flat;
}

std::array<long, 3> UniformBox::multi_index(std::size_t flat) const {
  std::array<long, 3> idx{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    idx[static_cast<std::size_t>(d)] = static_cast<long>(flat % static_cast<std::size_t>(n));
    flat /= static_cast<std::size_t>(n);
  }
  return idx;
}

Vec3 UniformBox::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec3 x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    x[static_cast<std::size_t>(d)] = coord(idx[static_cast<std::size_t>(d)]);
  }
  return x;
}

bool UniformBox::on_boundary(std::size_t flat) const {
  const auto idx = multi_index(flat);
  for (int d = 0; d < dim; ++d) {
    const long i = idx[static_cast<std::size_t>(d)];
    if (i == 0 || i == n - 1) return true;
  }
  return false;
}

UniformBox UniformBox::symmetric(int dim, int n, double half_width) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("box dimension must be 1, 2 or 3");
  if (n < 2) throw std::invalid_argument("box needs at least two nodes per axis");
  if (!(half_width > 0.0)) throw std::invalid_argument("box half width must be positive");
  return UniformBox{dim, n, -half_width, 2.0 * half_width / (n - 1)};
}

double interp_box(const UniformBox& box, const std::vector<double>& values,
                  const Vec3& x) {
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int d = 0; d < box.dim; ++d) {
    const std::size_t k = static_cast<std::size_t>(d);
    double s = (x[k] - box.lo) / box.h;
    s = std::clamp(s, 0.0, static_cast<double>(box.n - 1));
    double fl = std::floor(s);
    if (fl >= box.n - 1) fl = box.n - 2;
    base[k] = static_cast<long>(fl);
    frac[k] = s - fl;
  }
  const int corners = 1 << box.dim;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<long, 3> idx = base;
    for (int d = 0; d < box.dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(d);
      if (c & (1 << d)) {
        w *= frac[k];
        idx[k] += 1;
      } else {
        w *= 1.0 - frac[k];
      }
    }
    if (w != 0.0) acc += w * values[box.index(idx)];
  }
  return acc;
}

void write_field_csv(const PeriodicField& field, std::ostream& out) {
  const Grid& g = field.grid();
  static constexpr const char* kAxis[] = {"i", "j", "k"};
  for (int d = 0; d < g.dim(); ++d) out << kAxis[d] << ',';
  out << "value\n";
  out.precision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.multi_index(i);
    for (int d = 0; d < g.dim(); ++d) out << idx[static_cast<std::size_t>(d)] << ',';
    out << field[i] << '\n';
  }
}

PeriodicField read_field_csv(std::istream& in, const Grid& grid) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty field CSV");
  std::vector<double> values(grid.size(), 0.0);
  std::vector<bool> seen(grid.size(), false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<long, 3> idx{0, 0, 0};
    for (int d = 0; d < grid.dim(); ++d) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("short CSV row: " + line);
      idx[static_cast<std::size_t>(d)] = std::stol(cell);
    }
    if (!std::getline(ss, cell, ',')) throw std::runtime_error("short CSV row: " + line);
    const std::size_t flat = grid.index(idx);
    values[flat] = std::stod(cell);
    seen[flat] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::runtime_error("field CSV does not cover every node");
  }
  return PeriodicField(grid, std::move(values));
}

std::string field_header_json(const PeriodicField& field) {
  nlohmann::json j;
  j["dim"] = field.grid().dim();
  j["res"] = field.grid().res();
  return j.dump(2);
}

Grid grid_from_header_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  return Grid(j.at("dim").get<int>(), j.at("res").get<int>());
}

void save_field(const PeriodicField& field, const std::filesystem::path& stem) {
  std::ofstream csv(stem.string() + ".csv");
  if (!csv) throw std::runtime_error("cannot write " + stem.string() + ".csv");
  write_field_csv(field, csv);
  std::ofstream header(stem.string() + ".json");
  if (!header) throw std::runtime_error("cannot write " + stem.string() + ".json");
  header << field_header_json(field) << '\n';
}

PeriodicField load_field(const std::filesystem::path& stem) {
  std::ifstream header(stem.string() + ".json");
  if (!header) throw std::runtime_error("cannot read " + stem.string() + ".json");
  std::stringstream buf;
  buf << header.rdbuf();
  const Grid grid = grid_from_header_json(buf.str());
  std::ifstream csv(stem.string() + ".csv");
  if (!csv) throw std::runtime_error("cannot read " + stem.string() + ".csv");
  return read_field_csv(csv, grid);
}

}  // namespace hjlab
