#include "hjlab/critical_distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hjlab/cell.hpp"

namespace hjlab {

namespace {

std::vector<double> speeds(const PeriodicField& V) {
  if (V.grid().dim() != 3) throw std::invalid_argument("critical distance needs a 3D field");
  std::vector<double> f(V.values().size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = V[i];
    if (v > 0.0) throw std::domain_error("potential must be nonpositive");
    f[i] = std::sqrt(-2.0 * v);
  }
  return f;
}

// Largest root of sum_i max(u - a_i, 0)^2 = fh^2 for sorted a.
double local_solve(std::array<double, 3> a, double fh) {
  std::sort(a.begin(), a.end());
  double u = a[0] + fh;
  if (u <= a[1]) return u;
  const double d01 = a[0] - a[1];
  u = 0.5 * (a[0] + a[1] + std::sqrt(std::max(2.0 * fh * fh - d01 * d01, 0.0)));
  if (u <= a[2]) return u;
  const double s = a[0] + a[1] + a[2];
  const double q = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
  return (s + std::sqrt(std::max(s * s - 3.0 * (q - fh * fh), 0.0))) / 3.0;
}

long wrap(long i, long n) { return ((i % n) + n) % n; }

}  // namespace

std::vector<char> line_source_nodes(const Grid& grid, int line) {
  if (grid.dim() != 3) throw std::invalid_argument("line sources live on a 3D grid");
  if (line < 1 || line > 3) throw std::invalid_argument("line index must be 1, 2 or 3");
  const double half = 0.5 * grid.spacing();
  std::vector<char> src(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto [u, w] = line_offsets(line, grid.node(i));
    u -= std::round(u);
    w -= std::round(w);
    src[i] = std::hypot(u, w) <= half * (1.0 + 1e-12) ? 1 : 0;
  }
  return src;
}

DistanceField sweep_line_problem(const PeriodicField& V, int line, const Vec3& shift,
                                 double level) {
  const Grid& grid = V.grid();
  if (grid.dim() != 3) throw std::invalid_argument("critical distance needs a 3D field");
  const long n = grid.res();
  const double h = grid.spacing();
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (V[i] > level) throw std::domain_error("potential exceeds the level");
    f[i] = std::sqrt(2.0 * (level - V[i]));
  }

  DistanceField out;
  out.grid = grid;
  out.line = line;
  out.source = line_source_nodes(grid, line);
  out.values.assign(grid.size(), kInfinity);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (out.source[i]) out.values[i] = 0.0;
  }
  auto& d = out.values;
  auto at = [&](long i, long j, long k) {
    return d[static_cast<std::size_t>(wrap(i, n) + n * (wrap(j, n) + n * wrap(k, n)))];
  };
  // g_i = max(s_i + D-_i v, -(s_i + D+_i v), 0) = max(v - b_i, 0) / h.
  auto effective_neighbours = [&](long i, long j, long k) {
    return std::array<double, 3>{
        std::min(at(i - 1, j, k) - shift[0] * h, at(i + 1, j, k) + shift[0] * h),
        std::min(at(i, j - 1, k) - shift[1] * h, at(i, j + 1, k) + shift[1] * h),
        std::min(at(i, j, k - 1) - shift[2] * h, at(i, j, k + 1) + shift[2] * h)};
  };

  for (int round = 0; round < 5000; ++round) {
    double change = 0.0;
    for (int order = 0; order < 8; ++order) {
      const bool fi = order & 1;
      const bool fj = order & 2;
      const bool fk = order & 4;
      for (long kk = 0; kk < n; ++kk) {
        const long k = fk ? n - 1 - kk : kk;
        for (long jj = 0; jj < n; ++jj) {
          const long j = fj ? n - 1 - jj : jj;
          for (long ii = 0; ii < n; ++ii) {
            const long i = fi ? n - 1 - ii : ii;
            const std::size_t flat = static_cast<std::size_t>(i + n * (j + n * k));
            if (out.source[flat]) continue;
            const auto b = effective_neighbours(i, j, k);
            if (!std::isfinite(b[0]) && !std::isfinite(b[1]) && !std::isfinite(b[2])) continue;
            const double u = local_solve(b, f[flat] * h);
            if (u < d[flat]) {
              change = std::max(change, std::isfinite(d[flat]) ? d[flat] - u : kInfinity);
              d[flat] = u;
            }
          }
        }
      }
    }
    out.sweeps += 8;
    if (change <= 1e-10) break;
  }

  double res = 0.0;
  for (long k = 0; k < n; ++k) {
    for (long j = 0; j < n; ++j) {
      for (long i = 0; i < n; ++i) {
        const std::size_t flat = static_cast<std::size_t>(i + n * (j + n * k));
        if (out.source[flat]) continue;
        double s = 0.0;
        for (double b : effective_neighbours(i, j, k)) {
          const double g = std::max(d[flat] - b, 0.0);
          s += g * g;
        }
        res = std::max(res, std::abs(std::sqrt(s) / h - f[flat]));
      }
    }
  }
  out.residual = res;
  return out;
}

DistanceField jacobi_distance(const PeriodicField& V, int line) {
  try {
    return sweep_line_problem(V, line, Vec3{0, 0, 0}, 0.0);
  } catch (const std::domain_error&) {
    throw std::domain_error("potential must be nonpositive");
  }
}

std::vector<double> graph_distance(const PeriodicField& V, int line, int stencil) {
  if (stencil < 1) throw std::invalid_argument("stencil must be at least 1");
  const Grid& grid = V.grid();
  const std::vector<double> f = speeds(V);
  const long n = grid.res();
  const double h = grid.spacing();
  const std::vector<char> src = line_source_nodes(grid, line);

  struct Offset {
    long dx, dy, dz;
    double len;
  };
  std::vector<Offset> offsets;
  for (long dz = -stencil; dz <= stencil; ++dz) {
    for (long dy = -stencil; dy <= stencil; ++dy) {
      for (long dx = -stencil; dx <= stencil; ++dx) {
        if (std::gcd(std::gcd(std::abs(dx), std::abs(dy)), std::abs(dz)) != 1) continue;
        offsets.push_back({dx, dy, dz, h * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz))});
      }
    }
  }

  std::vector<double> d(grid.size(), kInfinity);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (src[i]) {
      d[i] = 0.0;
      heap.push({0.0, i});
    }
  }
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > d[u]) continue;
    const auto idx = grid.multi_index(u);
    const Vec3 x = grid.node(u);
    for (const Offset& o : offsets) {
      const std::size_t v = static_cast<std::size_t>(
          wrap(idx[0] + o.dx, n) + n * (wrap(idx[1] + o.dy, n) + n * wrap(idx[2] + o.dz, n)));
      if (d[v] <= du) continue;
      const Vec3 mid = x + Vec3{0.5 * h * o.dx, 0.5 * h * o.dy, 0.5 * h * o.dz};
      const double fm = std::sqrt(std::max(-2.0 * interp(V, mid), 0.0));
      const double cand = du + o.len * (f[u] + 4.0 * fm + f[v]) / 6.0;
      if (cand < d[v]) {
        d[v] = cand;
        heap.push({cand, v});
      }
    }
  }
  return d;
}

std::string GapReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "hjlab.noncont/1";
  j["res"] = res;
  j["line_i"] = line_i;
  j["line_j"] = line_j;
  j["beta"] = beta;
  j["corrector_method"] = "stationary_sweep";
  j["eps"] = eps;
  j["hbar"] = hbar;
  j["deviation"] = deviation;
  j["corrector_residual"] = corrector_residual;
  j["gap"] = gap;
  j["sweeps"] = sweeps;
  j["eikonal_residual"] = eikonal_residual;
  j["cross_check"] = {{"eps", cross_check_eps},
                      {"horizon", cross_check_horizon},
                      {"hbar", cross_check_hbar},
                      {"hbar_error", cross_check_hbar_error},
                      {"deviation", cross_check_deviation}};
  return j.dump(2);
}

GapReport corrector_limit_gap(double beta, const std::vector<double>& eps_list, int line_i,
                              int line_j, int res, double cross_check_horizon) {
  if (line_i == line_j) throw std::invalid_argument("corrector_limit_gap needs two distinct lines");
  if (eps_list.empty()) throw std::invalid_argument("eps list is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0) || (k > 0 && !(eps_list[k] < eps_list[k - 1]))) {
      throw std::invalid_argument("eps list must be positive and decreasing");
    }
  }
  const PeriodicField V = build_line_potential(beta, res);
  const DistanceField di = jacobi_distance(V, line_i);
  const std::vector<char> src_j = line_source_nodes(V.grid(), line_j);

  GapReport report;
  report.res = res;
  report.line_i = line_i;
  report.line_j = line_j;
  report.beta = beta;
  report.sweeps = di.sweeps;
  report.eikonal_residual = di.residual;
  report.gap = kInfinity;
  for (std::size_t k = 0; k < src_j.size(); ++k) {
    if (src_j[k]) report.gap = std::min(report.gap, di.values[k]);
  }

  std::vector<double> first;
  for (double eps : eps_list) {
    const Vec3 p = eps * unit(line_i - 1);
    const double level = 0.5 * eps * eps;
    DistanceField v = sweep_line_problem(V, line_i, p, level);
    double dev = 0.0;
    for (std::size_t k = 0; k < v.values.size(); ++k) {
      dev = std::max(dev, std::abs(v.values[k] - di.values[k]));
    }
    report.eps.push_back(eps);
    report.hbar.push_back(level);
    report.deviation.push_back(dev);
    report.corrector_residual = std::max(report.corrector_residual, v.residual);
    if (first.empty()) first = std::move(v.values);
  }

  if (cross_check_horizon > 0.0) {
    const double eps = eps_list.front();
    const HamiltonianSpec spec = HamiltonianSpec::mechanical(line_potential(beta));
    const CellEstimate est =
        effective_H_large_time(spec, eps * unit(line_i - 1), cross_check_horizon, res);
    double base = kInfinity;
    for (std::size_t k = 0; k < est.profile.size(); ++k) {
      if (di.source[k]) base = std::min(base, est.profile[k]);
    }
    double dev = 0.0;
    for (std::size_t k = 0; k < est.profile.size(); ++k) {
      dev = std::max(dev, std::abs(est.profile[k] - base - first[k]));
    }
    report.cross_check_eps = eps;
    report.cross_check_horizon = cross_check_horizon;
    report.cross_check_hbar = est.hbar;
    report.cross_check_hbar_error = est.error_bound;
    report.cross_check_deviation = dev;
  }
  return report;
}

}  // namespace hjlab
