#include "hjlab/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hjlab/hj_solver.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

namespace {

constexpr int kQuadraturePoints = 16384;

std::vector<double> sample_1d(const PeriodicFunction& V) {
  if (V.dim() != 1) throw std::invalid_argument("1D potential required");
  std::vector<double> v(kQuadraturePoints);
  for (int i = 0; i < kQuadraturePoints; ++i) {
    v[static_cast<std::size_t>(i)] = V(Vec3{static_cast<double>(i) / kQuadraturePoints, 0, 0});
  }
  return v;
}

double max_of(const PeriodicFunction& V, const std::vector<double>& samples) {
  return std::max(V.max(), *std::max_element(samples.begin(), samples.end()));
}

// Periodic trapezoid rule: spectrally accurate for smooth periodic integrands.
template <class F>
double mean_of(const std::vector<double>& samples, F&& f) {
  double acc = 0.0;
  for (double v : samples) acc += f(v);
  return acc / static_cast<double>(samples.size());
}

SchemeConfig torus_config(int res, double cfl) {
  if (res < 4) throw std::invalid_argument("cell resolution must be at least 4");
  SchemeConfig cfg;
  cfg.h = 1.0 / res;
  cfg.cfl = cfl;
  cfg.domain = DomainKind::torus;
  cfg.length = 1.0;
  return cfg;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Range of H(y, p) over the grid nodes.
std::pair<double, double> node_range(const HamiltonianSpec& spec, const Vec3& p, int res) {
  const Grid grid(spec.dim(), res);
  double lo = kInfinity;
  double hi = -kInfinity;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = spec(grid.node(i), p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

std::string to_string(CellMethod method) {
  switch (method) {
    case CellMethod::large_time:
      return "large_time";
    case CellMethod::discounted:
      return "discounted";
    case CellMethod::exact_1d:
      return "exact_1d";
  }
  return "unknown";
}

CellMethod cell_method_from_string(const std::string& name) {
  if (name == "large_time") return CellMethod::large_time;
  if (name == "discounted") return CellMethod::discounted;
  if (name == "exact_1d") return CellMethod::exact_1d;
  throw std::invalid_argument("unknown cell method: " + name);
}

// The discrete gradient can overshoot the continuous a-priori bound by O(h);
// rerun with a wider dissipation range when that happens.
template <class Run>
auto with_gradient_retry(const HamiltonianSpec& spec, const Vec3& p, int res, double cfl, Run run) {
  double bound = a_priori_gradient_bound(spec, 0.0, p);
  for (int attempt = 0;; ++attempt) {
    SchemeConfig cfg = torus_config(res, cfl);
    cfg = finalize_config(spec, cfg, bound);
    try {
      return run(Stepper(spec, cfg, 1.0, p));
    } catch (const CflViolation&) {
      if (attempt == 3) throw;
      bound *= 1.25;
    }
  }
}

CellEstimate effective_H_large_time(const HamiltonianSpec& spec, const Vec3& p, double T, int res,
                                    double cfl) {
  if (!(T >= 10.0)) throw std::invalid_argument("large-time horizon must be at least 10");
  return with_gradient_retry(spec, p, res, cfl, [&](const Stepper& stepper) {
    const long half = static_cast<long>(std::ceil(0.5 * T / stepper.dt() - 1e-9));
    const double dt = 0.5 * T / static_cast<double>(half);
    std::vector<double> w(stepper.mesh().size(), 0.0);
    std::vector<double> next(w.size());
    double gmax = 0.0;
    double mean_half = 0.0;
    for (long s = 0; s < 2 * half; ++s) {
      gmax = std::max(gmax, stepper.step(w, next, dt));
      w.swap(next);
      if (s + 1 == half) mean_half = mean(w);
    }
    const auto [wmin, wmax] = std::minmax_element(w.begin(), w.end());
    CellEstimate est;
    est.p = p;
    est.method = CellMethod::large_time;
    est.res = res;
    est.horizon = T;
    est.steps = 2 * half;
    est.max_gradient = gmax;
    est.hbar = -(*wmax + *wmin) / (2.0 * T);
    const double slope = -(mean(w) - mean_half) / (0.5 * T);
    est.error_bound = (*wmax - *wmin) / (2.0 * T) + std::abs(slope - est.hbar);
    est.profile = std::move(w);
    for (double& v : est.profile) v += T * est.hbar;
    return est;
  });
}

std::vector<std::vector<double>> evolve_cell(const HamiltonianSpec& spec, const Vec3& p,
                                             const std::vector<double>& horizons, int res,
                                             double cfl) {
  return with_gradient_retry(spec, p, res, cfl, [&](const Stepper& stepper) {
    std::vector<double> w(stepper.mesh().size(), 0.0);
    std::vector<double> next(w.size());
    std::vector<std::vector<double>> out;
    double t = 0.0;
    for (double target : horizons) {
      if (!(target > t)) throw std::invalid_argument("horizons must be positive and increasing");
      const long steps = static_cast<long>(std::ceil((target - t) / stepper.dt() - 1e-9));
      const double dt = (target - t) / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        stepper.step(w, next, dt);
        w.swap(next);
      }
      t = target;
      out.push_back(w);
    }
    return out;
  });
}

CellEstimate effective_H_large_time_adaptive(const HamiltonianSpec& spec, const Vec3& p, int res,
                                             double tol, double T0, double T_max) {
  CellEstimate prev = effective_H_large_time(spec, p, T0, res);
  for (double T = 2.0 * T0; T <= T_max; T *= 2.0) {
    CellEstimate cur = effective_H_large_time(spec, p, T, res);
    const bool settled = std::abs(cur.hbar - prev.hbar) < tol;
    prev = std::move(cur);
    if (settled) break;
  }
  return prev;
}

CellEstimate effective_H_discounted(const HamiltonianSpec& spec, const Vec3& p, double lambda,
                                    int res, const DiscountOptions& options) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("discount must lie in (0, 1]");
  const auto [hmin, hmax] = node_range(spec, p, res);
  const double level = std::max(std::abs(hmin), std::abs(hmax)) + (hmax - hmin);
  SchemeConfig cfg = torus_config(res, options.cfl);
  cfg = finalize_config(spec, cfg, coercivity_radius(spec, level));
  const Stepper stepper(spec, cfg, 1.0, p, lambda);
  const double dt = stepper.dt();

  const double c = options.warm_start ? *options.warm_start : 0.5 * (hmin + hmax);
  std::vector<double> v(stepper.mesh().size(), -c / lambda);
  std::vector<double> next(v.size());
  double gmax = 0.0;
  double k = 0.0;
  double r = kInfinity;
  long steps = 0;
  while (steps < options.max_steps) {
    gmax = std::max(gmax, stepper.step(v, next, dt));
    ++steps;
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += next[i] - v[i];
    k = sum / static_cast<double>(v.size()) / dt;
    r = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs((next[i] - v[i]) / dt - k));
    v.swap(next);
    if (r <= options.tolerance) break;
  }
  if (!(r <= options.tolerance)) {
    std::ostringstream msg;
    msg << "discounted iteration did not converge in " << options.max_steps
        << " steps (residual " << r << ")";
    throw std::runtime_error(msg.str());
  }
  const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
  CellEstimate est;
  est.p = p;
  est.method = CellMethod::discounted;
  est.res = res;
  est.lambda = lambda;
  est.steps = steps;
  est.horizon = static_cast<double>(steps) * dt;
  est.residual = r;
  est.max_gradient = gmax;
  est.hbar = -k - lambda * 0.5 * (*vmax + *vmin);
  est.error_bound = lambda * 0.5 * (*vmax - *vmin) + r;
  est.profile = std::move(v);
  return est;
}

double flat_part_radius_1d(const PeriodicFunction& V) {
  const auto samples = sample_1d(V);
  const double vmax = max_of(V, samples);
  return mean_of(samples, [vmax](double v) { return std::sqrt(2.0 * (vmax - v)); });
}

double effective_H_1d_mechanical(const PeriodicFunction& V, double p) {
  const auto samples = sample_1d(V);
  const double vmax = max_of(V, samples);
  const double a = std::abs(p);
  auto action = [&](double lam) {
    return mean_of(samples, [lam](double v) { return std::sqrt(2.0 * std::max(lam - v, 0.0)); });
  };
  if (a <= action(vmax)) return vmax;
  double lo = vmax;
  double hi = vmax + 0.5 * (a + 1.0) * (a + 1.0);
  for (int it = 0; it < 300 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (action(mid) < a ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double effective_gradient_1d(const PeriodicFunction& V, double p) {
  const auto samples = sample_1d(V);
  const double vmax = max_of(V, samples);
  const double i0 = mean_of(samples, [vmax](double v) { return std::sqrt(2.0 * (vmax - v)); });
  if (std::abs(p) <= i0) {
    throw std::domain_error("effective gradient requested inside the flat part");
  }
  const double hb = effective_H_1d_mechanical(V, p);
  const double inv = mean_of(samples, [hb](double v) { return 1.0 / std::sqrt(2.0 * (hb - v)); });
  return (p > 0 ? 1.0 : -1.0) / inv;
}

UniformBox default_q_grid(const HamiltonianSpec& spec, double p_max, int n) {
  return UniformBox::symmetric(spec.dim(), n, spec.sup_slope(p_max));
}

EffectiveTable build_effective_table(const HamiltonianSpec& spec, const UniformBox& p_grid,
                                     CellMethod method, const UniformBox& q_grid,
                                     const TableOptions& options) {
  if (p_grid.dim != spec.dim()) throw std::invalid_argument("p grid dimension mismatch");
  if (method == CellMethod::exact_1d && !(spec.is_mechanical() && spec.dim() == 1)) {
    throw std::invalid_argument("exact_1d needs a 1D mechanical spec");
  }
  EffectiveTable table;
  table.p_grid = p_grid;
  table.method = to_string(method);
  table.hbar.resize(p_grid.size());
  table.hbar_error.resize(p_grid.size());

  parallel_for(
      p_grid.size(),
      [&](std::size_t i) {
        const Vec3 p = p_grid.node(i);
        try {
          switch (method) {
            case CellMethod::large_time: {
              const auto est = effective_H_large_time(spec, p, options.T, options.res);
              table.hbar[i] = est.hbar;
              table.hbar_error[i] = est.error_bound;
              break;
            }
            case CellMethod::discounted: {
              const auto est =
                  effective_H_discounted(spec, p, options.lambda, options.res, options.discount);
              table.hbar[i] = est.hbar;
              table.hbar_error[i] = est.error_bound;
              break;
            }
            case CellMethod::exact_1d:
              table.hbar[i] = effective_H_1d_mechanical(spec.coefficient(), p[0]);
              table.hbar_error[i] = 1e-10;
              break;
          }
        } catch (const std::exception& e) {
          std::ostringstream msg;
          msg << "cell solve failed at p = (" << p[0] << ", " << p[1] << ", " << p[2]
              << "): " << e.what();
          throw std::runtime_error(msg.str());
        }
      },
      options.threads);

  for (int d = 0; d < p_grid.dim; ++d) {
    const std::size_t stride = static_cast<std::size_t>(std::pow(p_grid.n, d));
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
      const long c = p_grid.multi_index(i)[static_cast<std::size_t>(d)];
      if (c == 0 || c == p_grid.n - 1) continue;
      const double d2 = table.hbar[i - stride] + table.hbar[i + stride] - 2.0 * table.hbar[i];
      const double tol =
          table.hbar_error[i - stride] + table.hbar_error[i + stride] + 2.0 * table.hbar_error[i];
      table.worst_second_difference = std::min(table.worst_second_difference, d2);
      if (d2 < -tol) ++table.convexity_violations;
    }
  }

  const ConjugateTable conj = legendre_table(p_grid, table.hbar, q_grid);
  table.q_grid = q_grid;
  table.lbar = conj.values;
  table.lbar_boundary = conj.boundary;
  return table;
}

void write_table_csv(const EffectiveTable& table, std::ostream& hbar_out, std::ostream& lbar_out) {
  static constexpr const char* kP[] = {"p1", "p2", "p3"};
  static constexpr const char* kQ[] = {"q1", "q2", "q3"};
  hbar_out.precision(17);
  lbar_out.precision(17);
  for (int d = 0; d < table.p_grid.dim; ++d) hbar_out << kP[d] << ',';
  hbar_out << "hbar,error_bound\n";
  for (std::size_t i = 0; i < table.p_grid.size(); ++i) {
    const Vec3 p = table.p_grid.node(i);
    for (int d = 0; d < table.p_grid.dim; ++d) hbar_out << p[static_cast<std::size_t>(d)] << ',';
    hbar_out << table.hbar[i] << ',' << table.hbar_error[i] << '\n';
  }
  for (int d = 0; d < table.q_grid.dim; ++d) lbar_out << kQ[d] << ',';
  lbar_out << "lbar,boundary\n";
  for (std::size_t i = 0; i < table.q_grid.size(); ++i) {
    const Vec3 q = table.q_grid.node(i);
    for (int d = 0; d < table.q_grid.dim; ++d) lbar_out << q[static_cast<std::size_t>(d)] << ',';
    if (std::isfinite(table.lbar[i])) {
      lbar_out << table.lbar[i];
    } else {
      lbar_out << "inf";
    }
    lbar_out << ',' << static_cast<int>(table.lbar_boundary[i]) << '\n';
  }
}

std::string table_manifest_json(const EffectiveTable& table, const TableOptions& options) {
  nlohmann::json j;
  j["schema"] = "hjlab.effective_table/1";
  j["method"] = table.method;
  j["res"] = options.res;
  if (table.method == "large_time") j["T"] = options.T;
  if (table.method == "discounted") j["lambda"] = options.lambda;
  j["p_grid"] = {{"dim", table.p_grid.dim}, {"n", table.p_grid.n}, {"lo", table.p_grid.lo},
                 {"h", table.p_grid.h}};
  j["q_grid"] = {{"dim", table.q_grid.dim}, {"n", table.q_grid.n}, {"lo", table.q_grid.lo},
                 {"h", table.q_grid.h}};
  j["convexity_violations"] = table.convexity_violations;
  j["worst_second_difference"] = table.worst_second_difference;
  return j.dump(2);
}

}  // namespace hjlab
