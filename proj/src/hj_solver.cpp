#include "hjlab/hj_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hjlab {

namespace {

inline int lower(int i, int n, bool periodic) {
  if (i > 0) return i - 1;
  return periodic ? n - 1 : 0;
}

inline int upper(int i, int n, bool periodic) {
  if (i < n - 1) return i + 1;
  return periodic ? 0 : n - 1;
}

double interp_mesh(const Mesh& mesh, const std::vector<double>& values, const Vec3& x) {
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (int d = 0; d < mesh.dim; ++d) {
    const std::size_t k = static_cast<std::size_t>(d);
    double s = (x[k] - mesh.lo) / mesh.h;
    if (mesh.periodic) {
      s -= mesh.n * std::floor(s / mesh.n);
      double fl = std::floor(s);
      if (fl >= mesh.n) fl = 0.0;
      base[k] = static_cast<long>(fl);
      frac[k] = s - fl;
    } else {
      s = std::clamp(s, 0.0, mesh.n - 1.0);
      const double fl = std::min(std::floor(s), mesh.n - 2.0);
      base[k] = static_cast<long>(fl);
      frac[k] = s - fl;
    }
  }
  double acc = 0.0;
  for (int c = 0; c < (1 << mesh.dim); ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (int d = 0; d < mesh.dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(d);
      long i = base[k];
      if (c & (1 << d)) {
        w *= frac[k];
        i += 1;
        if (i >= mesh.n) i = mesh.periodic ? 0 : mesh.n - 1;
      } else {
        w *= 1.0 - frac[k];
      }
      flat += static_cast<std::size_t>(i) * stride;
      stride *= static_cast<std::size_t>(mesh.n);
    }
    if (w != 0.0) acc += w * values[flat];
  }
  return acc;
}

}  // namespace

std::size_t Mesh::size() const {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

std::array<long, 3> Mesh::multi_index(std::size_t flat) const {
  std::array<long, 3> idx{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    idx[static_cast<std::size_t>(d)] = static_cast<long>(flat % static_cast<std::size_t>(n));
    flat /= static_cast<std::size_t>(n);
  }
  return idx;
}

Vec3 Mesh::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec3 x{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    x[static_cast<std::size_t>(d)] = lo + static_cast<double>(idx[static_cast<std::size_t>(d)]) * h;
  }
  return x;
}

Mesh make_mesh(int dim, const SchemeConfig& config) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("mesh dimension must be 1, 2 or 3");
  if (!(config.h > 0.0)) throw std::invalid_argument("mesh spacing must be positive");
  Mesh mesh;
  mesh.dim = dim;
  mesh.h = config.h;
  if (config.domain == DomainKind::torus) {
    const double cells = config.length / config.h;
    mesh.n = static_cast<int>(std::lround(cells));
    if (std::abs(cells - mesh.n) > 1e-9 * cells) {
      throw std::invalid_argument("torus length must be a multiple of h");
    }
    mesh.lo = 0.0;
    mesh.periodic = true;
  } else {
    const double cells = 2.0 * config.radius / config.h;
    const int c = static_cast<int>(std::lround(cells));
    if (c < 2 || std::abs(cells - c) > 1e-9 * cells) {
      throw std::invalid_argument("box width 2R must be a positive multiple of h");
    }
    mesh.n = c + 1;
    mesh.lo = -config.radius;
    mesh.periodic = false;
  }
  if (mesh.n < 4) throw std::invalid_argument("mesh needs at least 4 nodes per axis");
  return mesh;
}

double numerical_hamiltonian(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p_minus,
                             const Vec3& p_plus, const Vec3& sigma) {
  for (int i = 0; i < spec.dim(); ++i) {
    if (!(sigma[static_cast<std::size_t>(i)] > 0.0)) {
      throw std::invalid_argument("dissipation coefficients must be positive");
    }
  }
  const Vec3 mid = 0.5 * (p_minus + p_plus);
  double visc = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    visc += sigma[k] * (p_plus[k] - p_minus[k]);
  }
  return spec(y, mid) - 0.5 * visc;
}

double upwind_hamiltonian(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p_minus,
                          const Vec3& p_plus) {
  if (!spec.is_radial()) throw std::invalid_argument("upwind flux needs a radial spec");
  double r2 = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double g = std::max({p_minus[k], -p_plus[k], 0.0});
    r2 += g * g;
  }
  return spec.radial(spec.coefficient()(y), std::sqrt(r2));
}

double coercivity_radius(const HamiltonianSpec& spec, double level) {
  auto inside = [&](double r) { return spec.inf_over_y(r) <= level; };
  if (!inside(0.0) && spec.is_radial()) return 0.0;
  double hi = 1.0;
  // Radial profiles are increasing in r; the first r outside the sublevel
  // set bounds it. Custom evaluators get two extra confirmations.
  int confirm = spec.is_radial() ? 0 : 2;
  while (true) {
    if (hi > 1e8) throw std::invalid_argument("Hamiltonian is not coercive at this level");
    if (!inside(hi)) {
      if (confirm == 0) break;
      bool ok = true;
      for (int k = 1; k <= confirm; ++k) ok = ok && !inside(hi * (1 << k));
      if (ok) break;
    }
    hi *= 2.0;
  }
  double lo = 0.0;
  if (!spec.is_radial()) {
    const int n = 2000;
    for (int i = n; i >= 0; --i) {
      const double r = hi * i / n;
      if (inside(r)) {
        lo = r;
        hi = std::min(hi, hi * (i + 1) / n);
        break;
      }
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return hi;
}

double a_priori_gradient_bound(const HamiltonianSpec& spec, double lip, const Vec3& shift) {
  if (!(lip >= 0.0)) throw std::invalid_argument("Lipschitz constant must be nonnegative");
  const double s = norm(shift);
  double level = 0.0;
  if (spec.is_radial()) {
    const double r_lo = std::max(0.0, s - lip);
    const double r_hi = s + lip;
    level = std::max({std::abs(spec.inf_over_y(r_lo)), std::abs(spec.sup_over_y(r_hi)),
                      std::abs(spec.inf_over_y(r_hi)), std::abs(spec.sup_over_y(r_lo))});
  } else {
    const int steps = 16;
    for (int i = 0; i <= steps; ++i) {
      const double r = lip * i / steps;
      level = std::max(level, std::abs(spec.sup_over_y(r + s)));
      level = std::max(level, std::abs(spec.inf_over_y(std::max(0.0, s - r))));
    }
  }
  return coercivity_radius(spec, level);
}

SchemeConfig finalize_config(const HamiltonianSpec& spec, SchemeConfig config,
                             double gradient_bound) {
  if (!(config.cfl > 0.0 && config.cfl <= 0.5)) throw std::invalid_argument("cfl must lie in (0, 0.5]");
  if (config.gradient_bound <= 0.0) config.gradient_bound = gradient_bound;
  if (!(config.gradient_bound > 0.0)) throw std::invalid_argument("gradient bound must be positive");
  bool derive = true;
  for (int i = 0; i < spec.dim(); ++i) derive = derive && config.sigma[static_cast<std::size_t>(i)] <= 0.0;
  if (derive) {
    const double s = spec.sup_slope(config.gradient_bound);
    if (!(s > 0.0)) throw std::invalid_argument("could not derive dissipation from the spec");
    for (int i = 0; i < spec.dim(); ++i) config.sigma[static_cast<std::size_t>(i)] = s;
  }
  return config;
}

Stepper::Stepper(const HamiltonianSpec& spec, const SchemeConfig& config, double eps, Vec3 shift,
                 double lambda)
    : spec_(spec),
      config_(config),
      mesh_(make_mesh(spec.dim(), config)),
      eps_(eps),
      shift_(shift),
      lambda_(lambda) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("discount must be nonnegative");
  if (!(config.gradient_bound > 0.0)) throw std::invalid_argument("gradient bound not set");
  double sum = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const double s = config.sigma[static_cast<std::size_t>(i)];
    if (!(s > 0.0)) throw std::invalid_argument("dissipation coefficients not set");
    sum += s;
  }
  dt_ = config.cfl * config.h / sum;
  switch (config.flux) {
    case FluxKind::automatic:
      upwind_ = spec.is_radial();
      break;
    case FluxKind::lax_friedrichs:
      upwind_ = false;
      break;
    case FluxKind::upwind:
      if (!spec.is_radial()) throw std::invalid_argument("upwind flux needs a radial spec");
      upwind_ = true;
      break;
  }
  const std::size_t n = mesh_.size();
  if (spec.is_radial()) {
    coeff_.resize(n);
    const auto& c = spec.coefficient();
    for (std::size_t i = 0; i < n; ++i) coeff_[i] = c((1.0 / eps) * mesh_.node(i));
  } else {
    y_.resize(n);
    for (std::size_t i = 0; i < n; ++i) y_[i] = (1.0 / eps) * mesh_.node(i);
  }
}

template <int Dim, bool Upwind>
void Stepper::flux_impl(const std::vector<double>& u, std::vector<double>& out,
                        double& grad_max) const {
  const int n = mesh_.n;
  const bool per = mesh_.periodic;
  const double inv_h = 1.0 / mesh_.h;
  const int n1 = Dim >= 2 ? n : 1;
  const int n2 = Dim >= 3 ? n : 1;
  const std::size_t s1 = static_cast<std::size_t>(n);
  const std::size_t s2 = s1 * s1;
  const double half_sigma0 = 0.5 * config_.sigma[0];
  const double half_sigma1 = 0.5 * config_.sigma[1];
  const double half_sigma2 = 0.5 * config_.sigma[2];
  const bool radial = spec_.is_radial();
  double gmax = 0.0;
  for (int k = 0; k < n2; ++k) {
    const int km = Dim >= 3 ? lower(k, n, per) : 0;
    const int kp = Dim >= 3 ? upper(k, n, per) : 0;
    for (int j = 0; j < n1; ++j) {
      const int jm = Dim >= 2 ? lower(j, n, per) : 0;
      const int jp = Dim >= 2 ? upper(j, n, per) : 0;
      const std::size_t row = static_cast<std::size_t>(j) * s1 + static_cast<std::size_t>(k) * s2;
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = row + static_cast<std::size_t>(i);
        const double u0 = u[idx];
        Vec3 mid = shift_;
        double visc = 0.0;
        double up2 = 0.0;
        auto axis = [&](int a, double dm, double dp, double half_sigma) {
          const double s = shift_[static_cast<std::size_t>(a)];
          mid[static_cast<std::size_t>(a)] += 0.5 * (dm + dp);
          if constexpr (Upwind) {
            const double g = std::max({s + dm, -(s + dp), 0.0});
            up2 += g * g;
          } else {
            visc += half_sigma * (dp - dm);
          }
        };
        axis(0, (u0 - u[row + static_cast<std::size_t>(lower(i, n, per))]) * inv_h,
             (u[row + static_cast<std::size_t>(upper(i, n, per))] - u0) * inv_h, half_sigma0);
        if constexpr (Dim >= 2) {
          const std::size_t base = idx - static_cast<std::size_t>(j) * s1;
          axis(1, (u0 - u[base + static_cast<std::size_t>(jm) * s1]) * inv_h,
               (u[base + static_cast<std::size_t>(jp) * s1] - u0) * inv_h, half_sigma1);
        }
        if constexpr (Dim >= 3) {
          const std::size_t base = idx - static_cast<std::size_t>(k) * s2;
          axis(2, (u0 - u[base + static_cast<std::size_t>(km) * s2]) * inv_h,
               (u[base + static_cast<std::size_t>(kp) * s2] - u0) * inv_h, half_sigma2);
        }
        const double r = norm(mid);
        gmax = std::max(gmax, r);
        if constexpr (Upwind) {
          out[idx] = spec_.radial(coeff_[idx], std::sqrt(up2));
        } else {
          const double h = radial ? spec_.radial(coeff_[idx], r) : spec_(y_[idx], mid);
          out[idx] = h - visc;
        }
      }
    }
  }
  grad_max = gmax;
}

void Stepper::flux(const std::vector<double>& u, std::vector<double>& out, double& grad_max) const {
  if (u.size() != mesh_.size()) throw std::invalid_argument("layer size does not match mesh");
  out.resize(u.size());
  switch (mesh_.dim * 2 + (upwind_ ? 1 : 0)) {
    case 2:
      flux_impl<1, false>(u, out, grad_max);
      break;
    case 3:
      flux_impl<1, true>(u, out, grad_max);
      break;
    case 4:
      flux_impl<2, false>(u, out, grad_max);
      break;
    case 5:
      flux_impl<2, true>(u, out, grad_max);
      break;
    case 6:
      flux_impl<3, false>(u, out, grad_max);
      break;
    default:
      flux_impl<3, true>(u, out, grad_max);
      break;
  }
}

double Stepper::step(const std::vector<double>& u, std::vector<double>& out, double dt) const {
  if (dt > dt_ * (1.0 + 1e-12)) throw CflViolation("time step exceeds the CFL limit");
  double gmax = 0.0;
  flux(u, out, gmax);
  if (gmax > config_.gradient_bound * (1.0 + 1e-6)) {
    std::ostringstream msg;
    msg << "discrete gradient " << gmax << " exceeds the bound " << config_.gradient_bound
        << " that sets the dissipation";
    throw CflViolation(msg.str());
  }
  const double scale = 1.0 / (1.0 + lambda_ * dt);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (u[i] - dt * out[i]) * scale;
  return gmax;
}

std::vector<double> step(const std::vector<double>& u, const HamiltonianSpec& spec, double eps,
                         const SchemeConfig& config) {
  const Stepper stepper(spec, config, eps);
  std::vector<double> out;
  stepper.step(u, out);
  return out;
}

double SpaceTimeSolution::value(std::size_t k, const Vec3& x) const {
  if (k >= layers.size()) throw std::out_of_range("no such layer");
  if (!sample_points.empty()) {
    for (std::size_t s = 0; s < sample_points.size(); ++s) {
      if (sample_points[s] == x) return layers[k][s];
    }
    throw std::invalid_argument("point-sampled solution has no value at this point");
  }
  return interp_mesh(mesh, layers[k], x);
}

double SpaceTimeSolution::max_gradient() const {
  double m = 0.0;
  for (double g : lipschitz_record) m = std::max(m, g);
  return m;
}

SpaceTimeSolution solve_oscillatory(const HamiltonianSpec& spec,
                                    const std::function<double(const Vec3&)>& g, double lip_g,
                                    double eps, const std::vector<double>& times,
                                    SchemeConfig config) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (config.h > eps / 16.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("unresolved oscillation: h must be at most eps/16");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument("output times must be positive and increasing");
    }
  }
  const double bound =
      config.gradient_bound > 0.0 ? config.gradient_bound : a_priori_gradient_bound(spec, lip_g);
  config = finalize_config(spec, config, bound);
  const Stepper stepper(spec, config, eps);

  SpaceTimeSolution sol;
  sol.mesh = stepper.mesh();
  sol.config = config;
  sol.eps = eps;
  sol.dt = stepper.dt();
  sol.spec_description = spec.describe();
  sol.clamp = spec.clamp();

  std::vector<double> u(sol.mesh.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = g(sol.mesh.node(i));
    if (!std::isfinite(u[i])) throw std::domain_error("initial data is not finite");
  }
  std::vector<double> next(u.size());
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    const auto steps = static_cast<long>(std::ceil(span / stepper.dt() - 1e-9));
    const double dt = span / static_cast<double>(std::max(steps, 1L));
    for (long s = 0; s < steps; ++s) {
      sol.lipschitz_record.push_back(stepper.step(u, next, dt));
      u.swap(next);
    }
    t = target;
    sol.times.push_back(target);
    sol.layers.push_back(u);
  }
  return sol;
}

void write_solution_csv(const SpaceTimeSolution& sol, std::ostream& out) {
  static constexpr const char* kAxis[] = {"x1", "x2", "x3"};
  const bool sampled = !sol.sample_points.empty();
  const int dim = sampled ? sol.mesh.dim : sol.mesh.dim;
  for (int d = 0; d < dim; ++d) out << kAxis[d] << ',';
  out << "t,u";
  if (sampled && !sol.minimizers.empty()) {
    for (int d = 0; d < dim; ++d) out << ",y0_" << (d + 1);
  }
  out << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < sol.layers.size(); ++k) {
    const std::size_t count = sampled ? sol.sample_points.size() : sol.mesh.size();
    for (std::size_t i = 0; i < count; ++i) {
      const Vec3 x = sampled ? sol.sample_points[i] : sol.mesh.node(i);
      for (int d = 0; d < dim; ++d) out << x[static_cast<std::size_t>(d)] << ',';
      out << sol.times[k] << ',' << sol.layers[k][i];
      if (sampled && !sol.minimizers.empty()) {
        for (int d = 0; d < dim; ++d) out << ',' << sol.minimizers[k][i][static_cast<std::size_t>(d)];
      }
      out << '\n';
    }
  }
}

std::string solution_manifest_json(const SpaceTimeSolution& sol) {
  nlohmann::json j;
  j["schema"] = "hjlab.solution/1";
  j["spec"] = sol.spec_description;
  j["eps"] = sol.eps;
  j["h"] = sol.config.h;
  j["dt"] = sol.dt;
  j["T"] = sol.times.empty() ? 0.0 : sol.times.back();
  j["times"] = sol.times;
  j["cfl"] = sol.config.cfl;
  j["sigma"] = std::vector<double>(sol.config.sigma.begin(), sol.config.sigma.begin() + sol.mesh.dim);
  j["gradient_bound"] = sol.config.gradient_bound;
  j["domain"] = sol.config.domain == DomainKind::torus ? "torus" : "box";
  j["radius"] = sol.config.radius;
  j["max_discrete_gradient"] = sol.max_gradient();
  j["steps"] = sol.lipschitz_record.size();
  if (sol.clamp) {
    j["clamp"] = {{"C0", sol.clamp->c0}, {"K0", sol.clamp->k0}, {"slope", sol.clamp->slope}};
  }
  return j.dump(2);
}

}  // namespace hjlab
