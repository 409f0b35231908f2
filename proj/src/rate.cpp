#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "hjlab/cell.hpp"
#include "hjlab/harness.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

LogLogFit fit_loglog(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("log-log fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
    const double lx = std::log(x);
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (!(vxx > 0.0)) throw std::invalid_argument("log-log fit needs distinct abscissae");
  LogLogFit fit;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = vyy > 0.0 ? vxy * vxy / (vxx * vyy) : 1.0;
  fit.points = static_cast<int>(pairs.size());
  return fit;
}

namespace {

bool all_true(const std::map<std::string, bool>& verdicts) {
  return !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second; });
}

// Everything a rate experiment needs once the config is parsed.
struct Setup {
  ExperimentConfig config;
  HamiltonianSpec spec;
  InitialData data;
  std::vector<Vec3> samples;
  double extent = 0.0;  // sup norm of the samples

  explicit Setup(const ExperimentConfig& c)
      : config(c),
        spec(make_spec(c.dim, c.spec)),
        data(make_initial_data(c.dim, c.g)),
        samples(sample_cloud(c.dim, c.sample_lo, c.sample_hi, c.sample_count)) {
    c.validate();
    for (const Vec3& x : samples) {
      for (int d = 0; d < c.dim; ++d) extent = std::max(extent, std::abs(x[static_cast<std::size_t>(d)]));
    }
    if (c.solver == "superposition" && !data.concave_pl) {
      throw std::invalid_argument("the superposition solver needs concave_pl data");
    }
    if (c.effective_method == "consistent" && !data.concave_pl) {
      throw std::invalid_argument("the consistent effective method needs concave_pl data");
    }
  }
};

using Values = std::vector<std::vector<double>>;  // [time][sample]

Values from_solution(const SpaceTimeSolution& sol) { return sol.layers; }

// Effective problem for the methods that go through Hopf-Lax.
EffectiveProblem effective_problem(const Setup& s) {
  const ExperimentConfig& c = s.config;
  const std::string& m = c.effective_method;
  if (m == "exact_1d" || m == "large_time" || m == "discounted") {
    const CellMethod method = cell_method_from_string(m);
    const UniformBox p_grid = UniformBox::symmetric(c.dim, c.p_nodes, c.p_max);
    const UniformBox q_grid = default_q_grid(s.spec, c.p_max, c.q_nodes);
    TableOptions options;
    options.T = c.cell_horizon;
    options.res = c.cell_res;
    options.threads = c.threads;
    const EffectiveTable table = build_effective_table(s.spec, p_grid, method, q_grid, options);
    return EffectiveProblem::from_table(table, s.data.g, s.data.lipschitz);
  }
  if (m == "angular") {
    if (c.dim != 2 || s.spec.homogeneity_degree() != std::optional<double>(1.0)) {
      throw std::invalid_argument("the angular method needs a 2D spec of degree 1");
    }
    std::vector<double> support(static_cast<std::size_t>(c.angles));
    parallel_for(
        support.size(),
        [&](std::size_t j) {
          const double th = 2.0 * kPi * static_cast<double>(j) / c.angles;
          const Vec3 e{std::cos(th), std::sin(th), 0.0};
          support[j] = effective_H_large_time(s.spec, e, c.cell_horizon, c.cell_res, c.cfl).hbar;
        },
        c.threads);
    auto hb = std::make_shared<AngularHbar>(support);
    return EffectiveProblem::closed_form(
        2, [hb](const Vec3& p) { return hb->hbar(p); }, [hb](const Vec3& q) { return hb->lbar(q); },
        hb->max_speed(), s.data.g, s.data.lipschitz, "angular support function");
  }
  if (m == "y_independent") {
    if (!s.spec.y_independent()) throw std::invalid_argument("spec depends on y");
    const HamiltonianSpec spec = s.spec;
    const LagrangianView view(spec);
    const Vec3 origin{0, 0, 0};
    return EffectiveProblem::closed_form(
        c.dim, [spec, origin](const Vec3& p) { return spec(origin, p); },
        [view, origin](const Vec3& q) { return eval_L(view, origin, q); },
        spec.sup_slope(std::max(s.data.lipschitz, 1e-12)), s.data.g, s.data.lipschitz,
        "Hbar = H");
  }
  throw std::invalid_argument("effective method '" + m + "' has no Hopf-Lax form");
}

HopfLaxOptions hopf_lax_options(const ExperimentConfig& c) {
  HopfLaxOptions o;
  if (c.effective_method == "angular") o.rounds = 4;
  return o;
}

// Effective values per level. Level-independent methods are computed once.
class EffectiveValues {
 public:
  explicit EffectiveValues(const Setup& s) : s_(s) {}

  const Values& at(int m) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (s_.config.effective_method != "consistent") m = 0;
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(m, compute(m)).first->second;
  }

 private:
  Values compute(int m) const {
    const ExperimentConfig& c = s_.config;
    if (c.effective_method == "consistent") {
      // Hbar of the same torus scheme that drives the oscillatory solve.
      const double horizon = m <= 32 ? std::max(c.cell_horizon, 640.0) : c.cell_horizon;
      std::vector<double> hb(s_.data.slopes.size());
      parallel_for(
          hb.size(),
          [&](std::size_t j) {
            hb[j] = effective_H_large_time(s_.spec, s_.data.slopes[j], horizon, m, c.cfl).hbar;
          },
          c.threads);
      Values out(c.times.size(), std::vector<double>(s_.samples.size()));
      for (std::size_t k = 0; k < c.times.size(); ++k) {
        for (std::size_t i = 0; i < s_.samples.size(); ++i) {
          double best = kInfinity;
          for (std::size_t j = 0; j < hb.size(); ++j) {
            best = std::min(best, dot(s_.data.slopes[j], s_.samples[i]) + s_.data.offsets[j] -
                                      c.times[k] * hb[j]);
          }
          out[k][i] = best;
        }
      }
      return out;
    }
    return from_solution(solve_effective(effective_problem(s_), s_.samples, c.times,
                                         hopf_lax_options(c), c.threads));
  }

  const Setup& s_;
  std::mutex mutex_;
  std::map<int, Values> cache_;
};

struct Oscillatory {
  Values values;
  double dt = 0.0;
  double max_gradient = 0.0;
};

Oscillatory solve_box(const Setup& s, double eps, int m) {
  const ExperimentConfig& c = s.config;
  const double bound = a_priori_gradient_bound(s.spec, s.data.lipschitz);
  const double speed = s.spec.sup_slope(bound);
  SchemeConfig cfg;
  cfg.h = eps / m;
  cfg.cfl = c.cfl;
  cfg.domain = DomainKind::box;
  cfg.radius = std::ceil((s.extent + speed * c.times.back() + c.margin) / eps) * eps;
  const SpaceTimeSolution sol = solve_oscillatory(s.spec, s.data.g, s.data.lipschitz, eps, c.times, cfg);
  Oscillatory out;
  out.values.assign(c.times.size(), std::vector<double>(s.samples.size()));
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    for (std::size_t i = 0; i < s.samples.size(); ++i) out.values[k][i] = sol.value(k, s.samples[i]);
  }
  out.dt = sol.dt;
  out.max_gradient = sol.max_gradient();
  return out;
}

// Concave piecewise-linear data: u^eps = min_j (p_j . x + b_j + eps w_j(x/eps, t/eps))
// with w_j the torus solution of the cell problem at slope p_j.
Oscillatory solve_superposition(const Setup& s, double eps, int m) {
  const ExperimentConfig& c = s.config;
  std::vector<double> horizons;
  for (double t : c.times) horizons.push_back(t / eps);
  const Grid grid(c.dim, m);
  Oscillatory out;
  out.values.assign(c.times.size(), std::vector<double>(s.samples.size(), kInfinity));
  for (std::size_t j = 0; j < s.data.slopes.size(); ++j) {
    const Vec3& p = s.data.slopes[j];
    const auto layers = evolve_cell(s.spec, p, horizons, m, c.cfl);
    SchemeConfig cfg;
    cfg.h = 1.0 / m;
    cfg.cfl = c.cfl;
    const SchemeConfig fin = finalize_config(s.spec, cfg, a_priori_gradient_bound(s.spec, 0.0, p));
    out.dt = std::max(out.dt, eps * Stepper(s.spec, fin, 1.0, p).dt());
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const PeriodicField w(grid, layers[k]);
      for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const Vec3& x = s.samples[i];
        const double v = dot(p, x) + s.data.offsets[j] + eps * interp(w, (1.0 / eps) * x);
        out.values[k][i] = std::min(out.values[k][i], v);
      }
    }
  }
  return out;
}

Oscillatory solve_level(const Setup& s, double eps, int m) {
  return s.config.solver == "superposition" ? solve_superposition(s, eps, m) : solve_box(s, eps, m);
}

struct LevelErrors {
  Values err;
  double dt = 0.0;
  double max_gradient = 0.0;
};

LevelErrors errors_at(const Setup& s, EffectiveValues& eff, double eps, int m) {
  Oscillatory o = solve_level(s, eps, m);
  const Values& u = eff.at(m);
  for (std::size_t k = 0; k < o.values.size(); ++k) {
    for (std::size_t i = 0; i < o.values[k].size(); ++i) o.values[k][i] -= u[k][i];
  }
  return {std::move(o.values), o.dt, o.max_gradient};
}

RatePoint adaptive_point(const Setup& s, EffectiveValues& eff, double eps) {
  const ExperimentConfig& c = s.config;
  int m = c.m;
  auto norms = [](const Values& err) {
    double sup = 0.0, mn = kInfinity;
    for (const auto& row : err) {
      for (double e : row) {
        sup = std::max(sup, std::abs(e));
        mn = std::min(mn, e);
      }
    }
    return std::make_pair(sup, mn);
  };
  LevelErrors coarse = errors_at(s, eff, eps, m);
  RatePoint pt;
  pt.eps = eps;
  while (true) {
    LevelErrors fine = errors_at(s, eff, eps, 2 * m);
    const auto [sup, mn] = norms(fine.err);
    const auto [sup_c, mn_c] = norms(coarse.err);
    const double diff = std::max(std::abs(sup - sup_c), std::abs(mn - mn_c));
    double pointwise = 0.0;
    for (std::size_t k = 0; k < fine.err.size(); ++k) {
      for (std::size_t i = 0; i < fine.err[k].size(); ++i) {
        pointwise = std::max(pointwise, std::abs(fine.err[k][i] - coarse.err[k][i]));
      }
    }
    pt.m = 2 * m;
    pt.h = eps / pt.m;
    pt.dt = fine.dt;
    pt.sup_err = sup;
    pt.min_signed = mn;
    pt.scheme_err = diff;
    pt.pointwise_diff = pointwise;
    pt.max_gradient = fine.max_gradient;
    pt.qualified = diff <= c.dominance * sup;
    if (pt.qualified || 4 * m > c.m_max) break;
    m *= 2;
    coarse = std::move(fine);
  }
  return pt;
}

}  // namespace

bool RateReport::passed() const { return all_true(verdicts); }
bool LowerBoundReport::passed() const { return all_true(verdicts); }
bool FlatPartReport::passed() const { return all_true(verdicts); }

RateReport run_rate_experiment(const ExperimentConfig& config) {
  const Setup s(config);
  EffectiveValues eff(s);

  RateReport r;
  r.name = config.name;
  r.spec = s.spec.describe();
  r.g = s.data.name;
  r.effective_method = config.effective_method;
  r.solver = config.solver;
  r.times = config.times;
  r.samples = static_cast<int>(s.samples.size());
  r.points.resize(config.eps_list.size());
  // Effective values first so workers only read the cache.
  if (config.effective_method != "consistent") eff.at(0);
  parallel_for(
      config.eps_list.size(),
      [&](std::size_t k) { r.points[k] = adaptive_point(s, eff, config.eps_list[k]); },
      config.threads);

  std::vector<std::pair<double, double>> pairs;
  for (const RatePoint& p : r.points) {
    if (p.qualified && p.sup_err > 0.0) pairs.emplace_back(p.eps, p.sup_err);
  }
  if (pairs.size() >= 3) {
    r.fit = fit_loglog(pairs);
    r.fit_valid = true;
  } else if (pairs.empty()) {
    r.fit_note = "no eps qualifies: the scheme error dominates at m_max";
  } else {
    r.fit_note = "fewer than 3 qualified eps";
  }
  r.verdicts["qualified"] = r.fit_valid;
  r.verdicts["slope"] =
      r.fit_valid && r.fit.slope >= config.slope_min && r.fit.slope <= config.slope_max;
  r.verdicts["r2"] = r.fit_valid && r.fit.r2 >= config.r2_min;
  return r;
}

LowerBoundReport check_lower_bound(const RateReport& report, const ExperimentConfig& config) {
  LowerBoundReport lb;
  for (const RatePoint& p : report.points) {
    if (!p.qualified) continue;
    lb.eps.push_back(p.eps);
    lb.minima.push_back(p.min_signed);
    lb.tolerance.push_back(p.scheme_err);
  }
  double num = 0.0, den = 0.0;
  std::vector<std::pair<double, double>> pairs;
  bool within_tolerance = true;
  for (std::size_t k = 0; k < lb.eps.size(); ++k) {
    const double neg = std::max(-lb.minima[k], 0.0);
    num += lb.eps[k] * neg;
    den += lb.eps[k] * lb.eps[k];
    if (neg > lb.tolerance[k]) {
      pairs.emplace_back(lb.eps[k], neg);
      within_tolerance = false;
    }
  }
  lb.c_fit = den > 0.0 ? num / den : 0.0;
  lb.bound_holds = !lb.eps.empty();
  for (std::size_t k = 0; k < lb.eps.size(); ++k) {
    if (lb.minima[k] < -lb.c_fit * lb.eps[k] - lb.tolerance[k]) lb.bound_holds = false;
  }
  lb.trend_holds = !lb.eps.empty();
  for (std::size_t k = 0; k + 1 < lb.eps.size(); ++k) {
    if (std::abs(lb.eps[k + 1] * 2.0 - lb.eps[k]) > 1e-12 * lb.eps[k]) continue;
    const double a = std::max(-lb.minima[k], 0.0);
    const double b = std::max(-lb.minima[k + 1], 0.0);
    if (b > 0.7 * a + lb.tolerance[k + 1]) lb.trend_holds = false;
  }
  if (pairs.size() >= 3 && pairs.size() == lb.eps.size()) {
    lb.slope = fit_loglog(pairs);
    lb.slope_valid = true;
  }
  lb.verdicts["bound"] = lb.bound_holds;
  lb.verdicts["trend"] = lb.trend_holds;
  // Minima within the scheme tolerance everywhere leave nothing to fit.
  lb.verdicts["slope"] = lb.slope_valid ? lb.slope.slope >= config.lower_slope_min &&
                                              lb.slope.slope <= config.lower_slope_max
                                        : within_tolerance && !lb.eps.empty();
  return lb;
}

LowerBoundReport check_lower_bound(const ExperimentConfig& config) {
  return check_lower_bound(run_rate_experiment(config), config);
}

FlatPartReport flat_part_experiment(const ExperimentConfig& config) {
  const Setup s(config);
  if (config.dim != 1 || !s.spec.is_mechanical()) {
    throw std::invalid_argument("the flat-part experiment needs a 1D mechanical spec");
  }
  FlatPartReport fr;
  fr.flat_radius = flat_part_radius_1d(s.spec.coefficient());
  if (!(s.data.lipschitz < fr.flat_radius)) {
    std::ostringstream msg;
    msg << "Lip(g) = " << s.data.lipschitz << " is not below the flat-part radius "
        << fr.flat_radius;
    throw std::invalid_argument(msg.str());
  }
  fr.rate = run_rate_experiment(config);
  EffectiveValues eff(s);
  const Values& u = eff.at(0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    for (std::size_t i = 0; i < u[k].size(); ++i) {
      fr.effective_variation =
          std::max(fr.effective_variation, std::abs(u[k][i] - s.data.g(s.samples[i])));
    }
  }
  double tol = kInfinity;
  for (const RatePoint& p : fr.rate.points) tol = std::min(tol, p.scheme_err);
  fr.verdicts["rate"] = fr.rate.fit_valid && fr.rate.fit.slope >= config.slope_min;
  fr.verdicts["effective_constant"] = fr.effective_variation <= std::max(1e-9, tol);
  return fr;
}

CrossCheckReport cross_check_effective(const ExperimentConfig& config, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  const Setup s(config);
  const EffectiveProblem problem = effective_problem(s);
  const SpaceTimeSolution hl =
      solve_effective(problem, s.samples, config.times, hopf_lax_options(config), config.threads);
  SchemeConfig cfg;
  cfg.cfl = config.cfl;
  cfg.domain = DomainKind::box;
  const double reach = s.extent + problem.q_max * config.times.back() + config.margin;
  std::vector<SpaceTimeSolution> fd;
  for (double step : {h, 0.5 * h}) {
    cfg.h = step;
    cfg.radius = std::ceil(reach / h) * h;
    fd.push_back(solve_effective_fd(problem, config.times, cfg));
  }
  CrossCheckReport r;
  r.h = h;
  for (std::size_t k = 0; k < config.times.size(); ++k) {
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      const double a = fd[0].value(k, s.samples[i]);
      const double b = fd[1].value(k, s.samples[i]);
      r.fd_difference = std::max(r.fd_difference, std::abs(a - b));
      r.hopf_lax_vs_fd = std::max(r.hopf_lax_vs_fd, std::abs(hl.layers[k][i] - b));
    }
  }
  r.fd_estimate = r.fd_difference / (std::sqrt(2.0) - 1.0);
  r.agree = r.hopf_lax_vs_fd <= r.fd_estimate;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const RatePoint& p) {
  j = nlohmann::json{{"eps", p.eps},
                     {"m", p.m},
                     {"h", p.h},
                     {"dt", p.dt},
                     {"sup_err", p.sup_err},
                     {"min_signed", p.min_signed},
                     {"scheme_err", p.scheme_err},
                     {"pointwise_diff", p.pointwise_diff},
                     {"qualified", p.qualified},
                     {"max_gradient", p.max_gradient}};
}

void from_json(const nlohmann::json& j, RatePoint& p) {
  j.at("eps").get_to(p.eps);
  j.at("m").get_to(p.m);
  j.at("h").get_to(p.h);
  j.at("dt").get_to(p.dt);
  j.at("sup_err").get_to(p.sup_err);
  j.at("min_signed").get_to(p.min_signed);
  j.at("scheme_err").get_to(p.scheme_err);
  j.at("pointwise_diff").get_to(p.pointwise_diff);
  j.at("qualified").get_to(p.qualified);
  j.at("max_gradient").get_to(p.max_gradient);
}

void to_json(nlohmann::json& j, const LogLogFit& f) {
  j = nlohmann::json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}};
}

void from_json(const nlohmann::json& j, LogLogFit& f) {
  j.at("slope").get_to(f.slope);
  j.at("intercept").get_to(f.intercept);
  j.at("r2").get_to(f.r2);
  j.at("points").get_to(f.points);
}

void to_json(nlohmann::json& j, const RateReport& r) {
  j = nlohmann::json{{"schema", r.schema},
                     {"name", r.name},
                     {"spec", r.spec},
                     {"g", r.g},
                     {"effective_method", r.effective_method},
                     {"solver", r.solver},
                     {"times", r.times},
                     {"samples", r.samples},
                     {"points", r.points},
                     {"fit_valid", r.fit_valid},
                     {"fit", r.fit},
                     {"fit_note", r.fit_note},
                     {"verdicts", r.verdicts}};
}

void from_json(const nlohmann::json& j, RateReport& r) {
  j.at("schema").get_to(r.schema);
  if (r.schema != "hjlab.rate/1") throw std::invalid_argument("unexpected schema " + r.schema);
  j.at("name").get_to(r.name);
  j.at("spec").get_to(r.spec);
  j.at("g").get_to(r.g);
  j.at("effective_method").get_to(r.effective_method);
  j.at("solver").get_to(r.solver);
  j.at("times").get_to(r.times);
  j.at("samples").get_to(r.samples);
  j.at("points").get_to(r.points);
  j.at("fit_valid").get_to(r.fit_valid);
  j.at("fit").get_to(r.fit);
  j.at("fit_note").get_to(r.fit_note);
  j.at("verdicts").get_to(r.verdicts);
}

void to_json(nlohmann::json& j, const LowerBoundReport& r) {
  j = nlohmann::json{{"schema", r.schema},           {"eps", r.eps},
                     {"minima", r.minima},           {"tolerance", r.tolerance},
                     {"c_fit", r.c_fit},             {"slope_valid", r.slope_valid},
                     {"slope", r.slope},             {"bound_holds", r.bound_holds},
                     {"trend_holds", r.trend_holds}, {"verdicts", r.verdicts}};
}

void to_json(nlohmann::json& j, const FlatPartReport& r) {
  j = nlohmann::json{{"schema", "hjlab.flat/1"},
                     {"rate", r.rate},
                     {"flat_radius", r.flat_radius},
                     {"effective_variation", r.effective_variation},
                     {"verdicts", r.verdicts}};
}

void to_json(nlohmann::json& j, const CrossCheckReport& r) {
  j = nlohmann::json{{"schema", r.schema},
                     {"h", r.h},
                     {"hopf_lax_vs_fd", r.hopf_lax_vs_fd},
                     {"fd_difference", r.fd_difference},
                     {"fd_estimate", r.fd_estimate},
                     {"agree", r.agree}};
}

std::string report_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string rate_csv(const RateReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "eps,sup_err,min_signed,scheme_err,qualified\n";
  for (const RatePoint& p : report.points) {
    out << p.eps << ',' << p.sup_err << ',' << p.min_signed << ',' << p.scheme_err << ','
        << (p.qualified ? 1 : 0) << '\n';
  }
  return out.str();
}

void emit_report(const RateReport& report, const std::string& format,
                 const std::filesystem::path& dir) {
  if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
  std::filesystem::create_directories(dir);
  const std::string stem = report.name.empty() ? "rate" : report.name;
  {
    std::ofstream out(dir / (stem + ".json"));
    if (!out) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
    out << report_json(report);
  }
  if (format == "csv") {
    std::ofstream out(dir / (stem + ".csv"));
    if (!out) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
    out << rate_csv(report);
  }
}

}  // namespace hjlab
