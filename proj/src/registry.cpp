#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

#include "hjlab/harness.hpp"

namespace hjlab {

namespace {

double get_or(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Vec3 to_vec(const nlohmann::json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument("expected a vector with " + std::to_string(dim) + " entries");
  }
  Vec3 v{0, 0, 0};
  for (int d = 0; d < dim; ++d) v[static_cast<std::size_t>(d)] = j[static_cast<std::size_t>(d)].get<double>();
  return v;
}

nlohmann::json from_vec(const Vec3& v, int dim) {
  nlohmann::json a = nlohmann::json::array();
  for (int d = 0; d < dim; ++d) a.push_back(v[static_cast<std::size_t>(d)]);
  return a;
}

PeriodicFunction make_potential(int dim, const nlohmann::json& block) {
  const std::string name = block.value("potential", std::string("zero"));
  const double amp = get_or(block, "amplitude", 1.0);
  if (name == "zero") return PeriodicFunction::constant(dim, 0.0);
  if (name == "neg_sin2") {
    std::ostringstream label;
    label << "-" << amp << " sum sin^2(pi y)";
    return PeriodicFunction(
        dim, label.str(),
        [dim, amp](const Vec3& y) {
          double s = 0.0;
          for (int d = 0; d < dim; ++d) {
            const double v = std::sin(kPi * y[static_cast<std::size_t>(d)]);
            s += v * v;
          }
          return -amp * s;
        },
        std::make_pair(-amp * dim, 0.0));
  }
  if (name == "cosine_floor") {
    if (dim != 1) throw std::invalid_argument("potential cosine_floor is one-dimensional");
    return PeriodicFunction(
        1, "-2(1 + cos 2 pi y)",
        [](const Vec3& y) { return -2.0 * (1.0 + std::cos(2.0 * kPi * y[0])); },
        std::make_pair(-4.0, 0.0));
  }
  if (name == "cos_sum") {
    std::ostringstream label;
    label << amp << " sum cos(2 pi y)";
    return PeriodicFunction(dim, label.str(), [dim, amp](const Vec3& y) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += std::cos(2.0 * kPi * y[static_cast<std::size_t>(d)]);
      return amp * s;
    });
  }
  if (name == "lines") {
    if (dim != 3) throw std::invalid_argument("potential lines is three-dimensional");
    return line_potential(get_or(block, "beta", 1.0));
  }
  if (name == "field") {
    const PeriodicField field = load_field(block.at("file").get<std::string>());
    if (field.grid().dim() != dim) throw std::invalid_argument("field dimension mismatch");
    return PeriodicFunction(field, block.at("file").get<std::string>());
  }
  throw std::invalid_argument("unknown potential: " + name);
}

PeriodicFunction make_speed(int dim, const nlohmann::json& block) {
  const std::string name = block.value("speed", std::string("constant"));
  if (name == "constant") return PeriodicFunction::constant(dim, get_or(block, "value", 1.0));
  if (name == "product_sine") {
    if (dim != 2) throw std::invalid_argument("speed product_sine is two-dimensional");
    const double amp = get_or(block, "amplitude", 0.5);
    if (!(std::abs(amp) < 1.0)) throw std::invalid_argument("product_sine amplitude must be below 1");
    std::ostringstream label;
    label << "1 + " << amp << " sin(2 pi y1) sin(2 pi y2)";
    return PeriodicFunction(
        2, label.str(),
        [amp](const Vec3& y) {
          return 1.0 + amp * std::sin(2.0 * kPi * y[0]) * std::sin(2.0 * kPi * y[1]);
        },
        std::make_pair(1.0 - std::abs(amp), 1.0 + std::abs(amp)));
  }
  throw std::invalid_argument("unknown speed: " + name);
}

}  // namespace

HamiltonianSpec make_spec(int dim, const nlohmann::json& block) {
  const std::string kind = block.value("kind", std::string());
  std::optional<HamiltonianSpec> spec;
  if (kind == "mechanical") {
    spec = HamiltonianSpec::mechanical(make_potential(dim, block));
  } else if (kind == "homogeneous") {
    spec = HamiltonianSpec::homogeneous(make_speed(dim, block), get_or(block, "k", 1.0));
  } else if (kind == "hedlund") {
    if (dim != 3) throw std::invalid_argument("the Hedlund spec is three-dimensional");
    const double delta = get_or(block, "delta", 0.1);
    spec = HamiltonianSpec::hedlund(hedlund_metric(delta, get_or(block, "tube_radius", 0.15)),
                                    delta);
  } else {
    throw std::invalid_argument("unknown spec kind: '" + kind + "'");
  }
  if (block.contains("clamp")) {
    const auto& c = block.at("clamp");
    spec = clamp_quadratic(*spec, c.at("c0").get<double>(), c.at("k0").get<double>());
  }
  return *spec;
}

InitialData make_initial_data(int dim, const nlohmann::json& block) {
  InitialData data;
  data.name = block.value("name", std::string());
  if (data.name == "trimmed_cone") {
    const double cap = get_or(block, "cap", 1.0);
    data.g = [cap](const Vec3& x) { return std::min(norm(x), cap); };
    data.lipschitz = 1.0;
  } else if (data.name == "concave_pl") {
    if (block.contains("slopes")) {
      for (const auto& s : block.at("slopes")) data.slopes.push_back(to_vec(s, dim));
    } else {
      const int n = block.value("directions", dim == 2 ? 6 : 2 * dim);
      const double scale = get_or(block, "scale", 1.0);
      if (dim == 2) {
        for (int j = 0; j < n; ++j) {
          const double th = 2.0 * kPi * j / n;
          data.slopes.push_back(Vec3{scale * std::cos(th), scale * std::sin(th), 0.0});
        }
      } else {
        for (int d = 0; d < dim; ++d) {
          data.slopes.push_back(scale * unit(d));
          data.slopes.push_back(-scale * unit(d));
        }
      }
    }
    if (data.slopes.empty()) throw std::invalid_argument("concave_pl needs slopes");
    data.offsets.assign(data.slopes.size(), 0.0);
    if (block.contains("offsets")) {
      data.offsets = block.at("offsets").get<std::vector<double>>();
      if (data.offsets.size() != data.slopes.size()) {
        throw std::invalid_argument("concave_pl offsets and slopes differ in length");
      }
    }
    for (const Vec3& p : data.slopes) data.lipschitz = std::max(data.lipschitz, norm(p));
    data.concave_pl = true;
    auto slopes = data.slopes;
    auto offsets = data.offsets;
    data.g = [slopes, offsets](const Vec3& x) {
      double best = kInfinity;
      for (std::size_t j = 0; j < slopes.size(); ++j) best = std::min(best, dot(slopes[j], x) + offsets[j]);
      return best;
    };
  } else if (data.name == "gaussian_bump") {
    const double amp = get_or(block, "amplitude", 1.0);
    const double w = get_or(block, "width", 0.5);
    if (!(w > 0.0)) throw std::invalid_argument("gaussian_bump width must be positive");
    data.g = [amp, w](const Vec3& x) { return amp * std::exp(-dot(x, x) / (2.0 * w * w)); };
    data.lipschitz = std::abs(amp) / w * std::exp(-0.5);
    data.second_derivative_bound = std::abs(amp) / (w * w);
  } else if (data.name == "sinusoid") {
    const double amp = get_or(block, "amplitude", 0.3);
    const double period = get_or(block, "period", 5.0);
    const double k = 2.0 * kPi / period;
    data.g = [amp, k](const Vec3& x) { return amp * std::sin(k * x[0]); };
    data.lipschitz = std::abs(amp) * k;
    data.second_derivative_bound = std::abs(amp) * k * k;
  } else {
    throw std::invalid_argument("unknown initial data: '" + data.name + "'");
  }
  return data;
}

std::vector<Vec3> sample_cloud(int dim, const Vec3& lo, const Vec3& hi, int count) {
  static const int bases[3] = {2, 3, 5};
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    Vec3 x{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      double f = 1.0;
      double r = 0.0;
      for (int k = i; k > 0; k /= bases[d]) {
        f /= bases[d];
        r += f * (k % bases[d]);
      }
      const auto u = static_cast<std::size_t>(d);
      x[u] = dim == 1 ? lo[u] + (hi[u] - lo[u]) * (i - 0.5) / count : lo[u] + (hi[u] - lo[u]) * r;
    }
    out.push_back(x);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (eps_list.empty()) throw std::invalid_argument("eps_list is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw std::invalid_argument("eps values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
      throw std::invalid_argument("eps_list must be strictly decreasing");
    }
  }
  if (times.empty()) throw std::invalid_argument("times is empty");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument("times must be positive and increasing");
    }
  }
  if (m < 16) throw std::invalid_argument("m must be at least 16");
  if (m_max < 2 * m) throw std::invalid_argument("m_max must be at least 2 m");
  if (sample_count < 1) throw std::invalid_argument("sample count must be positive");
  for (int d = 0; d < dim; ++d) {
    const auto u = static_cast<std::size_t>(d);
    if (!(sample_hi[u] >= sample_lo[u])) throw std::invalid_argument("empty sample box");
  }
  if (solver != "box" && solver != "superposition") {
    throw std::invalid_argument("solver must be box or superposition");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be nonnegative");
  if (!(dominance > 0.0)) throw std::invalid_argument("dominance must be positive");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.dim = j.value("dim", c.dim);
  c.spec = j.at("spec");
  c.g = j.at("g");
  c.eps_list = j.at("eps_list").get<std::vector<double>>();
  if (j.contains("times")) c.times = j.at("times").get<std::vector<double>>();
  if (j.contains("samples")) {
    const auto& s = j.at("samples");
    if (s.contains("lo")) c.sample_lo = to_vec(s.at("lo"), c.dim);
    if (s.contains("hi")) c.sample_hi = to_vec(s.at("hi"), c.dim);
    c.sample_count = s.value("count", c.sample_count);
  }
  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    c.m = s.value("m", c.m);
    c.m_max = s.value("m_max", c.m_max);
    c.cfl = s.value("cfl", c.cfl);
    c.solver = s.value("solver", c.solver);
    c.margin = s.value("margin", c.margin);
    c.dominance = s.value("dominance", c.dominance);
  }
  if (j.contains("effective")) {
    const auto& e = j.at("effective");
    c.effective_method = e.value("method", c.effective_method);
    c.p_max = e.value("p_max", c.p_max);
    c.p_nodes = e.value("p_nodes", c.p_nodes);
    c.q_nodes = e.value("q_nodes", c.q_nodes);
    c.cell_res = e.value("res", c.cell_res);
    c.cell_horizon = e.value("horizon", c.cell_horizon);
    c.angles = e.value("angles", c.angles);
  }
  if (j.contains("verdicts")) {
    const auto& v = j.at("verdicts");
    c.slope_min = v.value("slope_min", c.slope_min);
    c.slope_max = v.value("slope_max", c.slope_max);
    c.r2_min = v.value("r2_min", c.r2_min);
    c.lower_slope_min = v.value("lower_slope_min", c.lower_slope_min);
    c.lower_slope_max = v.value("lower_slope_max", c.lower_slope_max);
  }
  if (j.contains("output")) c.output_dir = j.at("output").value("dir", c.output_dir);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["dim"] = c.dim;
  j["spec"] = c.spec;
  j["g"] = c.g;
  j["eps_list"] = c.eps_list;
  j["times"] = c.times;
  j["samples"] = {{"lo", from_vec(c.sample_lo, c.dim)},
                  {"hi", from_vec(c.sample_hi, c.dim)},
                  {"count", c.sample_count}};
  j["scheme"] = {{"m", c.m},           {"m_max", c.m_max},   {"cfl", c.cfl},
                 {"solver", c.solver}, {"margin", c.margin}, {"dominance", c.dominance}};
  j["effective"] = {{"method", c.effective_method}, {"p_max", c.p_max},
                    {"p_nodes", c.p_nodes},          {"q_nodes", c.q_nodes},
                    {"res", c.cell_res},             {"horizon", c.cell_horizon},
                    {"angles", c.angles}};
  j["verdicts"] = {{"slope_min", c.slope_min},
                   {"slope_max", c.slope_max},
                   {"r2_min", c.r2_min},
                   {"lower_slope_min", c.lower_slope_min},
                   {"lower_slope_max", c.lower_slope_max}};
  j["output"] = {{"dir", c.output_dir}};
  j["threads"] = c.threads;
  return j;
}

nlohmann::json toml_to_json(const std::string& text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(std::string("TOML parse error: ") + std::string(e.description()));
  }
  std::ostringstream out;
  out << toml::json_formatter{table};
  return nlohmann::json::parse(out.str());
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string ext = path.extension().string();
  if (ext == ".toml") return config_from_json(toml_to_json(buf.str()));
  if (ext == ".json") return config_from_json(nlohmann::json::parse(buf.str()));
  throw std::invalid_argument("config must be .toml or .json: " + path.string());
}

}  // namespace hjlab
