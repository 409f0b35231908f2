// Command-line front end for the homogenization experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hjlab/cell.hpp"
#include "hjlab/harness.hpp"
#include "hjlab/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_tree(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".toml") return hjlab::toml_to_json(buf.str());
  return json::parse(buf.str());
}

void write_json(const fs::path& dir, const std::string& stem, const json& j) {
  fs::create_directories(dir);
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw std::runtime_error("cannot write into " + dir.string());
  out << hjlab::report_json(j);
}

int verdict_exit(const std::map<std::string, bool>& verdicts) {
  bool ok = !verdicts.empty();
  for (const auto& [name, pass] : verdicts) {
    std::cout << "  " << name << ": " << (pass ? "pass" : "FAIL") << '\n';
    ok = ok && pass;
  }
  return ok ? 0 : 1;
}

void print_points(const hjlab::RateReport& r) {
  std::cout << r.name << " (" << r.spec << ", g = " << r.g << ", " << r.effective_method << ")\n";
  for (const auto& p : r.points) {
    std::cout << "  eps " << p.eps << "  m " << p.m << "  sup " << p.sup_err << "  min "
              << p.min_signed << "  scheme " << p.scheme_err
              << "  pointwise " << p.pointwise_diff << (p.qualified ? "" : "  (unqualified)")
              << '\n';
  }
  if (r.fit_valid) {
    std::cout << "  slope " << r.fit.slope << "  R^2 " << r.fit.r2 << '\n';
  } else {
    std::cout << "  no fit: " << r.fit_note << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rates of homogenization for Hamilton-Jacobi equations"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::string format = "json";
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "TOML or JSON experiment file");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    else opt->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  };
  auto* rate = app.add_subcommand("rate", "convergence rate of u^eps to u");
  auto* lower = app.add_subcommand("lower-bound", "one-sided lower bound of u^eps - u");
  auto* flat = app.add_subcommand("flat", "rate on the flat part of a 1D Hbar");
  auto* cosine_floor = app.add_subcommand("cosine-floor", "u^eps(0, 1) >= eps/6 for the cosine potential");
  auto* hedlund = app.add_subcommand("hedlund", "action audits of the Hedlund curves");
  auto* cell = app.add_subcommand("cell", "Hbar(p) from the cell problem");
  auto* noncont = app.add_subcommand("noncont", "corrector limits for the line potential");
  for (auto* sub : {rate, lower, flat, cell}) add_common(sub, true);
  for (auto* sub : {cosine_floor, hedlund, noncont}) add_common(sub, false);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) hjlab::set_default_threads(threads);

  try {
    auto load = [&]() {
      hjlab::ExperimentConfig c = hjlab::load_config(config_path);
      if (threads > 0) c.threads = threads;
      if (!out_dir.empty()) c.output_dir = out_dir;
      return c;
    };
    const json tree = config_path.empty() ? json::object() : read_tree(config_path);
    const fs::path dir = out_dir.empty() ? fs::path(tree.value("output", json::object()).value("dir", "out"))
                                         : fs::path(out_dir);

    if (*rate) {
      const auto c = load();
      const auto r = hjlab::run_rate_experiment(c);
      hjlab::emit_report(r, format, c.output_dir);
      print_points(r);
      return verdict_exit(r.verdicts);
    }
    if (*lower) {
      const auto c = load();
      const auto r = hjlab::run_rate_experiment(c);
      const auto lb = hjlab::check_lower_bound(r, c);
      hjlab::emit_report(r, format, c.output_dir);
      write_json(c.output_dir, c.name + "_lower_bound", lb);
      print_points(r);
      std::cout << "  c_fit " << lb.c_fit << '\n';
      return verdict_exit(lb.verdicts);
    }
    if (*flat) {
      const auto c = load();
      const auto r = hjlab::flat_part_experiment(c);
      hjlab::emit_report(r.rate, format, c.output_dir);
      write_json(c.output_dir, c.name + "_flat", r);
      print_points(r.rate);
      std::cout << "  flat radius " << r.flat_radius << ", effective variation "
                << r.effective_variation << '\n';
      return verdict_exit(r.verdicts);
    }
    if (*cosine_floor) {
      hjlab::CosineFloorOptions o;
      o.eps_list = tree.value("eps_list", o.eps_list);
      o.m = tree.value("m", o.m);
      o.m_max = tree.value("m_max", o.m_max);
      o.t = tree.value("t", o.t);
      const auto r = hjlab::cosine_floor_experiment(o);
      write_json(dir, "cosine_floor", r);
      for (std::size_t k = 0; k < r.eps.size(); ++k) {
        std::cout << "  eps " << r.eps[k] << "  u(0,1) " << r.value[k] << "  eps/6 " << r.eps[k] / 6
                  << "  tol " << r.tolerance[k] << '\n';
      }
      return verdict_exit(r.verdicts);
    }
    if (*hedlund) {
      hjlab::HedlundOptions o;
      o.delta = tree.value("delta", o.delta);
      o.tube_radius = tree.value("tube_radius", o.tube_radius);
      o.taus = tree.value("taus", o.taus);
      o.horizons = tree.value("horizons", o.horizons);
      o.cell_res = tree.value("cell_res", o.cell_res);
      o.cell_horizon = tree.value("cell_horizon", o.cell_horizon);
      const auto r = hjlab::hedlund_experiment(o);
      write_json(dir, "hedlund", r);
      for (std::size_t a = 0; a < r.taus.size(); ++a) {
        std::cout << "  tau " << r.taus[a] << "  defects";
        for (const auto& audit : r.audits[a]) std::cout << ' ' << audit.defect;
        std::cout << '\n';
      }
      return verdict_exit(r.verdicts);
    }
    if (*noncont) {
      hjlab::NonContOptions o;
      o.beta = tree.value("beta", o.beta);
      o.res = tree.value("res", o.res);
      o.eps_list = tree.value("eps_list", o.eps_list);
      o.oracle_nodes = tree.value("oracle_nodes", o.oracle_nodes);
      o.oracle_res = tree.value("oracle_res", o.oracle_res);
      o.oracle_stencil = tree.value("oracle_stencil", o.oracle_stencil);
      o.cross_check_horizon = tree.value("cross_check_horizon", o.cross_check_horizon);
      const auto r = hjlab::noncont_experiment(o);
      write_json(dir, "noncont", r);
      std::cout << "  gap(L1 -> L2) " << r.gap12.gap << "  gap(L2 -> L3) " << r.gap23.gap
                << "  oracle " << r.oracle_worst << '\n';
      return verdict_exit(r.verdicts);
    }
    if (*cell) {
      const int dim = tree.value("dim", 1);
      const hjlab::HamiltonianSpec spec = hjlab::make_spec(dim, tree.at("spec"));
      const std::string method = tree.value("method", std::string("large_time"));
      const int res = tree.value("res", 64);
      json rows = json::array();
      for (const auto& pj : tree.at("p")) {
        hjlab::Vec3 p{0, 0, 0};
        for (int d = 0; d < dim; ++d) p[static_cast<std::size_t>(d)] = pj.at(static_cast<std::size_t>(d)).get<double>();
        hjlab::CellEstimate e;
        if (method == "large_time") {
          e = hjlab::effective_H_large_time(spec, p, tree.value("horizon", 40.0), res);
        } else if (method == "discounted") {
          e = hjlab::effective_H_discounted(spec, p, tree.value("lambda", 0.01), res);
        } else if (method == "exact_1d") {
          if (dim != 1 || !spec.is_mechanical()) throw std::invalid_argument("exact_1d needs a 1D mechanical spec");
          e.p = p;
          e.method = hjlab::CellMethod::exact_1d;
          e.hbar = hjlab::effective_H_1d_mechanical(spec.coefficient(), p[0]);
        } else {
          throw std::invalid_argument("unknown cell method " + method);
        }
        rows.push_back({{"p", pj}, {"hbar", e.hbar}, {"error_bound", e.error_bound}, {"method", method}});
        std::cout << "  p " << pj.dump() << "  hbar " << e.hbar << " +- " << e.error_bound << '\n';
      }
      write_json(dir, tree.value("name", std::string("cell")),
                 {{"schema", "hjlab.cell/1"}, {"spec", spec.describe()}, {"rows", rows}});
      if (format == "csv") {
        std::ofstream out(dir / (tree.value("name", std::string("cell")) + ".csv"));
        out.precision(17);
        out << "row,hbar,error_bound\n";
        for (std::size_t k = 0; k < rows.size(); ++k) {
          out << k << ',' << rows[k]["hbar"].get<double>() << ',' << rows[k]["error_bound"].get<double>() << '\n';
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
