#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjlab/characteristics.hpp"
#include "hjlab/critical_distance.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/hamiltonians.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

// ---------------------------------------------------------------------------
// Registries

/// Builds a spec from a config block, e.g.
///   {"kind": "mechanical", "potential": "neg_sin2", "amplitude": 1}
///   {"kind": "homogeneous", "speed": "product_sine", "amplitude": 0.5, "k": 1}
///   {"kind": "hedlund", "delta": 0.1, "tube_radius": 0.15}
///   {"kind": "mechanical", "potential": "lines", "beta": 1}
/// plus an optional "clamp": {"c0": .., "k0": ..}.
HamiltonianSpec make_spec(int dim, const nlohmann::json& block);

/// Initial data with the facts the harness needs about it.
struct InitialData {
  std::string name;
  ScalarFn g;
  double lipschitz = 0.0;
  double second_derivative_bound = kInfinity;  ///< M = |D^2 g|, inf when not C^2
  bool concave_pl = false;
  std::vector<Vec3> slopes;     ///< concave_pl: g = min_j (p_j . x + b_j)
  std::vector<double> offsets;
};

/// Registry: "trimmed_cone" {cap}, "concave_pl" {directions, scale | slopes,
/// offsets}, "gaussian_bump" {amplitude, width}, "sinusoid" {amplitude, period}.
InitialData make_initial_data(int dim, const nlohmann::json& block);

/// Deterministic Halton cloud in the box [lo, hi].
std::vector<Vec3> sample_cloud(int dim, const Vec3& lo, const Vec3& hi, int count);

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string name = "experiment";
  int dim = 1;
  nlohmann::json spec;  ///< block for make_spec
  nlohmann::json g;     ///< block for make_initial_data
  std::vector<double> eps_list;
  Vec3 sample_lo{-1, -1, -1};
  Vec3 sample_hi{1, 1, 1};
  int sample_count = 200;
  std::vector<double> times{0.5};
  int m = 16;       ///< h = eps / m at the first level
  int m_max = 64;   ///< finest level allowed by the adaptive loop
  double cfl = 0.45;
  std::string solver = "box";  ///< box | superposition
  double margin = 0.25;        ///< extra box width beyond the propagation cone
  std::string effective_method = "exact_1d";  ///< exact_1d | large_time | discounted | consistent | angular | y_independent
  double p_max = 3.0;
  int p_nodes = 1201;
  int q_nodes = 1201;
  int cell_res = 64;
  double cell_horizon = 160.0;
  int angles = 24;
  double dominance = 0.1;  ///< scheme error must stay below this fraction of the error
  // Verdict thresholds.
  double slope_min = 0.8;
  double slope_max = 1.2;
  double r2_min = 0.95;
  double lower_slope_min = 0.8;
  double lower_slope_max = 1.3;
  std::string output_dir = "out";
  int threads = 0;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Accepts .toml and .json files.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Parses TOML text into the same JSON tree used for JSON configs.
nlohmann::json toml_to_json(const std::string& text);

// ---------------------------------------------------------------------------
// Rate experiments

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least squares on (log x, log y). Throws std::invalid_argument with fewer
/// than 3 pairs or a nonpositive value.
LogLogFit fit_loglog(const std::vector<std::pair<double, double>>& pairs);

struct RatePoint {
  double eps = 0.0;
  int m = 0;             ///< fine level used for the reported errors
  double h = 0.0;
  double dt = 0.0;
  double sup_err = 0.0;  ///< sup over samples and times of |u^eps - u|
  double min_signed = 0.0;
  /// Two-level difference of the reported norms: max(|sup_h - sup_{h/2}|, |min_h - min_{h/2}|).
  double scheme_err = 0.0;
  double pointwise_diff = 0.0;  ///< sup over samples of |e_h - e_{h/2}|, diagnostic only
  bool qualified = false;
  double max_gradient = 0.0;
};

struct RateReport {
  std::string schema = "hjlab.rate/1";
  std::string name;
  std::string spec;
  std::string g;
  std::string effective_method;
  std::string solver;
  std::vector<double> times;
  int samples = 0;
  std::vector<RatePoint> points;
  bool fit_valid = false;
  LogLogFit fit;
  std::string fit_note;
  std::map<std::string, bool> verdicts;

  bool passed() const;
};

void to_json(nlohmann::json& j, const RatePoint& p);
void from_json(const nlohmann::json& j, RatePoint& p);
void to_json(nlohmann::json& j, const LogLogFit& f);
void from_json(const nlohmann::json& j, LogLogFit& f);
void to_json(nlohmann::json& j, const RateReport& r);
void from_json(const nlohmann::json& j, RateReport& r);

/// Solves the oscillatory and effective problems for every eps, raising m
/// until the Richardson scheme-error estimate is below `dominance` times the
/// measured error (or m_max is reached), then fits the qualified points.
RateReport run_rate_experiment(const ExperimentConfig& config);

struct LowerBoundReport {
  std::string schema = "hjlab.lower_bound/1";
  std::vector<double> eps;
  std::vector<double> minima;     ///< min over samples of u^eps - u
  std::vector<double> tolerance;  ///< scheme-error estimates
  double c_fit = 0.0;             ///< least squares |min| ~ c eps
  bool slope_valid = false;
  LogLogFit slope;                ///< fit of |minima| against eps
  bool bound_holds = false;       ///< min >= -c_fit eps - tol for every eps
  bool trend_holds = false;       ///< |min(eps/2)| <= 0.7 |min(eps)| + tol
  std::map<std::string, bool> verdicts;

  bool passed() const;
};

void to_json(nlohmann::json& j, const LowerBoundReport& r);

LowerBoundReport check_lower_bound(const RateReport& report, const ExperimentConfig& config);
LowerBoundReport check_lower_bound(const ExperimentConfig& config);

/// Rate experiment restricted to data with |Dg| strictly inside the flat
/// part of a 1D mechanical Hbar. Also checks that the effective solution
/// stays equal to g. Throws std::invalid_argument when Lip(g) >= I0.
struct FlatPartReport {
  RateReport rate;
  double flat_radius = 0.0;
  double effective_variation = 0.0;  ///< sup over samples, times of |u - g|
  std::map<std::string, bool> verdicts;
  bool passed() const;
};
void to_json(nlohmann::json& j, const FlatPartReport& r);
FlatPartReport flat_part_experiment(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Named reproductions

struct CosineFloorOptions {
  std::vector<double> eps_list{0.125, 0.0625, 0.03125};
  int m = 16;
  int m_max = 512;
  double t = 1.0;
};

struct CosineFloorReport {
  std::string schema = "hjlab.cosine_floor/1";
  double v_at_third = 0.0;   ///< V(1/3), must be <= -1
  double v_max = 0.0;        ///< must be 0, attained at 1/2
  double v_argmax = 0.0;
  std::vector<double> eps;
  std::vector<double> value;      ///< u^eps(0, t) at the finest level
  std::vector<double> tolerance;  ///< |u_h - u_{h/2}|
  std::vector<int> m;
  double effective_sup = 0.0;     ///< sup of the effective solution (u = 0)
  std::map<std::string, bool> verdicts;
  bool passed() const;
};
void to_json(nlohmann::json& j, const CosineFloorReport& r);
/// H = p^2/2 + V with V = -2(1 + cos 2 pi y), g = 0.
CosineFloorReport cosine_floor_experiment(const CosineFloorOptions& options = {});

struct HedlundOptions {
  double delta = 0.1;
  double tube_radius = 0.15;
  std::vector<double> taus{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> horizons{10.0, 100.0, 1000.0};
  double uniformity = 1.2;
  int cell_res = 0;  ///< > 0 adds a coarse cell solve of Hbar(e1)
  double cell_horizon = 10.0;
};

struct HedlundReport {
  std::string schema = "hjlab.hedlund/1";
  double delta = 0.0;
  std::vector<double> taus;
  std::vector<double> horizons;
  std::vector<std::vector<ActionAudit>> audits;  ///< [tau][horizon]
  std::vector<double> slope_error;               ///< |(xi(-T) - xi(0))/(-T) - q_tau| * T at the largest T
  double line_defect = 0.0;                      ///< straight l1 curve, p = e1
  double defect_bound = 0.0;                     ///< 3/delta + 4
  double cell_hbar = 0.0;
  double cell_error = 0.0;
  std::map<std::string, bool> verdicts;
  bool passed() const;
};
void to_json(nlohmann::json& j, const HedlundReport& r);
HedlundReport hedlund_experiment(const HedlundOptions& options = {});

struct NonContOptions {
  double beta = 1.0;
  int res = 32;
  std::vector<double> eps_list{0.1, 0.05, 0.025};
  int oracle_nodes = 100;
  int oracle_res = 0;            ///< grid of the sweeping-vs-graph comparison (0 = res)
  int oracle_stencil = 1;        ///< graph_distance stencil (1 = 26 neighbours)
  double oracle_fraction = 0.25; ///< nodes drawn from d >= fraction * max d
  double oracle_tolerance = 0.05;
  double cross_check_horizon = 200.0;
};

struct NonContReport {
  GapReport gap12;
  GapReport gap23;
  double oracle_worst = 0.0;  ///< worst relative sweeping-vs-graph difference
  std::map<std::string, bool> verdicts;
  bool passed() const;
};
void to_json(nlohmann::json& j, const NonContReport& r);
NonContReport noncont_experiment(const NonContOptions& options = {});

/// Hopf-Lax against the Lax-Friedrichs solve of the effective equation at
/// h and h/2. The FD error estimate is |u_h - u_{h/2}| / (sqrt 2 - 1), the
/// Richardson estimate for the order 1/2 that monotone schemes guarantee.
struct CrossCheckReport {
  std::string schema = "hjlab.cross/1";
  double h = 0.0;
  double hopf_lax_vs_fd = 0.0;  ///< sup |HL - FD_{h/2}|
  double fd_difference = 0.0;   ///< sup |FD_h - FD_{h/2}|
  double fd_estimate = 0.0;
  bool agree = false;
};
void to_json(nlohmann::json& j, const CrossCheckReport& r);
CrossCheckReport cross_check_effective(const ExperimentConfig& config, double h);

// ---------------------------------------------------------------------------
// Output

/// Writes `<dir>/<stem>.json`, and for csv also `<dir>/<stem>.csv` with
/// columns eps,sup_err,min_signed,scheme_err,qualified.
void emit_report(const RateReport& report, const std::string& format,
                 const std::filesystem::path& dir);
/// JSON text with a trailing newline; deterministic for equal reports.
std::string report_json(const nlohmann::json& j);
std::string rate_csv(const RateReport& report);

}  // namespace hjlab
