// optspline: command-line front end for the enrichment library.
//
// Subcommands:
//   simulate  synthesize a sample path and noisy measurements
//   enrich    fit the maximum-likelihood continuous-time estimate
//   verify    check a stored estimate against the stationarity conditions
//   compare   score estimation methods against a ground-truth trajectory
//
// Every run takes an optional --config JSON document; command-line flags
// override config keys, which override built-in defaults. Exit codes:
// 0 success, 1 validation/verification failure, 2 I/O or config error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "optspline/io.hpp"
#include "optspline/linear_solver.hpp"
#include "optspline/model.hpp"
#include "optspline/nonlinear_solver.hpp"
#include "optspline/optimality.hpp"
#include "optspline/simkit.hpp"
#include "optspline/spline.hpp"
#include "optspline/types.hpp"

namespace {

using nlohmann::json;
using namespace optspline;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json cfg = io::read_json_file(path);
  if (!cfg.is_object()) {
    throw std::runtime_error("config file must hold a JSON object: " + path);
  }
  return cfg;
}

// Flag > config > default. `section` may be empty for top-level keys.
template <class T>
T resolve(const CLI::Option* opt, const T& flag_value, const json& cfg,
          const std::string& section, const std::string& key,
          const T& fallback) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  const json* scope = &cfg;
  if (!section.empty()) {
    auto it = cfg.find(section);
    if (it == cfg.end()) return fallback;
    scope = &*it;
  }
  auto it = scope->find(key);
  if (it == scope->end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw std::runtime_error(
        "config key '" + (section.empty() ? key : section + "." + key) +
        "': " + e.what());
  }
}

Mat mat_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw std::runtime_error("config model." + name +
                             " must be an array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j.at(r).size()) != cols) {
      throw std::runtime_error("config model." + name + " has ragged rows");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model selection shared by all subcommands.

struct ModelFlags {
  std::string preset;
  double sigma_p = 1.0;
  double sigma_m = 1.0;
  double omega = 1.0;
  int alpha = 1;

  CLI::Option* preset_opt = nullptr;
  CLI::Option* sigma_p_opt = nullptr;
  CLI::Option* sigma_m_opt = nullptr;
  CLI::Option* omega_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;

  void attach(CLI::App* cmd) {
    preset_opt = cmd->add_option(
        "--preset", preset,
        "Model preset: double-integrator, harmonic, alpha, pendulum, "
        "linear-custom (config key: preset)");
    sigma_p_opt = cmd->add_option("--sigma-p", sigma_p,
                                  "Process noise scale (config: params.sigma_p)");
    sigma_m_opt = cmd->add_option(
        "--sigma-m", sigma_m,
        "Measurement noise standard deviation (config: params.sigma_m)");
    omega_opt = cmd->add_option(
        "--omega", omega,
        "Natural frequency of the harmonic preset (config: params.omega)");
    alpha_opt = cmd->add_option(
        "--alpha", alpha,
        "Exponent of the alpha preset, 1 = Gaussian (config: params.alpha)");
  }
};

struct ModelChoice {
  std::string preset = "double-integrator";
  double sigma_p = 1.0;
  double sigma_m = 1.0;
  double omega = 1.0;
  int alpha = 1;
  json custom;  // linear-custom matrices
};

ModelChoice resolve_model(const ModelFlags& fl, const json& cfg) {
  ModelChoice mc;
  mc.preset = resolve<std::string>(fl.preset_opt, fl.preset, cfg, "", "preset",
                                   "double-integrator");
  mc.sigma_p = resolve(fl.sigma_p_opt, fl.sigma_p, cfg, "params", "sigma_p", 1.0);
  mc.sigma_m = resolve(fl.sigma_m_opt, fl.sigma_m, cfg, "params", "sigma_m", 1.0);
  mc.omega = resolve(fl.omega_opt, fl.omega, cfg, "params", "omega", 1.0);
  mc.alpha = resolve(fl.alpha_opt, fl.alpha, cfg, "params", "alpha", 1);
  if (cfg.contains("model")) mc.custom = cfg.at("model");
  return mc;
}

json model_params_json(const ModelChoice& mc) {
  json p;
  if (mc.preset == "linear-custom") {
    p["model"] = mc.custom;
    return p;
  }
  p["sigma_p"] = mc.sigma_p;
  p["sigma_m"] = mc.sigma_m;
  if (mc.preset == "harmonic") p["omega"] = mc.omega;
  if (mc.preset == "alpha") p["alpha"] = mc.alpha;
  return p;
}

struct BuiltModel {
  ModelChoice choice;
  StochasticSystem system;
  std::optional<LinearGaussianSystem> linear;  // closed-form solvable
  std::optional<AlphaPreset> alpha;            // Newton on segment constants
};

BuiltModel build_model(const ModelChoice& mc) {
  BuiltModel bm;
  bm.choice = mc;
  if (mc.preset == "double-integrator") {
    auto p = preset_double_integrator(mc.sigma_p, mc.sigma_m);
    bm.system = p.system;
    bm.linear = p.model;
  } else if (mc.preset == "harmonic") {
    auto p = preset_harmonic(mc.omega, mc.sigma_p, mc.sigma_m);
    bm.system = p.system;
    bm.linear = p.model;
  } else if (mc.preset == "alpha") {
    auto p = preset_alpha_particle(mc.alpha, mc.sigma_p, mc.sigma_m);
    bm.system = p.system;
    bm.alpha = p;
  } else if (mc.preset == "pendulum") {
    bm.system = preset_pendulum(mc.sigma_p, mc.sigma_m).system;
  } else if (mc.preset == "linear-custom") {
    if (mc.custom.is_null()) {
      throw std::runtime_error(
          "preset linear-custom needs a config \"model\" object with "
          "matrices A, B, C, D, Q, R");
    }
    LinearGaussianSystem lgs{mat_from_json(mc.custom.at("A"), "A"),
                             mat_from_json(mc.custom.at("B"), "B"),
                             mat_from_json(mc.custom.at("C"), "C"),
                             mat_from_json(mc.custom.at("D"), "D"),
                             mat_from_json(mc.custom.at("Q"), "Q"),
                             mat_from_json(mc.custom.at("R"), "R")};
    lgs.validate();
    bm.system = make_stochastic(lgs);
    bm.linear = lgs;
  } else {
    throw std::invalid_argument(
        "unknown preset '" + mc.preset +
        "' (valid presets: double-integrator, harmonic, alpha, pendulum, "
        "linear-custom)");
  }
  return bm;
}

Spline solve_for_model(const BuiltModel& bm, const MeasurementSet& ms,
                       int nodes_per_interval) {
  if (bm.linear) return solve_spline(*bm.linear, ms);
  if (bm.alpha) return solve_alpha(*bm.alpha, ms);
  return solve_collocation(bm.system, ms, initial_guess(bm.system, ms),
                           nodes_per_interval);
}

// ---------------------------------------------------------------------------
// Output helpers.

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

// Dense sampling of a spline: `points_per_interval` samples per segment plus
// the final knot. Columns are t, the state components, then the forcing.
void write_dense_csv(const std::string& path, const Spline& spline,
                     int points_per_interval) {
  if (points_per_interval < 1) {
    throw std::invalid_argument("points per interval must be >= 1");
  }
  auto out = open_output(path);
  const int n_x = spline.n_x();
  const int n_v = static_cast<int>(spline.knot_v.front().size());
  out << "t";
  for (int i = 1; i <= n_x; ++i) out << ",x" << i;
  for (int i = 1; i <= n_v; ++i) out << ",v" << i;
  out << "\n";
  auto emit = [&](double t) {
    SplineEval e = eval_spline(spline, t);
    out << io::format_double(t);
    for (int i = 0; i < n_x; ++i) out << "," << io::format_double(e.x[i]);
    for (int i = 0; i < n_v; ++i) out << "," << io::format_double(e.v[i]);
    out << "\n";
  };
  for (int k = 0; k < spline.intervals(); ++k) {
    const double t0 = spline.knot_times[k];
    const double gap = spline.knot_times[k + 1] - t0;
    for (int j = 0; j < points_per_interval; ++j) {
      emit(t0 + gap * j / points_per_interval);
    }
  }
  emit(spline.knot_times.back());
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const ModelFlags& mfl, const json& cfg, const CLI::App* cmd,
                 double dt, double t0, double tf,
                 const std::vector<double>& x0_flag, double f0,
                 std::uint64_t seed, const std::string& scheme,
                 const std::string& traj_path, const std::string& meas_path,
                 const std::string& manifest_path) {
  const ModelChoice mc = resolve_model(mfl, cfg);
  const BuiltModel bm = build_model(mc);

  SimConfig sc;
  sc.dt = resolve(cmd->get_option("--dt"), dt, cfg, "simulate", "dt", 1e-2);
  sc.horizon.t0 = resolve(cmd->get_option("--t0"), t0, cfg, "simulate", "t0", 0.0);
  sc.horizon.tf = resolve(cmd->get_option("--tf"), tf, cfg, "simulate", "tf", 1.0);
  std::vector<double> x0 =
      resolve(cmd->get_option("--x0"), x0_flag, cfg, "simulate", "x0",
              std::vector<double>(bm.system.n_x, 0.0));
  sc.x0 = Eigen::Map<const Vec>(x0.data(), static_cast<long>(x0.size()));
  sc.sigma_p = mc.sigma_p;
  sc.sigma_m = mc.sigma_m;
  sc.f0 = resolve(cmd->get_option("--f0"), f0, cfg, "simulate", "f0", 1.0);
  sc.seed = resolve(cmd->get_option("--seed"), seed, cfg, "simulate", "seed",
                    std::uint64_t{0});
  sc.scheme = sim_scheme_from_string(resolve<std::string>(
      cmd->get_option("--scheme"), scheme, cfg, "simulate", "scheme",
      "paper-verlet"));

  const std::string traj_out = resolve<std::string>(
      cmd->get_option("--trajectory"), traj_path, cfg, "simulate", "trajectory", "");
  const std::string meas_out = resolve<std::string>(
      cmd->get_option("--measurements"), meas_path, cfg, "simulate",
      "measurements", "");
  const std::string man_out = resolve<std::string>(
      cmd->get_option("--manifest"), manifest_path, cfg, "simulate", "manifest", "");
  if (traj_out.empty() || meas_out.empty() || man_out.empty()) {
    throw std::runtime_error(
        "simulate needs output paths for --trajectory, --measurements and "
        "--manifest (flags or config simulate.* keys)");
  }

  Trajectory traj = simulate(sc, bm.system);
  MeasurementSet ms = sample_measurements(traj, sc.f0, sc.sigma_m, sc.seed);

  io::write_trajectory_csv(traj_out, traj);
  io::write_measurements_csv(meas_out, ms);

  json params = model_params_json(mc);
  params["dt"] = sc.dt;
  params["t0"] = sc.horizon.t0;
  params["tf"] = sc.horizon.tf;
  params["x0"] = x0;
  params["f0"] = sc.f0;
  json manifest = {{"seed", sc.seed},
                   {"scheme", to_string(sc.scheme)},
                   {"preset", mc.preset},
                   {"params", params},
                   {"tool_version", kToolVersion}};
  io::write_json_file(man_out, manifest);

  std::printf("simulate: %zu states, %d measurements (preset %s, seed %llu)\n",
              traj.states.size(), ms.count(), mc.preset.c_str(),
              static_cast<unsigned long long>(sc.seed));
  return 0;
}

// ---------------------------------------------------------------------------
// enrich

int run_enrich(const ModelFlags& mfl, const json& cfg, const CLI::App* cmd,
               const std::string& meas_path, double f0_hint,
               const std::string& spline_path, const std::string& dense_path,
               int points_per_interval, int nodes_per_interval) {
  const ModelChoice mc = resolve_model(mfl, cfg);

  const std::string meas_in = resolve<std::string>(
      cmd->get_option("--measurements"), meas_path, cfg, "enrich",
      "measurements", "");
  if (meas_in.empty()) {
    throw std::runtime_error(
        "enrich needs an input measurement CSV (--measurements or config "
        "enrich.measurements)");
  }
  const double f0 = resolve(cmd->get_option("--f0"), f0_hint, cfg, "enrich",
                            "f0", 0.0);
  const std::string spline_out = resolve<std::string>(
      cmd->get_option("--spline"), spline_path, cfg, "enrich", "spline", "");
  if (spline_out.empty()) {
    throw std::runtime_error(
        "enrich needs an output path for the estimate (--spline or config "
        "enrich.spline)");
  }
  const std::string dense_out = resolve<std::string>(
      cmd->get_option("--dense"), dense_path, cfg, "enrich", "dense", "");
  const int ppi = resolve(cmd->get_option("--points-per-interval"),
                          points_per_interval, cfg, "enrich",
                          "points_per_interval", 100);
  const int nodes = resolve(cmd->get_option("--nodes-per-interval"),
                            nodes_per_interval, cfg, "enrich",
                            "nodes_per_interval", 5);

  MeasurementSet ms = io::read_measurements_csv(meas_in, f0);
  const BuiltModel bm = build_model(mc);
  Spline spline = solve_for_model(bm, ms, nodes);

  io::write_json_file(spline_out, io::spline_to_json(spline));
  if (!dense_out.empty()) write_dense_csv(dense_out, spline, ppi);

  std::printf("enrich: %d intervals, %s estimate written to %s\n",
              spline.intervals(), spline.kind().c_str(), spline_out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// verify

const char* condition_label(const std::string& key) {
  if (key == "r21") return "process noise gradient on segment interiors";
  if (key == "r22") return "costate differential equation";
  if (key == "r23") return "state differential equation";
  if (key == "r24") return "process noise gradient at knots";
  if (key == "r25") return "measurement noise gradient";
  if (key == "r26") return "costate / measurement-derivative link";
  if (key == "r27") return "costate jump balance";
  if (key == "r28") return "measurement equation";
  if (key == "r29") return "knot dynamics";
  if (key == "x_continuity") return "state continuity across knots";
  if (key == "lambda_boundary") return "boundary costate limits";
  return "unknown condition";
}

int run_verify(const ModelFlags& mfl, const json& cfg, const CLI::App* cmd,
               const std::string& spline_path, const std::string& meas_path,
               double f0_hint, const std::string& report_path, double tolerance,
               int grid_per_interval) {
  const ModelChoice mc = resolve_model(mfl, cfg);

  const std::string spline_in = resolve<std::string>(
      cmd->get_option("--spline"), spline_path, cfg, "verify", "spline", "");
  const std::string meas_in = resolve<std::string>(
      cmd->get_option("--measurements"), meas_path, cfg, "verify",
      "measurements", "");
  if (spline_in.empty() || meas_in.empty()) {
    throw std::runtime_error(
        "verify needs --spline and --measurements (or config verify.* keys)");
  }
  const double f0 = resolve(cmd->get_option("--f0"), f0_hint, cfg, "verify",
                            "f0", 0.0);
  const double tol = resolve(cmd->get_option("--tolerance"), tolerance, cfg,
                             "verify", "tolerance", 1e-7);
  const int grid = resolve(cmd->get_option("--grid-per-interval"),
                           grid_per_interval, cfg, "verify",
                           "grid_per_interval", 9);
  const std::string report_out = resolve<std::string>(
      cmd->get_option("--report"), report_path, cfg, "verify", "report", "");

  MeasurementSet ms = io::read_measurements_csv(meas_in, f0);
  const BuiltModel bm = build_model(mc);
  Spline spline = io::spline_from_json(io::read_json_file(spline_in));
  CandidateSolution cand = candidate_from_spline(spline);

  ResidualBundle bundle = verify(bm.system, ms, cand, grid);
  const bool ok = bundle.verifies(tol);

  json report = bundle.to_json();
  report["tolerance"] = tol;
  report["verified"] = ok;
  if (!report_out.empty()) io::write_json_file(report_out, report);

  std::printf("verify: max residual %.6g against tolerance %.6g: %s\n",
              bundle.max_residual(), tol, ok ? "PASS" : "FAIL");
  if (!ok) {
    static const char* keys[] = {"r21", "r22", "r23", "r24",
                                 "r25", "r26", "r27", "r28",
                                 "r29", "x_continuity", "lambda_boundary"};
    for (const char* key : keys) {
      const double value = report.at(key).at("max_abs").get<double>();
      if (value > tol) {
        std::printf("  violated %s (%s): max |residual| = %.6g\n", key,
                    condition_label(key), value);
      }
    }
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// compare

struct MethodEstimate {
  std::vector<double> times;
  std::vector<Vec> states;  // estimate at the truth grid times
};

MethodEstimate tabulate_spline(const Spline& spline,
                               const std::vector<double>& times) {
  MethodEstimate est;
  est.times = times;
  est.states.reserve(times.size());
  for (double t : times) est.states.push_back(eval_spline(spline, t).x);
  return est;
}

MethodEstimate tabulate_finite_difference(const MeasurementSet& ms,
                                          const std::vector<double>& times) {
  const std::vector<Vec> slopes = finite_difference_velocity(ms);
  MethodEstimate est;
  est.times = times;
  est.states.reserve(times.size());
  for (double t : times) {
    int k = static_cast<int>(std::upper_bound(ms.times().begin(),
                                              ms.times().end(), t) -
                             ms.times().begin()) - 1;
    k = std::clamp(k, 0, ms.intervals() - 1);
    const double s = t - ms.time(k);
    Vec state(2);
    state[0] = ms.value(k)[0] + slopes[k][0] * s;
    state[1] = slopes[k][0];
    est.states.push_back(state);
  }
  return est;
}

int run_compare(const ModelFlags& mfl, const json& cfg, const CLI::App* cmd,
                const std::string& meas_path, double f0_hint,
                const std::string& truth_path,
                const std::vector<std::string>& methods_flag,
                const std::string& metrics_path,
                const std::string& dense_prefix, int nodes_per_interval) {
  const ModelChoice mc = resolve_model(mfl, cfg);

  const std::string meas_in = resolve<std::string>(
      cmd->get_option("--measurements"), meas_path, cfg, "compare",
      "measurements", "");
  const std::string truth_in = resolve<std::string>(
      cmd->get_option("--truth"), truth_path, cfg, "compare", "truth", "");
  if (meas_in.empty() || truth_in.empty()) {
    throw std::runtime_error(
        "compare needs --measurements and --truth (or config compare.* keys)");
  }
  const double f0 = resolve(cmd->get_option("--f0"), f0_hint, cfg, "compare",
                            "f0", 0.0);
  const std::vector<std::string> methods = resolve(
      cmd->get_option("--methods"), methods_flag, cfg, "compare", "methods",
      std::vector<std::string>{"optimal-spline", "cubic-spline",
                               "finite-difference"});
  const std::string metrics_out = resolve<std::string>(
      cmd->get_option("--metrics"), metrics_path, cfg, "compare", "metrics", "");
  if (metrics_out.empty()) {
    throw std::runtime_error(
        "compare needs an output path for the metrics JSON (--metrics or "
        "config compare.metrics)");
  }
  const std::string dense_out = resolve<std::string>(
      cmd->get_option("--dense-prefix"), dense_prefix, cfg, "compare",
      "dense_prefix", "");
  const int nodes = resolve(cmd->get_option("--nodes-per-interval"),
                            nodes_per_interval, cfg, "compare",
                            "nodes_per_interval", 5);

  if (methods.empty()) throw std::invalid_argument("no comparison methods given");
  for (const std::string& m : methods) {
    if (m != "optimal-spline" && m != "cubic-spline" &&
        m != "finite-difference") {
      throw std::invalid_argument(
          "unknown method '" + m +
          "' (valid methods: optimal-spline, cubic-spline, finite-difference)");
    }
  }

  MeasurementSet ms = io::read_measurements_csv(meas_in, f0);
  Trajectory truth = io::read_trajectory_csv(truth_in);

  // Score on the truth samples inside the measurement horizon.
  std::vector<double> times;
  std::vector<Vec> truth_states;
  for (std::size_t i = 0; i < truth.times.size(); ++i) {
    const double t = truth.times[i];
    if (t >= ms.time(0) && t <= ms.time(ms.intervals())) {
      times.push_back(t);
      truth_states.push_back(truth.states[i]);
    }
  }
  if (times.empty()) {
    throw std::invalid_argument(
        "truth trajectory does not overlap the measurement horizon");
  }
  const bool has_velocity = truth_states.front().size() >= 2;

  json metrics;
  metrics["samples"] = times.size();
  metrics["horizon"] = {{"t_begin", ms.time(0)},
                        {"t_end", ms.time(ms.intervals())}};
  metrics["tool_version"] = kToolVersion;
  metrics["methods"] = json::object();

  for (const std::string& method : methods) {
    if (metrics["methods"].contains(method)) continue;
    MethodEstimate est;
    if (method == "optimal-spline") {
      const BuiltModel bm = build_model(mc);
      est = tabulate_spline(solve_for_model(bm, ms, nodes), times);
    } else if (method == "cubic-spline") {
      auto p = preset_double_integrator(mc.sigma_p, mc.sigma_m);
      est = tabulate_spline(solve_spline(p.model, ms), times);
    } else {
      est = tabulate_finite_difference(ms, times);
    }

    double sq_pos = 0.0;
    double sq_vel = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double ep = est.states[i][0] - truth_states[i][0];
      sq_pos += ep * ep;
      if (has_velocity && est.states[i].size() >= 2) {
        const double ev = est.states[i][1] - truth_states[i][1];
        sq_vel += ev * ev;
      }
    }
    json entry;
    entry["rmse_position"] = std::sqrt(sq_pos / static_cast<double>(times.size()));
    if (has_velocity) {
      entry["rmse_velocity"] = std::sqrt(sq_vel / static_cast<double>(times.size()));
    }
    metrics["methods"][method] = entry;

    if (!dense_out.empty()) {
      auto out = open_output(dense_out + method + ".csv");
      const int n = static_cast<int>(est.states.front().size());
      out << "t";
      for (int i = 1; i <= n; ++i) out << ",x" << i;
      out << "\n";
      for (std::size_t i = 0; i < times.size(); ++i) {
        out << io::format_double(times[i]);
        for (int c = 0; c < n; ++c) {
          out << "," << io::format_double(est.states[i][c]);
        }
        out << "\n";
      }
    }

    std::printf("compare: %-17s rmse_position %.6g", method.c_str(),
                entry["rmse_position"].get<double>());
    if (has_velocity) {
      std::printf("  rmse_velocity %.6g", entry["rmse_velocity"].get<double>());
    }
    std::printf("\n");
  }

  io::write_json_file(metrics_out, metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "optspline: maximum-likelihood continuous-time state estimates from "
      "discrete noisy measurements"};
  app.require_subcommand(1);

  // --- simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand(
      "simulate", "Synthesize a sample path and noisy measurements");
  std::string sim_config;
  sim->add_option("--config", sim_config, "JSON config file");
  ModelFlags sim_model;
  sim_model.attach(sim);
  double sim_dt = 1e-2, sim_t0 = 0.0, sim_tf = 1.0, sim_f0 = 1.0;
  std::vector<double> sim_x0;
  std::uint64_t sim_seed = 0;
  std::string sim_scheme = "paper-verlet";
  std::string sim_traj, sim_meas, sim_manifest;
  sim->add_option("--dt", sim_dt, "Integration step (config: simulate.dt)");
  sim->add_option("--t0", sim_t0, "Horizon start (config: simulate.t0)");
  sim->add_option("--tf", sim_tf, "Horizon end (config: simulate.tf)");
  sim->add_option("--x0", sim_x0, "Initial state (config: simulate.x0)")
      ->delimiter(',');
  sim->add_option("--f0", sim_f0, "Measurement rate (config: simulate.f0)");
  sim->add_option("--seed", sim_seed, "Random seed (config: simulate.seed)");
  sim->add_option("--scheme", sim_scheme,
                  "Integrator: paper-verlet or euler-maruyama "
                  "(config: simulate.scheme)");
  sim->add_option("--trajectory", sim_traj, "Output trajectory CSV");
  sim->add_option("--measurements", sim_meas, "Output measurements CSV");
  sim->add_option("--manifest", sim_manifest, "Output manifest JSON");

  // --- enrich --------------------------------------------------------------
  auto* enr = app.add_subcommand(
      "enrich", "Fit the maximum-likelihood continuous-time estimate");
  std::string enr_config;
  enr->add_option("--config", enr_config, "JSON config file");
  ModelFlags enr_model;
  enr_model.attach(enr);
  std::string enr_meas, enr_spline, enr_dense;
  double enr_f0 = 0.0;
  int enr_ppi = 100, enr_nodes = 5;
  enr->add_option("--measurements", enr_meas, "Input measurements CSV");
  enr->add_option("--f0", enr_f0,
                  "Sampling rate of the measurements (0 = infer from file)");
  enr->add_option("--spline", enr_spline, "Output estimate JSON");
  enr->add_option("--dense", enr_dense, "Optional dense samples CSV");
  enr->add_option("--points-per-interval", enr_ppi,
                  "Dense samples per measurement interval (default 100)");
  enr->add_option("--nodes-per-interval", enr_nodes,
                  "Collocation nodes per interval for nonlinear models");

  // --- verify --------------------------------------------------------------
  auto* ver = app.add_subcommand(
      "verify", "Check a stored estimate against the stationarity conditions");
  std::string ver_config;
  ver->add_option("--config", ver_config, "JSON config file");
  ModelFlags ver_model;
  ver_model.attach(ver);
  std::string ver_spline, ver_meas, ver_report;
  double ver_f0 = 0.0, ver_tol = 1e-7;
  int ver_grid = 9;
  ver->add_option("--spline", ver_spline, "Input estimate JSON");
  ver->add_option("--measurements", ver_meas, "Input measurements CSV");
  ver->add_option("--f0", ver_f0,
                  "Sampling rate of the measurements (0 = infer from file)");
  ver->add_option("--report", ver_report, "Output residual report JSON");
  ver->add_option("--tolerance", ver_tol,
                  "Verification threshold on residuals (default 1e-7)");
  ver->add_option("--grid-per-interval", ver_grid,
                  "Interior residual samples per interval (default 9)");

  // --- compare -------------------------------------------------------------
  auto* cmp = app.add_subcommand(
      "compare", "Score estimation methods against a truth trajectory");
  std::string cmp_config;
  cmp->add_option("--config", cmp_config, "JSON config file");
  ModelFlags cmp_model;
  cmp_model.attach(cmp);
  std::string cmp_meas, cmp_truth, cmp_metrics, cmp_dense;
  double cmp_f0 = 0.0;
  int cmp_nodes = 5;
  std::vector<std::string> cmp_methods;
  cmp->add_option("--measurements", cmp_meas, "Input measurements CSV");
  cmp->add_option("--f0", cmp_f0,
                  "Sampling rate of the measurements (0 = infer from file)");
  cmp->add_option("--truth", cmp_truth, "Ground-truth trajectory CSV");
  cmp->add_option("--methods", cmp_methods,
                  "Methods to score: optimal-spline, cubic-spline, "
                  "finite-difference")
      ->delimiter(',');
  cmp->add_option("--metrics", cmp_metrics, "Output metrics JSON");
  cmp->add_option("--dense-prefix", cmp_dense,
                  "Write per-method estimate CSVs with this path prefix");
  cmp->add_option("--nodes-per-interval", cmp_nodes,
                  "Collocation nodes per interval for nonlinear models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(sim)) {
      return run_simulate(sim_model, load_config(sim_config), sim, sim_dt,
                          sim_t0, sim_tf, sim_x0, sim_f0, sim_seed, sim_scheme,
                          sim_traj, sim_meas, sim_manifest);
    }
    if (app.got_subcommand(enr)) {
      return run_enrich(enr_model, load_config(enr_config), enr, enr_meas,
                        enr_f0, enr_spline, enr_dense, enr_ppi, enr_nodes);
    }
    if (app.got_subcommand(ver)) {
      return run_verify(ver_model, load_config(ver_config), ver, ver_spline,
                        ver_meas, ver_f0, ver_report, ver_tol, ver_grid);
    }
    if (app.got_subcommand(cmp)) {
      return run_compare(cmp_model, load_config(cmp_config), cmp, cmp_meas,
                         cmp_f0, cmp_truth, cmp_methods, cmp_metrics, cmp_dense,
                         cmp_nodes);
    }
  } catch (const std::logic_error& e) {
    // invalid_argument, domain_error, out_of_range: validation failures.
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    // runtime_error, I/O and config problems.
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
