#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "selftest.hpp"
#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"
#include "skillscale/lab.hpp"
#include "skillscale/metrics.hpp"
#include "skillscale/mlp.hpp"
#include "skillscale/multilinear.hpp"
#include "skillscale/parity_data.hpp"
#include "skillscale/scaling.hpp"

namespace skillscale::cli {
namespace fs = std::filesystem;
namespace {

struct GridFlags {
  std::optional<double> lo;
  std::optional<double> hi;
  int points = 0;

  void add_to(CLI::App* sub) {
    sub->add_option("--lo", lo, "Smallest grid value");
    sub->add_option("--hi", hi, "Largest grid value");
    sub->add_option("--points", points, "Number of log-spaced grid points")->check(CLI::PositiveNumber);
  }
  std::vector<double> grid(double default_lo, double default_hi, int default_points,
                           bool integral = false) const {
    auto g = log_grid(lo.value_or(default_lo), hi.value_or(default_hi),
                      points > 0 ? points : default_points);
    if (integral) {
      for (auto& x : g) x = std::round(x);
      g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    return g;
  }
};

class Output {
 public:
  explicit Output(const CliConfig& cfg) : dir_(cfg.out_dir) {
    fs::create_directories(dir_);
    write("config.txt", to_text(cfg));
  }
  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    return out;
  }
  void write(const std::string& name, const std::string& text) const { open(name) << text; }
  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string first_line(const std::string& text) {
  auto line = text.substr(0, text.find('\n'));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string fit_report(const PowerLawFit& fit) {
  std::ostringstream os;
  os << "exponent=" << csv::format(fit.exponent) << '\n'
     << "prefactor=" << csv::format(fit.prefactor()) << '\n'
     << "r_squared=" << csv::format(fit.r_squared) << '\n'
     << "window_lo=" << csv::format(fit.window_lo) << '\n'
     << "window_hi=" << csv::format(fit.window_hi) << '\n'
     << "points=" << fit.points << '\n';
  return os.str();
}

std::string emergent_fit_report(const EmergentTimeFit& f) {
  std::ostringstream os;
  os << fit_report(f.fit);
  for (std::size_t k = 0; k < f.tau.size(); ++k) {
    os << "tau_" << k + 1 << '=' << csv::format(f.tau[k]) << '\n';
  }
  os << "excluded=";
  for (std::size_t j = 0; j < f.excluded.size(); ++j) os << (j ? ";" : "") << f.excluded[j];
  os << '\n';
  return os.str();
}

// Observations from either an emergence CSV (skill 1 only) or a
// `resource,R_over_S` CSV.
std::vector<Observation> read_observations(const std::string& path, double S) {
  const auto text = read_file(path);
  std::istringstream in(text);
  std::vector<Observation> obs;
  if (first_line(text) == "step,k,R,R_over_S") {
    const auto rec = read_emergence_csv(in, S);
    for (std::size_t r = 0; r < rec.size(); ++r) {
      obs.push_back({static_cast<double>(rec.steps[r]), rec.normalized(r, 1)});
    }
    return obs;
  }
  const auto table = csv::read(in, {"resource", "R_over_S"});
  for (const auto& row : table.rows) {
    obs.push_back({csv::parse_double(row[0]), csv::parse_double(row[1])});
  }
  return obs;
}

// Accepts a report file or inline `b2=...`, `D_c=...`, `N_c=...`, `r0=...`
// assignments separated by commas or newlines.
CalibrationResult parse_calibration(std::string text) {
  std::replace(text.begin(), text.end(), ',', '\n');
  CalibrationResult c;
  std::optional<Axis> kind;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("calibration entry '" + line + "' is not key=value");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    const auto set_kind = [&](Axis a) {
      if (kind && *kind != a) throw ConfigError("calibration mixes kinds");
      kind = a;
    };
    if (key == "b2") {
      set_kind(Axis::time);
      c.value = csv::parse_double(value);
    } else if (key == "D_c") {
      set_kind(Axis::data);
      c.value = csv::parse_double(value);
    } else if (key == "N_c") {
      set_kind(Axis::param);
      c.value = csv::parse_double(value);
    } else if (key == "r0") {
      c.r0 = csv::parse_double(value);
    } else if (key == "kind") {
      set_kind(axis_from_string(value));
    } else if (key != "residual" && key != "points") {
      throw ConfigError("unknown calibration key '" + key + "'");
    }
  }
  if (!kind || !(c.value > 0.0)) throw ConfigError("calibration needs b2, D_c or N_c");
  c.kind = *kind;
  return c;
}

int cmd_distribution(const CliConfig& cfg) {
  const Output out(cfg);
  const auto dist = make_skill_distribution(cfg.alpha, cfg.n_s);
  auto file = out.open("distribution.csv");
  csv::Writer w(file, {"k", "P"});
  for (int k = 1; k <= dist.n_s; ++k) w.row(k, dist.weight(k));
  std::cout << "normalization A=" << csv::format(dist.norm_const) << '\n';
  return kExitOk;
}

struct SimulateFlags {
  std::string against;
  double t_end = 200.0;
  double dt = 0.01;
  double r0 = 0.01;
};

int cmd_simulate(const CliConfig& cfg, const SimulateFlags& f) {
  if (!f.against.empty() && f.against != "closed_form") {
    throw ConfigError("--against accepts only closed_form");
  }
  const Output out(cfg);
  const auto dist = make_skill_distribution(cfg.alpha, cfg.n_s);
  const auto p = DynamicsParams::uniform(cfg.S, cfg.eta, f.r0, cfg.n_s, cfg.b2);
  const auto traj = integrate_gradient_flow(p, dist.weights, MultilinearState::symmetric(p, cfg.n_s),
                                            f.t_end, f.dt);
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / f.dt)));
  Trajectory coarse;
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    if (j % stride == 0 || j + 1 == traj.times.size()) {
      coarse.times.push_back(traj.times[j]);
      coarse.states.push_back(traj.states[j]);
    }
  }
  auto file = out.open("trajectory.csv");
  write_trajectory_csv(file, coarse);
  if (f.against == "closed_form") {
    double worst = 0.0;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
      for (int k = 1; k <= cfg.n_s; ++k) {
        const double exact = analytic_skill_strength(p, k, dist.weight(k), traj.times[j]);
        worst = std::max(worst, std::abs(traj.states[j].strength(k) - exact) / p.S);
      }
    }
    const auto report = "max_deviation_over_S=" + csv::format(worst) + "\n";
    out.write("simulate_report.txt", report);
    std::cout << report;
  }
  return kExitOk;
}

struct TheoryFlags {
  std::string law;
  std::optional<double> alpha;
  int n_s = 100000;
  int N = 100000;
  double r = 0.01;
  GridFlags grid;
};

TheoryParams theory_params(const CliConfig& cfg, double alpha, int n_s, int N, double r) {
  TheoryParams tp;
  tp.alpha = alpha;
  tp.S = cfg.S;
  tp.r = r;
  tp.eta = cfg.eta;
  tp.n_s = n_s;
  tp.N = N;
  return tp;
}

int cmd_theory(const CliConfig& cfg, const TheoryFlags& f) {
  const Law law = law_from_string(f.law);
  const auto tp = theory_params(cfg, f.alpha.value_or(cfg.alpha), f.n_s, f.N, f.r);
  tp.validate();
  std::vector<double> grid;
  switch (law) {
    case Law::time: grid = f.grid.grid(1.0, 1e6, 61); break;
    case Law::data: grid = f.grid.grid(1e2, 1e6, 41, true); break;
    case Law::param: grid = f.grid.grid(10.0, 1e4, 31, true); break;
    case Law::compute: grid = f.grid.grid(1e2, 1e8, 49); break;
  }
  const auto curve = theory_curve(law, tp, grid);
  const Output out(cfg);
  auto file = out.open("theory_" + to_string(law) + ".csv");
  write_theory_csv(file, curve, law, tp.alpha);
  const auto report = prefactor_report(tp);
  out.write("prefactors.txt", report);
  std::cout << report;
  return kExitOk;
}

struct TrainFlags {
  std::optional<double> stop_above;
};

int cmd_train(const CliConfig& cfg, const TrainFlags& f) {
  const auto dist = make_skill_distribution(cfg.alpha, cfg.n_s);
  const auto spec = make_task_spec(cfg.n_s, cfg.n_b, cfg.m, cfg.seed);
  auto tc = cfg.train_config();
  tc.stop_when_all_above = f.stop_above;
  std::optional<Dataset> data;
  if (tc.data_mode == DataMode::fixed) data = sample_dataset(dist, spec, cfg.S, cfg.D, cfg.seed);
  const Output out(cfg);
  out.write("task_spec.json", task_spec_to_json(spec));
  const auto result = train_run(tc, dist, spec, cfg.S, data ? &*data : nullptr);
  {
    auto file = out.open("emergence.csv");
    write_emergence_csv(file, result.record);
  }
  {
    auto file = out.open("checkpoint.txt");
    save_checkpoint(file, result.model, cfg.seed, result.record.steps.back());
  }
  std::ostringstream report;
  report << "steps=" << result.record.steps.back() << '\n'
         << "final_loss=" << csv::format(result.record.losses.back()) << '\n';
  for (int k = 1; k <= cfg.n_s; ++k) {
    report << "R_over_S_" << k << '='
           << csv::format(result.record.normalized(result.record.size() - 1, k)) << '\n';
  }
  out.write("train_report.txt", report.str());
  std::cout << report.str();
  return kExitOk;
}

struct CalibrateFlags {
  std::string kind;
  std::string input;
  bool fit_r0 = false;
  double r0 = 0.05;
  std::optional<double> eta;
};

int cmd_calibrate(const CliConfig& cfg, const CalibrateFlags& f) {
  const Axis kind = axis_from_string(f.kind);
  const auto obs = read_observations(f.input, cfg.S);
  CalibrationOptions opt;
  opt.S = cfg.S;
  opt.eta = f.eta.value_or(cfg.lr);
  opt.r0 = f.r0;
  opt.fit_r0 = f.fit_r0;
  const auto calib = calibrate(kind, obs, opt);
  const Output out(cfg);
  const auto report = calibration_report(calib);
  out.write("calibration.txt", report);
  std::cout << report;
  return kExitOk;
}

struct PredictFlags {
  std::string calib;
  std::string calib_file;
  std::string axis;
  double r0 = 0.01;
  bool binomial = false;
  GridFlags grid;
};

int cmd_predict(const CliConfig& cfg, const PredictFlags& f) {
  if (f.calib.empty() == f.calib_file.empty()) {
    throw ConfigError("give exactly one of --calib and --calib-file");
  }
  const auto calib = parse_calibration(f.calib.empty() ? read_file(f.calib_file) : f.calib);
  const Axis axis = f.axis.empty() ? calib.kind : axis_from_string(f.axis);
  const auto dist = make_skill_distribution(cfg.alpha, cfg.n_s);
  const auto p = DynamicsParams::uniform(cfg.S, cfg.lr, f.r0, cfg.n_s, cfg.b2);
  std::vector<double> grid;
  switch (axis) {
    case Axis::time: grid = f.grid.grid(1.0, static_cast<double>(std::max<std::int64_t>(cfg.steps, 2)), 101); break;
    case Axis::data: grid = f.grid.grid(1.0, static_cast<double>(std::max<std::int64_t>(cfg.D, 2)), 61, true); break;
    case Axis::param: grid = f.grid.grid(1.0, static_cast<double>(cfg.n_s * calib.value), 41, true); break;
    case Axis::compute: throw ConfigError("predict has no compute axis");
  }
  PredictOptions opt;
  opt.binomial_average = f.binomial;
  const auto pred = predict_emergence(calib, dist, p, axis, grid, opt);
  SweepResult sr;
  sr.axis = axis;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double loss = 0.0;
    for (int k = 1; k <= cfg.n_s; ++k) {
      const double miss = 1.0 - pred.r_over_s[static_cast<std::size_t>(k - 1)][j];
      loss += 0.5 * cfg.S * cfg.S * dist.weight(k) * miss * miss;
    }
    for (int k = 1; k <= cfg.n_s; ++k) {
      sr.rows.push_back({grid[j], 0, k, pred.r_over_s[static_cast<std::size_t>(k - 1)][j], loss, loss});
    }
  }
  const Output out(cfg);
  auto file = out.open("prediction_" + to_string(axis) + ".csv");
  write_sweep_csv(file, sr);
  return kExitOk;
}

struct SweepFlags {
  std::string axis;
  int seeds = 0;
  int workers = 0;
  double r0 = 0.01;
  int theory_n_s = 100000;
  double theory_r = 0.01;
  GridFlags grid;
};

int cmd_sweep(const CliConfig& cfg, const SweepFlags& f) {
  const Axis axis = axis_from_string(f.axis);
  SweepConfig sc;
  sc.train = cfg.train_config();
  sc.alpha = cfg.alpha;
  sc.n_s = cfg.n_s;
  sc.n_b = cfg.n_b;
  sc.m = cfg.m;
  sc.S = cfg.S;
  sc.b2 = cfg.b2;
  sc.r0 = f.r0;
  sc.N_c = cfg.N_c;
  sc.workers = f.workers;
  sc.theory = theory_params(cfg, cfg.alpha, f.theory_n_s, f.theory_n_s, f.theory_r);
  switch (axis) {
    case Axis::time: break;
    case Axis::data: sc.grid = f.grid.grid(1e2, static_cast<double>(cfg.D), 7, true); break;
    case Axis::param: sc.grid = f.grid.grid(10.0, static_cast<double>(cfg.width), 7, true); break;
    case Axis::compute: sc.grid = f.grid.grid(1e2, 1e8, 25); break;
  }
  const int n_seeds = f.seeds > 0 ? f.seeds : (axis == Axis::param ? 50 : 10);
  std::vector<std::uint64_t> seeds;
  for (int j = 0; j < n_seeds; ++j) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(j));
  const auto result = run_sweep(axis, sc, seeds);
  const Output out(cfg);
  {
    auto file = out.open("sweep_" + to_string(axis) + ".csv");
    write_sweep_csv(file, result);
  }
  if (!result.failures.empty()) {
    auto file = out.open("failures.csv");
    csv::Writer w(file, {"resource", "seed", "message"});
    for (const auto& fail : result.failures) {
      auto msg = fail.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      w.row(fail.resource, static_cast<unsigned long long>(fail.seed), msg);
    }
    std::cerr << result.failures.size() << " sweep job(s) failed; see "
              << out.path("failures.csv").string() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

struct FitFlags {
  std::string input;
  double eps = 0.05;
  std::optional<double> lo;
  std::optional<double> hi;
};

int cmd_fit(const CliConfig& cfg, const FitFlags& f) {
  const auto text = read_file(f.input);
  std::istringstream in(text);
  std::string report;
  if (first_line(text) == "step,k,R,R_over_S") {
    report = emergent_fit_report(emergent_time_fit(read_emergence_csv(in, cfg.S), f.eps));
  } else {
    const auto curve = read_theory_csv(in);
    report = fit_report(fit_power_law(curve, f.lo.value_or(0.0),
                                      f.hi.value_or(std::numeric_limits<double>::infinity())));
  }
  const Output out(cfg);
  out.write("fit.txt", report);
  std::cout << report;
  return kExitOk;
}

int cmd_selftest(const CliConfig& cfg) {
  const auto results = run_selftest();
  std::ostringstream report;
  bool all = true;
  for (const auto& r : results) {
    report << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  const Output out(cfg);
  out.write("selftest.txt", report.str());
  std::cout << report.str();
  return all ? kExitOk : kExitNumeric;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Skill-based scaling-law toy models: theory curves, simulations and MLP runs"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out_dir;
  app.add_option("-c,--config", config_path, "key=value configuration file");
  app.add_option("-s,--set", overrides, "key=value override, repeatable");
  app.add_option("-o,--out", out_dir, "Output directory (default from $SKILLSCALE_OUT_DIR or ./out)");

  auto* distribution = app.add_subcommand("distribution", "Write the skill frequencies");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Integrate the multilinear gradient flow");
  simulate->add_option("--against", sim.against, "Compare with: closed_form");
  simulate->add_option("--t-end", sim.t_end, "Final time")->check(CLI::PositiveNumber);
  simulate->add_option("--dt", sim.dt, "RK4 step")->check(CLI::PositiveNumber);
  simulate->add_option("--r0", sim.r0, "Initial skill strength")->check(CLI::PositiveNumber);

  TheoryFlags th;
  auto* theory = app.add_subcommand("theory", "Theory loss curve and prefactor report");
  theory->add_option("--law", th.law, "time, data, param or compute")->required();
  theory->add_option("--alpha", th.alpha, "Zipf exponent (overrides config)");
  theory->add_option("--n-s", th.n_s, "Number of skills")->check(CLI::PositiveNumber);
  theory->add_option("--N", th.N, "Active skills (time and compute laws)")->check(CLI::PositiveNumber);
  theory->add_option("--r", th.r, "Initial skill strength")->check(CLI::PositiveNumber);
  th.grid.add_to(theory);

  TrainFlags tr;
  auto* train = app.add_subcommand("train", "Train the MLP and record skill strengths");
  train->add_option("--stop-above", tr.stop_above, "Stop once every R_k/S reaches this value");

  CalibrateFlags cal;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit b2, D_c or N_c on one-skill data");
  calibrate_cmd->add_option("--kind", cal.kind, "time, data or param")->required();
  calibrate_cmd->add_option("--input", cal.input, "Emergence CSV or resource,R_over_S CSV")->required();
  calibrate_cmd->add_flag("--fit-r0", cal.fit_r0, "Time: fit R(0) jointly");
  calibrate_cmd->add_option("--r0", cal.r0, "Time: R(0) when not fitted")->check(CLI::PositiveNumber);
  calibrate_cmd->add_option("--eta", cal.eta, "Time: learning rate (default: lr)");

  PredictFlags pr;
  auto* predict = app.add_subcommand("predict", "Predict R_k/S curves from a calibration");
  predict->add_option("--calib", pr.calib, "Inline calibration, e.g. b2=0.04545");
  predict->add_option("--calib-file", pr.calib_file, "Calibration report file");
  predict->add_option("--axis", pr.axis, "time, data or param (default: calibration kind)");
  predict->add_option("--r0", pr.r0, "Time: R_k(0)")->check(CLI::PositiveNumber);
  predict->add_flag("--binomial", pr.binomial, "Data: average over binomial d_k");
  pr.grid.add_to(predict);

  SweepFlags sw;
  auto* sweep = app.add_subcommand("sweep", "Run seeds over a resource grid");
  sweep->add_option("--axis", sw.axis, "time, data, param or compute")->required();
  sweep->add_option("--seeds", sw.seeds, "Number of seeds starting at config seed");
  sweep->add_option("--workers", sw.workers, "Worker threads (0: hardware)");
  sweep->add_option("--r0", sw.r0, "Time theory column: R(0)")->check(CLI::PositiveNumber);
  sweep->add_option("--theory-n-s", sw.theory_n_s, "Compute axis: number of skills");
  sweep->add_option("--theory-r", sw.theory_r, "Compute axis: initial strength");
  sw.grid.add_to(sweep);

  FitFlags fi;
  auto* fit = app.add_subcommand("fit", "Power-law fit of an emergence or theory CSV");
  fit->add_option("--input", fi.input, "Emergence CSV or theory CSV")->required();
  fit->add_option("--eps", fi.eps, "Emergence threshold on R/S");
  fit->add_option("--lo", fi.lo, "Theory CSV: smallest resource fitted");
  fit->add_option("--hi", fi.hi, "Theory CSV: largest resource fitted");

  auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto cfg = parse_config(config_path, overrides);
    if (out_dir) cfg.out_dir = *out_dir;
    if (distribution->parsed()) return cmd_distribution(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg, sim);
    if (theory->parsed()) return cmd_theory(cfg, th);
    if (train->parsed()) return cmd_train(cfg, tr);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cfg, cal);
    if (predict->parsed()) return cmd_predict(cfg, pr);
    if (sweep->parsed()) return cmd_sweep(cfg, sw);
    if (fit->parsed()) return cmd_fit(cfg, fi);
    if (selftest->parsed()) return cmd_selftest(cfg);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InsufficientDataError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace skillscale::cli
