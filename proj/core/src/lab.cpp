#include "skillscale/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"
#include "skillscale/special.hpp"

namespace skillscale {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double logistic_fraction(double S, double r0, double rate_t) {
  return 1.0 / (1.0 + (S / r0 - 1.0) * std::exp(-rate_t));
}

// Grid search over [lo, hi] followed by golden-section refinement between
// the best grid point's neighbours.
MinimizeResult grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                                int n, double tol) {
  double best_x = lo;
  double best_v = std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / (n - 1);
  for (int j = 0; j < n; ++j) {
    const double x = lo + step * j;
    const double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  const double a = std::max(lo, best_x - step);
  const double b = std::min(hi, best_x + step);
  auto refined = golden_section_minimize(f, a, b, tol);
  if (refined.value <= best_v) return refined;
  return {best_x, best_v};
}

CalibrationResult calibrate_time(std::span<const Observation> obs, const CalibrationOptions& o) {
  std::vector<Observation> used;
  for (const auto& ob : obs) {
    if (ob.r_over_s >= o.rise_lo && ob.r_over_s <= o.rise_hi) used.push_back(ob);
  }
  if (used.size() < 4) {
    throw InsufficientDataError("time calibration needs at least 4 points with R/S in [" +
                                csv::format(o.rise_lo) + ", " + csv::format(o.rise_hi) + "]");
  }
  if (!(o.S > 0.0 && o.eta > 0.0)) throw DomainError("calibration needs S, eta > 0");
  const auto mse = [&](double b2, double r0) {
    double ss = 0.0;
    for (const auto& ob : used) {
      const double e = logistic_fraction(o.S, r0, 2.0 * o.eta * b2 * o.S * ob.resource) -
                       ob.r_over_s;
      ss += e * e;
    }
    return ss / static_cast<double>(used.size());
  };
  const auto fit_b2 = [&](double r0) {
    return grid_then_golden([&](double lb) { return mse(std::pow(10.0, lb), r0); }, -8.0, 0.0,
                            161, 1e-10);
  };
  CalibrationResult res;
  res.kind = Axis::time;
  res.points = static_cast<int>(used.size());
  if (!o.fit_r0) {
    if (!(o.r0 > 0.0 && o.r0 < o.S)) throw DomainError("r0 must lie in (0, S)");
    const auto best = fit_b2(o.r0);
    res.value = std::pow(10.0, best.x);
    res.residual = best.value;
    res.r0 = o.r0;
    return res;
  }
  const double hi = std::log10(0.5);
  const auto profile = grid_then_golden(
      [&](double lr) { return fit_b2(o.S * std::pow(10.0, lr)).value; }, -12.0, hi, 49, 1e-8);
  res.r0 = o.S * std::pow(10.0, profile.x);
  const auto best = fit_b2(res.r0);
  res.value = std::pow(10.0, best.x);
  res.residual = best.value;
  return res;
}

template <typename Model>
CalibrationResult calibrate_integer(Axis kind, std::span<const Observation> obs,
                                    std::int64_t upper, Model&& model) {
  CalibrationResult res;
  res.kind = kind;
  res.points = static_cast<int>(obs.size());
  res.residual = std::numeric_limits<double>::infinity();
  for (std::int64_t v = 1; v <= upper; ++v) {
    double ss = 0.0;
    for (const auto& ob : obs) {
      const double e = model(ob.resource, v) - ob.r_over_s;
      ss += e * e;
    }
    ss /= static_cast<double>(obs.size());
    if (ss < res.residual) {
      res.residual = ss;
      res.value = static_cast<double>(v);
    }
  }
  return res;
}

std::int64_t to_count(double x) {
  if (!(x >= 0.0)) throw DomainError("resource counts must be nonnegative");
  return static_cast<std::int64_t>(std::floor(x + 1e-9));
}

// E[S(1 - sqrt(1 - d/D_c))] for d ~ Binomial(D, p), as a fraction of S.
double binomial_dc_shot(std::int64_t D, double p, std::int64_t D_c) {
  if (p >= 1.0) return D >= D_c ? 1.0 : dc_shot_strength(1.0, D, D_c);
  if (D == 0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgd = std::lgamma(static_cast<double>(D) + 1.0);
  double below_mass = 0.0;
  double mean = 0.0;
  const std::int64_t top = std::min(D, D_c - 1);
  for (std::int64_t d = 0; d <= top; ++d) {
    const double dd = static_cast<double>(d);
    const double lpmf = lgd - std::lgamma(dd + 1.0) -
                        std::lgamma(static_cast<double>(D - d) + 1.0) + dd * lp +
                        static_cast<double>(D - d) * lq;
    const double pmf = std::exp(lpmf);
    below_mass += pmf;
    mean += pmf * dc_shot_strength(1.0, d, D_c);
  }
  return mean + std::max(0.0, 1.0 - below_mass);
}

}  // namespace

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::time: return "time";
    case Axis::data: return "data";
    case Axis::param: return "param";
    case Axis::compute: return "compute";
  }
  return "unknown";
}

Axis axis_from_string(std::string_view name) {
  if (name == "time") return Axis::time;
  if (name == "data") return Axis::data;
  if (name == "param") return Axis::param;
  if (name == "compute") return Axis::compute;
  throw ConfigError("unknown axis '" + std::string(name) + "'");
}

CalibrationResult calibrate(Axis kind, std::span<const Observation> observations,
                            const CalibrationOptions& options) {
  switch (kind) {
    case Axis::time:
      return calibrate_time(observations, options);
    case Axis::data: {
      if (observations.size() < 4) throw InsufficientDataError("data calibration needs 4 points");
      double max_d = 1.0;
      for (const auto& ob : observations) max_d = std::max(max_d, ob.resource);
      const auto upper = static_cast<std::int64_t>(std::ceil(10.0 * max_d)) + 10;
      return calibrate_integer(kind, observations, upper, [](double d, std::int64_t dc) {
        return dc_shot_strength(1.0, to_count(d), dc);
      });
    }
    case Axis::param: {
      if (observations.size() < 4) throw InsufficientDataError("param calibration needs 4 points");
      double max_n = 1.0;
      for (const auto& ob : observations) max_n = std::max(max_n, ob.resource);
      return calibrate_integer(kind, observations, to_count(max_n),
                               [](double n, std::int64_t nc) {
                                 return nc_param_strength(1.0, to_count(n), nc, 1);
                               });
    }
    case Axis::compute:
      break;
  }
  throw ConfigError("no calibration is defined for the compute axis");
}

Prediction predict_emergence(const CalibrationResult& calib, const SkillDistribution& dist,
                             const DynamicsParams& p, Axis axis, std::span<const double> grid,
                             const PredictOptions& options) {
  if (calib.kind != axis) {
    throw ConfigError("calibration of kind " + to_string(calib.kind) +
                      " cannot predict along the " + to_string(axis) + " axis");
  }
  for (double x : grid) {
    if (!(x >= 0.0)) throw DomainError("prediction grid must be nonnegative");
  }
  Prediction pred;
  pred.axis = axis;
  pred.grid.assign(grid.begin(), grid.end());
  pred.r_over_s.assign(static_cast<std::size_t>(dist.n_s), std::vector<double>(grid.size()));
  DynamicsParams cal = p;
  if (axis == Axis::time) {
    cal.b2 = calib.value;
    if (calib.r0 > 0.0) cal.r0.assign(static_cast<std::size_t>(dist.n_s), calib.r0);
  }
  for (int k = 1; k <= dist.n_s; ++k) {
    auto& row = pred.r_over_s[static_cast<std::size_t>(k - 1)];
    const double pk = dist.weight(k);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x = grid[j];
      switch (axis) {
        case Axis::time:
          row[j] = analytic_skill_strength(cal, k, pk, x) / cal.S;
          break;
        case Axis::data: {
          const auto dc = static_cast<std::int64_t>(std::llround(calib.value));
          row[j] = options.binomial_average
                       ? binomial_dc_shot(to_count(x), pk, dc)
                       : dc_shot_strength(1.0, to_count(x * pk), dc);
          break;
        }
        case Axis::param:
          row[j] = nc_param_strength(1.0, to_count(x),
                                     static_cast<std::int64_t>(std::llround(calib.value)), k);
          break;
        case Axis::compute:
          throw ConfigError("no prediction is defined for the compute axis");
      }
    }
  }
  return pred;
}

double predicted_emergence_time(const CalibrationResult& calib, const SkillDistribution& dist,
                                const DynamicsParams& p, int k, double eps) {
  if (calib.kind != Axis::time) throw ConfigError("emergence time needs a time calibration");
  const double r0 = calib.r0 > 0.0 ? calib.r0 : p.initial(k);
  if (!(eps > r0 / p.S && eps < 1.0)) throw DomainError("eps must lie in (R(0)/S, 1)");
  return std::log((p.S / r0 - 1.0) / (1.0 / eps - 1.0)) /
         (2.0 * p.eta * calib.value * dist.weight(k) * p.S);
}

SweepResult run_sweep(Axis axis, const SweepConfig& config, std::span<const std::uint64_t> seeds) {
  if (seeds.empty() && axis != Axis::compute) throw ConfigError("sweep needs at least one seed");
  const auto dist = make_skill_distribution(config.alpha, config.n_s);

  struct Job {
    double resource = 0.0;
    std::uint64_t seed = 0;
  };
  std::vector<Job> jobs;
  switch (axis) {
    case Axis::time:
      for (auto s : seeds) jobs.push_back({0.0, s});
      break;
    case Axis::data:
    case Axis::param:
      if (config.grid.empty()) throw ConfigError("sweep grid is empty");
      for (double x : config.grid) {
        for (auto s : seeds) jobs.push_back({x, s});
      }
      break;
    case Axis::compute:
      if (config.grid.empty()) throw ConfigError("sweep grid is empty");
      for (double n : config.n_grid) jobs.push_back({n, 0});
      break;
  }

  TheoryParams tp = config.theory;
  tp.alpha = config.alpha;
  std::vector<CurvePoint> envelope;
  if (axis == Axis::compute) envelope = theory_curve(Law::compute, tp, config.grid);

  const auto run_job = [&](const Job& job) {
    std::vector<SweepRow> rows;
    TrainConfig cfg = config.train;
    cfg.seed = job.seed;
    switch (axis) {
      case Axis::time: {
        const auto spec = make_task_spec(config.n_s, config.n_b, config.m, job.seed);
        cfg.data_mode = DataMode::online;
        const auto result = train_run(cfg, dist, spec, config.S);
        const auto p = DynamicsParams::uniform(config.S, cfg.lr, config.r0, config.n_s, config.b2);
        const auto& rec = result.record;
        for (std::size_t r = 0; r < rec.size(); ++r) {
          const double t = static_cast<double>(rec.steps[r]);
          const double theory = analytic_total_loss(p, dist, config.n_s, {}, t);
          for (int k = 1; k <= config.n_s; ++k) {
            rows.push_back({t, job.seed, k, rec.normalized(r, k), rec.losses[r], theory});
          }
        }
        break;
      }
      case Axis::data: {
        const auto spec = make_task_spec(config.n_s, config.n_b, config.m, job.seed);
        const auto data = sample_dataset(dist, spec, config.S, to_count(job.resource), job.seed);
        cfg.data_mode = DataMode::fixed;
        const auto result = train_run(cfg, dist, spec, config.S, &data);
        const auto& rec = result.record;
        const double theory = data_loss(dist, config.S, job.resource);
        for (int k = 1; k <= config.n_s; ++k) {
          rows.push_back({job.resource, job.seed, k, rec.normalized(rec.size() - 1, k),
                          rec.losses.back(), theory});
        }
        break;
      }
      case Axis::param: {
        const auto spec = make_task_spec(config.n_s, config.n_b, config.m, job.seed);
        cfg.width = static_cast<int>(to_count(job.resource));
        cfg.optimizer = Optimizer::adam;
        cfg.data_mode = DataMode::online;
        const auto result = train_run(cfg, dist, spec, config.S);
        const auto& rec = result.record;
        const double theory = param_loss(
            dist, config.S, std::floor(job.resource / static_cast<double>(config.N_c)));
        for (int k = 1; k <= config.n_s; ++k) {
          rows.push_back({job.resource, job.seed, k, rec.normalized(rec.size() - 1, k),
                          rec.losses.back(), theory});
        }
        break;
      }
      case Axis::compute: {
        const auto cdist = make_skill_distribution(tp.alpha, tp.n_s);
        TheoryParams local = tp;
        local.N = static_cast<int>(to_count(job.resource));
        for (std::size_t j = 0; j < config.grid.size(); ++j) {
          const double c = config.grid[j];
          const double t = c / job.resource;
          if (t < 1.0) continue;
          double learned = 0.0;
          const double log_m = std::log(tp.S / tp.r - 1.0);
          for (int k = std::min(local.N, tp.n_s); k >= 1; --k) {
            const double pk = cdist.weight(k);
            const double x = 2.0 * tp.eta * pk * tp.S * t - log_m;
            learned += pk / (1.0 + std::exp(-std::min(x, 700.0)));
          }
          const auto it = std::find_if(envelope.begin(), envelope.end(),
                                       [&](const CurvePoint& pt) { return pt.resource == c; });
          rows.push_back({c, 0, 0, learned, time_loss(local, cdist, t),
                          it == envelope.end() ? kNaN : it->loss});
        }
        break;
      }
    }
    return rows;
  };

  std::vector<std::vector<SweepRow>> slots(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        slots[j] = run_job(jobs[j]);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
  const auto n_workers = static_cast<std::size_t>(
      std::min<std::size_t>(config.workers > 0 ? static_cast<unsigned>(config.workers) : hw,
                            jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  SweepResult result;
  result.axis = axis;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!errors[j].empty()) {
      result.failures.push_back({jobs[j].resource, jobs[j].seed, errors[j]});
      continue;
    }
    result.rows.insert(result.rows.end(), slots[j].begin(), slots[j].end());
  }
  if (axis == Axis::compute) {
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const SweepRow& x, const SweepRow& y) { return x.resource < y.resource; });
  }
  result.meta["axis"] = to_string(axis);
  result.meta["alpha"] = csv::format(config.alpha);
  result.meta["n_s"] = std::to_string(config.n_s);
  result.meta["S"] = csv::format(config.S);
  result.meta["jobs"] = std::to_string(jobs.size());
  result.meta["failures"] = std::to_string(result.failures.size());
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  csv::Writer w(out, {"axis", "resource", "seed", "k", "R_over_S", "loss", "theory_loss"});
  const auto axis = to_string(result.axis);
  for (const auto& r : result.rows) {
    w.row(axis, r.resource, static_cast<unsigned long long>(r.seed), r.k, r.r_over_s, r.loss,
          r.theory_loss);
  }
}

SweepResult read_sweep_csv(std::istream& in) {
  const auto table =
      csv::read(in, {"axis", "resource", "seed", "k", "R_over_S", "loss", "theory_loss"});
  SweepResult result;
  const auto parse_maybe_nan = [](const std::string& s) {
    return s == "nan" || s == "-nan" ? kNaN : csv::parse_double(s);
  };
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& f = table.rows[j];
    const Axis axis = axis_from_string(f[0]);
    if (j == 0) result.axis = axis;
    if (axis != result.axis) throw ConfigError("sweep CSV mixes axes");
    SweepRow r;
    r.resource = csv::parse_double(f[1]);
    r.seed = static_cast<std::uint64_t>(csv::parse_int(f[2]));
    r.k = static_cast<int>(csv::parse_int(f[3]));
    r.r_over_s = parse_maybe_nan(f[4]);
    r.loss = parse_maybe_nan(f[5]);
    r.theory_loss = parse_maybe_nan(f[6]);
    result.rows.push_back(r);
  }
  return result;
}

EmergentTimeFit emergent_time_fit(const EmergenceRecord& record, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  EmergentTimeFit out;
  out.tau.assign(static_cast<std::size_t>(record.n_s), kNaN);
  std::vector<CurvePoint> points;
  for (int k = 1; k <= record.n_s; ++k) {
    double tau = kNaN;
    if (record.size() > 0 && record.normalized(0, k) < eps) {
      for (std::size_t r = 1; r < record.size(); ++r) {
        const double hi = record.normalized(r, k);
        if (hi >= eps) {
          const double lo = record.normalized(r - 1, k);
          const double t0 = static_cast<double>(record.steps[r - 1]);
          const double t1 = static_cast<double>(record.steps[r]);
          tau = t0 + (eps - lo) / (hi - lo) * (t1 - t0);
          break;
        }
      }
    }
    if (std::isnan(tau) || !(tau > 0.0)) {
      out.excluded.push_back(k);
      continue;
    }
    out.tau[static_cast<std::size_t>(k - 1)] = tau;
    points.push_back({static_cast<double>(k), tau});
  }
  if (points.size() < 3) {
    throw InsufficientDataError("emergent-time fit needs at least 3 skills crossing R/S = " +
                                csv::format(eps) + ", got " + std::to_string(points.size()));
  }
  out.fit = fit_power_law(points, 0.0, std::numeric_limits<double>::infinity(), 3);
  return out;
}

std::string calibration_report(const CalibrationResult& calib) {
  std::ostringstream os;
  os << "kind=" << to_string(calib.kind) << '\n';
  switch (calib.kind) {
    case Axis::time: os << "b2=" << csv::format(calib.value) << '\n'
                        << "r0=" << csv::format(calib.r0) << '\n'; break;
    case Axis::data: os << "D_c=" << csv::format(calib.value) << '\n'; break;
    case Axis::param: os << "N_c=" << csv::format(calib.value) << '\n'; break;
    case Axis::compute: break;
  }
  os << "residual=" << csv::format(calib.residual) << '\n'
     << "points=" << calib.points << '\n';
  return os.str();
}

}  // namespace skillscale
