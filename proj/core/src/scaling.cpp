#include "skillscale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"
#include "skillscale/special.hpp"

namespace skillscale {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// P(k) plus suffix sums so that sum_{k>N} P(k) is O(1).
struct LossTables {
  SkillDistribution dist;
  std::vector<double> tail;  // tail[N] = sum_{k>N} P(k), N = 0..n_s

  explicit LossTables(SkillDistribution d) : dist(std::move(d)) {
    tail.assign(dist.weights.size() + 1, 0.0);
    for (std::size_t k = dist.weights.size(); k-- > 0;) tail[k] = tail[k + 1] + dist.weights[k];
  }

  double tail_after(double N) const {
    if (N <= 0.0) return tail[0];
    const auto n = static_cast<std::size_t>(std::floor(N));
    return n >= dist.weights.size() ? 0.0 : tail[n];
  }
};

// One skill's remaining loss fraction 1/(1 + e^{2 eta P S T}/M)^2.
double unlearned_fraction(double rate_times_t, double log_m) {
  const double x = rate_times_t - log_m;
  if (x > 700.0) return 0.0;
  const double d = 1.0 + std::exp(x);
  return 1.0 / (d * d);
}

double time_loss_tables(const TheoryParams& tp, const LossTables& t, double N, double T) {
  const double log_m = std::log(tp.S / tp.r - 1.0);
  const auto active = static_cast<std::size_t>(
      std::clamp(std::floor(N), 0.0, static_cast<double>(t.dist.weights.size())));
  double sum = 0.0;
  for (std::size_t k = active; k-- > 0;) {
    const double p = t.dist.weights[k];
    sum += p * unlearned_fraction(2.0 * tp.eta * p * tp.S * T, log_m);
  }
  return 0.5 * tp.S * tp.S * (sum + t.tail_after(N));
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("empty resource grid");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] >= 0.0) || (j > 0 && !(grid[j] > grid[j - 1]))) {
      throw DomainError("resource grid must be nonnegative and increasing");
    }
  }
}

}  // namespace

std::string to_string(Law law) {
  switch (law) {
    case Law::time: return "time";
    case Law::data: return "data";
    case Law::param: return "param";
    case Law::compute: return "compute";
  }
  return "unknown";
}

Law law_from_string(std::string_view name) {
  if (name == "time") return Law::time;
  if (name == "data") return Law::data;
  if (name == "param") return Law::param;
  if (name == "compute") return Law::compute;
  throw ConfigError("unknown law '" + std::string(name) + "'");
}

void TheoryParams::validate() const {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(S > 0.0)) throw DomainError("S must be positive");
  if (!(r > 0.0 && r < S)) throw DomainError("r must lie in (0, S)");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (n_s < 1) throw DomainError("n_s must be positive");
  if (N < 0) throw DomainError("N must be nonnegative");
  if (lambda && !(*lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(gamma_ratio >= 0.0 && gamma_ratio < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  if (!(mu >= 0.0)) throw DomainError("mu must be nonnegative");
}

double law_exponent(Law law, double alpha) {
  switch (law) {
    case Law::time:
    case Law::data: return -alpha / (alpha + 1.0);
    case Law::param: return -alpha;
    case Law::compute: return -alpha / (alpha + 2.0);
  }
  return 0.0;
}

double time_prefactor(const TheoryParams& tp, double lambda) {
  tp.validate();
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const double a = tp.alpha;
  const double z = zeta(a + 1.0);
  const double p = 1.0 / (a + 1.0);
  const double m = tp.S / tp.r - 1.0;
  const double half_s2 = 0.5 * tp.S * tp.S;
  const auto phi = [&](double u) {
    const double x = 2.0 * u - std::log(m);
    if (x > 700.0) return 0.0;
    const double d = 1.0 + std::exp(x);
    return half_s2 / (d * d);
  };
  const double u0 = std::isinf(lambda) ? 0.0 : std::pow(lambda, -(a + 1.0)) / z;
  // Past the knee at ln(m)/2 the integrand decays like e^{-4u}; this upper
  // limit leaves a tail below 1e-12.
  const double knee = 0.5 * std::log(m);
  const double upper = std::max(u0, knee) + 0.25 * std::log(half_s2 * 1e12 + 1.0) + 1.0;
  double integral = 0.0;
  if (u0 < upper) {
    // u = v^{1/(1-p)} removes the u^{-p} endpoint singularity.
    const double q = 1.0 / (1.0 - p);
    const auto g = [&](double v) { return q * phi(std::pow(v, q)); };
    integral = integrate(g, std::pow(u0, 1.0 - p), std::pow(upper, 1.0 - p), 1e-9).value;
  }
  double result = std::pow(z, -p) / (a + 1.0) * integral;
  if (!std::isinf(lambda)) result += tp.S * tp.S / (2.0 * a * z) * std::pow(lambda, -a);
  return result;
}

double time_prefactor_small_r(const TheoryParams& tp) {
  tp.validate();
  const double a = tp.alpha;
  const double estimate = std::pow(std::log((tp.S - tp.r) / tp.r), a / (a + 1.0)) *
                          std::pow(2.0, 1.0 / (a + 1.0)) * tp.S * tp.S * (a + 1.0) / (4.0 * a);
  return std::pow(zeta(a + 1.0), -1.0 / (a + 1.0)) / (a + 1.0) * estimate;
}

double theory_prefactor(Law law, const TheoryParams& tp) {
  tp.validate();
  const double a = tp.alpha;
  const double z = zeta(a + 1.0);
  const auto ignored = [&](bool present, const char* name) {
    if (present) warn(std::string(name) + " is ignored by the " + to_string(law) + " law");
  };
  switch (law) {
    case Law::time:
      ignored(tp.gamma_ratio != 0.0, "gamma_ratio");
      ignored(tp.mu != 0.0, "mu");
      return time_prefactor(tp, tp.lambda.value_or(kInf));
    case Law::data: {
      ignored(tp.lambda.has_value(), "lambda");
      ignored(tp.gamma_ratio != 0.0, "gamma_ratio");
      const double s = a / (a + 1.0);
      const double sr = tp.S - tp.r;
      double value =
          sr * sr * std::pow(z, -1.0 / (a + 1.0)) / (2.0 * (a + 1.0)) * inc_gamma_upper(s, tp.mu / z);
      if (tp.mu > 0.0) value += tp.S * tp.S * std::pow(tp.mu, s) / (2.0 * a * z);
      return value;
    }
    case Law::param:
      ignored(tp.lambda.has_value(), "lambda");
      ignored(tp.mu != 0.0, "mu");
      return tp.S * tp.S * (1.0 - std::pow(tp.gamma_ratio, a)) / (2.0 * a * z);
    case Law::compute: {
      ignored(tp.gamma_ratio != 0.0, "gamma_ratio");
      ignored(tp.mu != 0.0, "mu");
      const auto at = [&](double lam) {
        return time_prefactor(tp, std::pow(lam, (a + 2.0) / (a + 1.0))) *
               std::pow(lam, a / (a + 1.0));
      };
      if (tp.lambda) return at(*tp.lambda);
      const auto best = golden_section_minimize(
          [&](double log10_lam) { return at(std::pow(10.0, log10_lam)); }, -3.0, 3.0, 1e-6);
      return best.value;
    }
  }
  return 0.0;
}

double time_loss(const TheoryParams& tp, const SkillDistribution& dist, double T) {
  tp.validate();
  return time_loss_tables(tp, LossTables(dist), tp.N, T);
}

double data_loss(const SkillDistribution& dist, double S, double D) {
  if (!(D >= 0.0)) throw DomainError("D must be nonnegative");
  double sum = 0.0;
  for (auto it = dist.weights.rbegin(); it != dist.weights.rend(); ++it) {
    const double p = *it;
    if (D == 0.0) {
      sum += p;
    } else if (p < 1.0) {
      sum += p * std::exp(D * std::log1p(-p));
    }
  }
  return 0.5 * S * S * sum;
}

double param_loss(const SkillDistribution& dist, double S, double N) {
  if (!(N >= 0.0)) throw DomainError("N must be nonnegative");
  const auto first = static_cast<std::size_t>(
      std::min(std::floor(N), static_cast<double>(dist.weights.size())));
  double sum = 0.0;
  for (std::size_t k = dist.weights.size(); k-- > first;) sum += dist.weights[k];
  return 0.5 * S * S * sum;
}

std::vector<double> default_compute_n_grid() {
  return {10, 20, 50, 70, 100, 200, 500, 700, 1000, 2000, 5000, 10000};
}

std::vector<ComputeCurve> compute_family(const TheoryParams& tp, std::span<const double> n_grid,
                                         std::span<const double> c_grid, double t_min,
                                         double t_max) {
  tp.validate();
  check_grid(c_grid);
  const LossTables tables(make_skill_distribution(tp.alpha, tp.n_s));
  std::vector<ComputeCurve> family;
  for (double n : n_grid) {
    if (!(n > 0.0)) throw DomainError("compute family needs positive N");
    ComputeCurve curve{n, {}};
    for (double c : c_grid) {
      const double t = c / n;
      if (t < t_min || t > t_max) continue;
      curve.points.push_back({c, time_loss_tables(tp, tables, n, t)});
    }
    family.push_back(std::move(curve));
  }
  return family;
}

std::vector<CurvePoint> compute_envelope(std::span<const ComputeCurve> family) {
  std::vector<CurvePoint> all;
  for (const auto& curve : family) all.insert(all.end(), curve.points.begin(), curve.points.end());
  std::sort(all.begin(), all.end(), [](const CurvePoint& x, const CurvePoint& y) {
    return x.resource < y.resource || (x.resource == y.resource && x.loss < y.loss);
  });
  std::vector<CurvePoint> envelope;
  for (const auto& pt : all) {
    if (envelope.empty() || envelope.back().resource != pt.resource) envelope.push_back(pt);
  }
  return envelope;
}

std::vector<CurvePoint> theory_curve(Law law, const TheoryParams& tp,
                                     std::span<const double> grid) {
  tp.validate();
  check_grid(grid);
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  switch (law) {
    case Law::time: {
      const LossTables tables(make_skill_distribution(tp.alpha, tp.n_s));
      for (double t : grid) curve.push_back({t, time_loss_tables(tp, tables, tp.N, t)});
      break;
    }
    case Law::data: {
      const auto dist = make_skill_distribution(tp.alpha, tp.n_s);
      for (double d : grid) curve.push_back({d, data_loss(dist, tp.S, d)});
      break;
    }
    case Law::param: {
      const LossTables tables(make_skill_distribution(tp.alpha, tp.n_s));
      for (double n : grid) curve.push_back({n, 0.5 * tp.S * tp.S * tables.tail_after(n)});
      break;
    }
    case Law::compute: {
      const auto n_grid = default_compute_n_grid();
      const auto family = compute_family(tp, n_grid, grid, 1.0, kInf);
      curve = compute_envelope(family);
      break;
    }
  }
  return curve;
}

double corrected_law_offset(const TheoryParams& tp, const SkillDistribution& dist) {
  tp.validate();
  if (tp.N < 1) throw DomainError("corrected law needs N >= 1");
  return tp.S * tp.S * dist.norm_const * std::pow(tp.N, -tp.alpha) / (2.0 * tp.alpha);
}

double corrected_time_loss(double alpha, double L_C, double T0, double L0, double T) {
  if (!(T0 > 0.0 && T > 0.0)) throw DomainError("corrected law needs positive times");
  return (L0 + L_C) * std::pow(T / T0, -alpha / (alpha + 1.0)) - L_C;
}

FixedExponentFit fit_fixed_exponent(std::span<const CurvePoint> points, double exponent,
                                    double offset) {
  if (points.empty()) throw InsufficientDataError("no points to fit");
  if (offset < 0.0) throw DomainError("offset must be nonnegative");
  for (const auto& p : points) {
    if (!(p.resource > 0.0 && p.loss > 0.0)) throw DomainError("fit needs positive points");
  }
  const auto rms = [&](double log_k) {
    double ss = 0.0;
    for (const auto& p : points) {
      const double yhat = std::exp(log_k + exponent * std::log(p.resource)) - offset;
      if (!(yhat > 0.0)) return kInf;
      const double e = std::log(p.loss) - std::log(yhat);
      ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(points.size()));
  };
  // With offset 0 the optimum is the mean log ratio; otherwise it lies
  // between the feasibility bound and the pure fit of y + offset.
  double mean_shifted = 0.0;
  double lower = -kInf;
  for (const auto& p : points) {
    mean_shifted += std::log(p.loss + offset) - exponent * std::log(p.resource);
    if (offset > 0.0) lower = std::max(lower, std::log(offset) - exponent * std::log(p.resource));
  }
  mean_shifted /= static_cast<double>(points.size());
  if (offset == 0.0) return {std::exp(mean_shifted), rms(mean_shifted)};
  const double lo = lower + 1e-12;
  const double hi = std::max(lo, mean_shifted) + 5.0;
  const auto best = golden_section_minimize(rms, lo, hi, 1e-12);
  return {std::exp(best.x), best.value};
}

StageTimes stage_times(const TheoryParams& tp, int k, double eps) {
  tp.validate();
  if (k < 1 || k > tp.n_s) throw DomainError("skill index out of range");
  if (!(eps > tp.r / tp.S && eps < 0.5)) throw DomainError("eps must lie in (r/S, 1/2)");
  const double pk = make_skill_distribution(tp.alpha, tp.n_s).weight(k);
  StageTimes st;
  st.k = k;
  st.eps = eps;
  st.tau_emerge = std::log((tp.S / tp.r - 1.0) / (1.0 / eps - 1.0)) / (2.0 * tp.eta * pk * tp.S);
  st.tau_saturate = std::log(1.0 / eps - 1.0) / (tp.eta * pk * tp.S);
  return st;
}

bool check_stage_like(const TheoryParams& tp, int k, double eps) {
  const auto here = stage_times(tp, k, eps);
  if (k == tp.n_s) return true;  // no later skill to overlap with
  const auto next = stage_times(tp, k + 1, eps);
  return here.tau_saturate < next.tau_emerge - here.tau_emerge;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::time_bound: return "time";
    case Regime::param_bound: return "param";
    case Regime::data_bound: return "data";
    case Regime::compute_optimal: return "compute_optimal";
    case Regime::mixed: return "mixed";
  }
  return "unknown";
}

RegimeReport regime_check(double T, double D, double N, double n_s, double alpha) {
  if (!(T > 0.0 && D > 0.0 && N > 0.0 && n_s > 0.0 && alpha > 0.0)) {
    throw DomainError("regime check needs positive inputs");
  }
  constexpr double kMuch = 100.0;
  const double n_pow = std::pow(N, alpha + 1.0);
  RegimeReport rep;
  rep.n_pow_over_t = n_pow / T;
  rep.params_exceed_skills = N > n_s;
  rep.time_conditions = D >= kMuch * std::max(N * T * T, T * T * T) && n_pow >= kMuch * T;
  rep.param_conditions = D >= kMuch * T * T * T && n_pow <= T / kMuch;
  rep.data_conditions = T >= kMuch * D * std::pow(std::log(D), 1.1) && n_pow >= kMuch * D;
  rep.compute_optimal = rep.n_pow_over_t >= 0.1 && rep.n_pow_over_t <= 10.0;
  if (rep.time_conditions) {
    rep.regime = Regime::time_bound;
  } else if (rep.param_conditions) {
    rep.regime = Regime::param_bound;
  } else if (rep.data_conditions) {
    rep.regime = Regime::data_bound;
  } else if (rep.compute_optimal) {
    rep.regime = Regime::compute_optimal;
  }
  return rep;
}

double PowerLawFit::prefactor() const { return std::exp(log_prefactor); }
double PowerLawFit::predict(double x) const { return std::exp(log_prefactor) * std::pow(x, exponent); }

PowerLawFit fit_power_law(std::span<const CurvePoint> points, double lo, double hi,
                          int min_points) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : points) {
    if (p.resource < lo || p.resource > hi) continue;
    if (!(p.resource > 0.0 && p.loss > 0.0)) {
      throw DomainError("power-law fit needs positive x and y");
    }
    xs.push_back(std::log(p.resource));
    ys.push_back(std::log(p.loss));
  }
  if (static_cast<int>(xs.size()) < std::max(min_points, 2)) {
    throw InsufficientDataError("power-law fit needs at least " +
                                std::to_string(std::max(min_points, 2)) +
                                " points in the window, got " + std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
    syy += (ys[j] - my) * (ys[j] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  const double ss_res = std::max(0.0, syy - fit.exponent * sxy);
  // A constant series is fitted exactly.
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.points = static_cast<int>(xs.size());
  return fit;
}

PowerLawFit fit_power_law(std::span<const CurvePoint> points) {
  return fit_power_law(points, 0.0, kInf);
}

void write_theory_csv(std::ostream& out, std::span<const CurvePoint> curve, Law law,
                      double alpha) {
  csv::Writer w(out, {"resource", "loss", "law", "alpha"});
  for (const auto& p : curve) w.row(p.resource, p.loss, to_string(law), alpha);
}

std::vector<CurvePoint> read_theory_csv(std::istream& in) {
  const auto table = csv::read(in, {"resource", "loss", "law", "alpha"});
  std::vector<CurvePoint> curve;
  for (const auto& row : table.rows) {
    curve.push_back({csv::parse_double(row[0]), csv::parse_double(row[1])});
  }
  return curve;
}

std::string prefactor_report(const TheoryParams& tp) {
  tp.validate();
  std::ostringstream os;
  os << "alpha=" << csv::format(tp.alpha) << '\n'
     << "S=" << csv::format(tp.S) << '\n'
     << "r=" << csv::format(tp.r) << '\n'
     << "eta=" << csv::format(tp.eta) << '\n'
     << "zeta=" << csv::format(zeta(tp.alpha + 1.0)) << '\n';
  for (Law law : {Law::time, Law::data, Law::param, Law::compute}) {
    os << "exponent_" << to_string(law) << '=' << csv::format(law_exponent(law, tp.alpha)) << '\n';
  }
  TheoryParams plain = tp;
  plain.lambda.reset();
  plain.gamma_ratio = 0.0;
  plain.mu = 0.0;
  os << "prefactor_time=" << csv::format(theory_prefactor(Law::time, plain)) << '\n'
     << "prefactor_data=" << csv::format(theory_prefactor(Law::data, plain)) << '\n'
     << "prefactor_param=" << csv::format(theory_prefactor(Law::param, plain)) << '\n'
     << "prefactor_compute=" << csv::format(theory_prefactor(Law::compute, plain)) << '\n'
     << "prefactor_time_small_r=" << csv::format(time_prefactor_small_r(plain)) << '\n';
  return os.str();
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw DomainError("log grid needs 0 < lo < hi, n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int j = 0; j < n; ++j) grid[j] = std::exp(a + (b - a) * j / (n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace skillscale
