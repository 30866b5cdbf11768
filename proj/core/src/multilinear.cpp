#include "skillscale/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale {

DynamicsParams DynamicsParams::uniform(double S, double eta, double r, int n, double b2) {
  DynamicsParams p;
  p.S = S;
  p.eta = eta;
  p.r0.assign(static_cast<std::size_t>(std::max(n, 0)), r);
  p.b2 = b2;
  return p;
}

double DynamicsParams::initial(int k) const {
  if (k < 1 || k > static_cast<int>(r0.size())) {
    throw DomainError("no initial strength for skill " + std::to_string(k));
  }
  const double r = r0[static_cast<std::size_t>(k - 1)];
  if (!(r > 0.0 && r < S)) {
    throw DomainError("initial strength of skill " + std::to_string(k) + " must lie in (0, S)");
  }
  return r;
}

void DynamicsParams::validate() const {
  if (!(S > 0.0)) throw DomainError("S must be positive");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (!(b2 > 0.0 && b2 <= 1.0)) throw DomainError("b2 must lie in (0, 1]");
  for (std::size_t k = 1; k <= r0.size(); ++k) initial(static_cast<int>(k));
}

MultilinearState MultilinearState::symmetric(const DynamicsParams& p, int n) {
  MultilinearState st;
  for (int k = 1; k <= n; ++k) {
    const double v = std::sqrt(p.initial(k));
    st.a.push_back(v);
    st.b.push_back(v);
  }
  return st;
}

double analytic_skill_strength(const DynamicsParams& p, int k, double dk_over_D, double T) {
  if (!(p.S > 0.0 && p.eta > 0.0 && p.b2 > 0.0 && p.b2 <= 1.0)) {
    throw DomainError("invalid dynamics parameters");
  }
  if (!(dk_over_D >= 0.0 && dk_over_D <= 1.0)) throw DomainError("d_k/D must lie in [0, 1]");
  if (!(T >= 0.0)) throw DomainError("T must be nonnegative");
  const double r = p.initial(k);
  const double x = -2.0 * p.eta * p.b2 * dk_over_D * p.S * T;
  return p.S / (1.0 + (p.S / r - 1.0) * std::exp(x));
}

double analytic_total_loss(const DynamicsParams& p, const SkillDistribution& dist, int N,
                           std::span<const double> dk_over_D, double T) {
  if (N < 0) throw DomainError("N must be nonnegative");
  if (N > dist.n_s) {
    warn("N=" + std::to_string(N) + " exceeds n_s=" + std::to_string(dist.n_s) +
         "; extra basis functions are inert");
    N = dist.n_s;
  }
  if (!dk_over_D.empty() && static_cast<int>(dk_over_D.size()) < N) {
    throw ShapeError("need d_k/D for every active skill");
  }
  const double half_s2 = 0.5 * p.S * p.S;
  double loss = 0.0;
  for (int k = dist.n_s; k >= 1; --k) {
    const double pk = dist.weight(k);
    if (k > N) {
      loss += half_s2 * pk;
      continue;
    }
    const double frac = dk_over_D.empty() ? pk : dk_over_D[static_cast<std::size_t>(k - 1)];
    const double gap = p.S - analytic_skill_strength(p, k, frac, T);
    loss += pk * 0.5 * gap * gap;
  }
  return loss;
}

namespace {

struct Derivative {
  std::vector<double> da;
  std::vector<double> db;
};

void flow(const DynamicsParams& p, std::span<const double> rates, const std::vector<double>& a,
          const std::vector<double>& b, Derivative& out) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double resid = a[k] * b[k] - p.S;
    const double c = -p.eta * p.b2 * rates[k];
    out.da[k] = c * b[k] * resid;
    out.db[k] = c * a[k] * resid;
  }
}

}  // namespace

Trajectory integrate_gradient_flow(const DynamicsParams& p, std::span<const double> dk_over_D,
                                   const MultilinearState& init, double t_end, double dt,
                                   int record_every) {
  p.validate();
  const std::size_t n = init.size();
  if (init.b.size() != n || dk_over_D.size() < n) throw ShapeError("state and rates disagree");
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw DomainError("need dt > 0 and t_end >= 0");
  if (record_every < 1) throw DomainError("record_every must be positive");

  Trajectory traj;
  std::vector<double> a = init.a;
  std::vector<double> b = init.b;
  traj.times.push_back(0.0);
  traj.states.push_back({a, b});

  Derivative k1{std::vector<double>(n), std::vector<double>(n)};
  Derivative k2 = k1;
  Derivative k3 = k1;
  Derivative k4 = k1;
  std::vector<double> ta(n);
  std::vector<double> tb(n);
  const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
  for (std::int64_t s = 1; s <= steps; ++s) {
    const double h = std::min(dt, t_end - (s - 1) * dt);
    flow(p, dk_over_D, a, b, k1);
    for (std::size_t k = 0; k < n; ++k) {
      ta[k] = a[k] + 0.5 * h * k1.da[k];
      tb[k] = b[k] + 0.5 * h * k1.db[k];
    }
    flow(p, dk_over_D, ta, tb, k2);
    for (std::size_t k = 0; k < n; ++k) {
      ta[k] = a[k] + 0.5 * h * k2.da[k];
      tb[k] = b[k] + 0.5 * h * k2.db[k];
    }
    flow(p, dk_over_D, ta, tb, k3);
    for (std::size_t k = 0; k < n; ++k) {
      ta[k] = a[k] + h * k3.da[k];
      tb[k] = b[k] + h * k3.db[k];
    }
    flow(p, dk_over_D, ta, tb, k4);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] += h / 6.0 * (k1.da[k] + 2.0 * k2.da[k] + 2.0 * k3.da[k] + k4.da[k]);
      b[k] += h / 6.0 * (k1.db[k] + 2.0 * k2.db[k] + 2.0 * k3.db[k] + k4.db[k]);
      if (!std::isfinite(a[k]) || !std::isfinite(b[k])) {
        throw NumericError("gradient flow blew up for skill k=" + std::to_string(k + 1) +
                           " at t=" + csv::format((s - 1) * dt) + "; reduce dt");
      }
    }
    if (s % record_every == 0 || s == steps) {
      traj.times.push_back(s == steps ? t_end : s * dt);
      traj.states.push_back({a, b});
    }
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  csv::Writer w(out, {"t", "k", "a", "b", "R"});
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const auto& st = traj.states[j];
    for (std::size_t k = 0; k < st.size(); ++k) {
      w.row(traj.times[j], static_cast<int>(k + 1), st.a[k], st.b[k], st.a[k] * st.b[k]);
    }
  }
}

double linear_baseline_strength(const DynamicsParams& p, int k, double dk_over_D, double T) {
  if (!(p.S > 0.0 && p.eta > 0.0)) throw DomainError("invalid dynamics parameters");
  if (k < 1) throw DomainError("skill index must be positive");
  if (!(dk_over_D >= 0.0 && dk_over_D <= 1.0)) throw DomainError("d_k/D must lie in [0, 1]");
  if (!(T >= 0.0)) throw DomainError("T must be nonnegative");
  return p.S * -std::expm1(-p.eta * dk_over_D * T);
}

double dc_shot_strength(double S, std::int64_t d_k, std::int64_t D_c) {
  if (d_k < 0 || D_c < 1) throw DomainError("need d_k >= 0 and D_c >= 1");
  if (d_k >= D_c) return S;
  return S * (1.0 - std::sqrt(1.0 - static_cast<double>(d_k) / static_cast<double>(D_c)));
}

double nc_param_strength(double S, std::int64_t N, std::int64_t N_c, int k) {
  if (N < 0 || N_c < 1 || k < 1) throw DomainError("need N >= 0, N_c >= 1, k >= 1");
  if (N == 0) return 0.0;
  const std::int64_t q = (N - 1) / N_c + 1;
  const std::int64_t r = N - (q - 1) * N_c;
  if (k > q) return 0.0;
  if (k == q) return S * static_cast<double>(r) / static_cast<double>(N_c);
  return S;
}

}  // namespace skillscale
