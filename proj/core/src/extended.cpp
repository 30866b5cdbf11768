#include "skillscale/extended.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale {

Eigen::VectorXd EklBasis::features(Bits x) const {
  Eigen::VectorXd chi(d_c);
  for (int m = 0; m < d_c; ++m) chi[m] = parity(x, parity_masks[static_cast<std::size_t>(m)]);
  return mixing * chi;
}

double EklBasis::value(int l, Bits x) const {
  if (l < 1 || l > d_c) throw DomainError("basis index out of range");
  double v = 0.0;
  for (int m = 0; m < d_c; ++m) {
    v += mixing(l - 1, m) * parity(x, parity_masks[static_cast<std::size_t>(m)]);
  }
  return v;
}

EklBasis build_ekl_basis(const TaskSpec& spec, int k, int D_c, std::uint64_t seed) {
  if (k < 1 || k > spec.n_s) throw DomainError("skill index out of range");
  if (D_c < 1) throw DomainError("D_c must be at least 1");
  const double available = std::ldexp(1.0, spec.n_b) - 1.0;
  if (static_cast<double>(D_c) > available) {
    throw CapacityError("D_c=" + std::to_string(D_c) + " exceeds the " +
                        csv::format(available) + " distinct parities on " +
                        std::to_string(spec.n_b) + " bits");
  }
  EklBasis basis;
  basis.skill = k;
  basis.d_c = D_c;
  const Bits own = spec.mask(k);
  basis.parity_masks.push_back(own);

  Rng rng = make_rng(seed, Stream::basis, static_cast<std::uint64_t>(k));
  const std::size_t need = static_cast<std::size_t>(D_c - 1);
  if (spec.n_b <= 20) {
    std::vector<Bits> pool;
    const Bits limit = Bits{1} << spec.n_b;
    pool.reserve(static_cast<std::size_t>(limit - 1));
    for (Bits m = 1; m < limit; ++m) {
      if (m != own) pool.push_back(m);
    }
    shuffle(std::span<Bits>(pool), rng);
    basis.parity_masks.insert(basis.parity_masks.end(), pool.begin(),
                              pool.begin() + static_cast<std::ptrdiff_t>(need));
  } else {
    const Bits mask = spec.n_b == 64 ? ~Bits{0} : (Bits{1} << spec.n_b) - 1;
    std::set<Bits> seen{own};
    while (basis.parity_masks.size() < need + 1) {
      const Bits m = rng() & mask;
      if (m != 0 && seen.insert(m).second) basis.parity_masks.push_back(m);
    }
  }

  // Householder reflection taking e_1 to the unit all-ones direction.
  const double c = 1.0 / std::sqrt(static_cast<double>(D_c));
  Eigen::VectorXd v = Eigen::VectorXd::Constant(D_c, -c);
  v[0] += 1.0;
  const double vv = v.squaredNorm();
  basis.mixing = Eigen::MatrixXd::Identity(D_c, D_c);
  if (vv > 0.0) basis.mixing -= (2.0 / vv) * v * v.transpose();
  return basis;
}

double ExtendedResult::strength(int k) const {
  for (const auto& s : skills) {
    if (s.skill == k) return s.strength;
  }
  throw DomainError("skill " + std::to_string(k) + " was not simulated");
}

double ExtendedResult::max_drift() const {
  double m = 0.0;
  for (const auto& s : skills) m = std::max(m, s.max_drift);
  return m;
}

namespace {

// Per-skill quadratic: loss = 0.5 (Ba - c)^T M (Ba - c), M = Phi Phi^T / D.
struct SkillProblem {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  double inv_sqrt_dc = 1.0;
};

double skill_loss(const SkillProblem& p, double a, const Eigen::VectorXd& B) {
  const Eigen::VectorXd r = B * a - p.c;
  return 0.5 * r.dot(p.M * r);
}

// Time derivative of (a, B) under gradient flow with rate eta.
void velocity(const SkillProblem& p, double eta, double a, const Eigen::VectorXd& B, double& da,
              Eigen::VectorXd& dB) {
  const Eigen::VectorXd g = p.M * (B * a - p.c);
  da = -eta * B.dot(g);
  dB = -eta * a * g;
}

}  // namespace

ExtendedResult simulate_extended_model(const Dataset& data, std::span<const EklBasis> bases,
                                       const ExtendedConfig& cfg) {
  if (!(cfg.S > 0.0 && cfg.eta > 0.0 && cfg.step_size > 0.0) || cfg.steps < 0) {
    throw DomainError("extended model needs S, eta, step_size > 0 and steps >= 0");
  }
  if (data.samples.empty()) throw DomainError("extended model needs a nonempty dataset");
  const double init_scale = cfg.init_scale.value_or(1e-3 * std::sqrt(cfg.S));
  if (!(init_scale > 0.0)) throw DomainError("init_scale must be positive");

  const double D = static_cast<double>(data.size());
  std::vector<SkillProblem> problems;
  ExtendedResult result;
  Rng rng = make_rng(cfg.seed, Stream::extended_init);
  for (const auto& basis : bases) {
    SkillProblem p;
    p.inv_sqrt_dc = 1.0 / std::sqrt(static_cast<double>(basis.d_c));
    p.M = Eigen::MatrixXd::Zero(basis.d_c, basis.d_c);
    for (const auto& s : data.samples) {
      if (s.skill != basis.skill) continue;
      const Eigen::VectorXd phi = basis.features(s.bits);
      p.M.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0 / D);
    }
    p.M = p.M.selfadjointView<Eigen::Lower>();
    p.c = Eigen::VectorXd::Constant(basis.d_c, cfg.S * p.inv_sqrt_dc);
    problems.push_back(std::move(p));

    ExtendedSkillState st;
    st.skill = basis.skill;
    st.a = init_scale * (1.0 - uniform01(rng));
    st.B.resize(basis.d_c);
    for (int l = 0; l < basis.d_c; ++l) st.B[l] = init_scale * (1.0 - uniform01(rng));
    st.invariant0 = st.a * st.a - st.B.squaredNorm();
    result.skills.push_back(std::move(st));
  }

  const auto total_loss = [&] {
    double l = 0.0;
    for (std::size_t j = 0; j < problems.size(); ++j) {
      l += skill_loss(problems[j], result.skills[j].a, result.skills[j].B);
    }
    return l;
  };
  const auto record = [&](double t) {
    for (std::size_t j = 0; j < problems.size(); ++j) {
      const auto& st = result.skills[j];
      result.history.push_back({t, st.skill, st.a, st.B.norm(),
                                st.a * st.B.sum() * problems[j].inv_sqrt_dc,
                                st.a * st.a - st.B.squaredNorm() - st.invariant0});
    }
  };

  record(0.0);
  double prev_loss = total_loss();
  int rising = 0;
  const double h = cfg.step_size;
  std::int64_t step = 0;
  for (step = 1; step <= cfg.steps; ++step) {
    double max_grad = 0.0;
    for (std::size_t j = 0; j < problems.size(); ++j) {
      auto& st = result.skills[j];
      const auto& p = problems[j];
      double k1a, k2a, k3a, k4a;
      Eigen::VectorXd k1B, k2B, k3B, k4B;
      velocity(p, cfg.eta, st.a, st.B, k1a, k1B);
      velocity(p, cfg.eta, st.a + 0.5 * h * k1a, st.B + 0.5 * h * k1B, k2a, k2B);
      velocity(p, cfg.eta, st.a + 0.5 * h * k2a, st.B + 0.5 * h * k2B, k3a, k3B);
      velocity(p, cfg.eta, st.a + h * k3a, st.B + h * k3B, k4a, k4B);
      st.a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
      st.B += h / 6.0 * (k1B + 2.0 * k2B + 2.0 * k3B + k4B);
      if (!std::isfinite(st.a) || !st.B.allFinite()) {
        throw NumericError("extended model diverged for skill k=" + std::to_string(st.skill) +
                           " at step " + std::to_string(step) + "; reduce step_size");
      }
      st.max_drift =
          std::max(st.max_drift, std::abs(st.a * st.a - st.B.squaredNorm() - st.invariant0));
      max_grad = std::max(max_grad, std::sqrt(k1a * k1a + k1B.squaredNorm()) / cfg.eta);
    }
    const double loss = total_loss();
    rising = loss > prev_loss ? rising + 1 : 0;
    if (rising >= 100) {
      throw NumericError("extended model loss rose for 100 consecutive steps at step " +
                         std::to_string(step) + "; reduce step_size");
    }
    prev_loss = loss;
    if (cfg.record_every > 0 && step % cfg.record_every == 0) record(step * h);
    if (max_grad < cfg.grad_tol) break;
  }
  result.steps_taken = std::min(step, cfg.steps);
  for (std::size_t j = 0; j < problems.size(); ++j) {
    auto& st = result.skills[j];
    st.strength = st.a * st.B.sum() * problems[j].inv_sqrt_dc;
    st.loss = skill_loss(problems[j], st.a, st.B);
  }
  result.loss = total_loss();
  if (cfg.record_every == 0 || result.steps_taken % cfg.record_every != 0) {
    record(static_cast<double>(result.steps_taken) * h);
  }
  return result;
}

MinimumNormResult minimum_norm_fit(const Dataset& data, const EklBasis& basis, double S) {
  if (!(S > 0.0)) throw DomainError("S must be positive");
  std::vector<Bits> xs;
  std::vector<double> ys;
  for (const auto& s : data.samples) {
    if (s.skill == basis.skill) {
      xs.push_back(s.bits);
      ys.push_back(s.target);
    }
  }
  MinimumNormResult out;
  out.weights = Eigen::VectorXd::Zero(basis.d_c);
  const double inv_sqrt_dc = 1.0 / std::sqrt(static_cast<double>(basis.d_c));
  if (!xs.empty()) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), basis.d_c);
    Eigen::VectorXd y(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      design.row(static_cast<Eigen::Index>(j)) = basis.features(xs[j]).transpose();
      y[static_cast<Eigen::Index>(j)] = ys[j];
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const Eigen::VectorXd uty = svd.matrixU().transpose() * y;
    for (Eigen::Index j = 0; j < sv.size(); ++j) {
      if (sv[j] > 1e-10) {
        out.weights += svd.matrixV().col(j) * (uty[j] / sv[j]);
        ++out.rank;
      }
    }
  }
  out.strength = out.weights.sum() * inv_sqrt_dc;
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(basis.d_c, S * inv_sqrt_dc);
  out.loss_implied_strength = S - (out.weights - target).norm();
  return out;
}

double minimum_norm_oracle(const Dataset& data, const EklBasis& basis, double S) {
  return minimum_norm_fit(data, basis, S).strength;
}

void write_extended_csv(std::ostream& out, const ExtendedResult& result) {
  csv::Writer w(out, {"t", "k", "a", "b", "R", "conservation_drift"});
  for (const auto& h : result.history) w.row(h.t, h.skill, h.a, h.B_norm, h.strength, h.drift);
}

}  // namespace skillscale
