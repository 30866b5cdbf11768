#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "skillscale/parity_data.hpp"

namespace skillscale {

/// D_c orthonormal functions on skill k's slice whose normalized sum is g_k.
/// They are parities chi_m (chi_1 = g_k) mixed by a symmetric orthogonal
/// matrix with a constant first column: e_l = sum_m mixing(l, m) chi_m.
struct EklBasis {
  int skill = 1;
  int d_c = 1;
  std::vector<Bits> parity_masks;  // parity_masks[0] is the skill's own mask
  Eigen::MatrixXd mixing;

  /// e_{k,l}(x) for l = 1..D_c on the skill's slice.
  Eigen::VectorXd features(Bits x) const;
  double value(int l, Bits x) const;
};

/// Capacity: D_c <= 2^n_b - 1 distinct nonempty parities. Extra parities are
/// drawn from a seed-shuffled pool (all nonempty masks when n_b <= 20,
/// rejection-sampled masks otherwise).
EklBasis build_ekl_basis(const TaskSpec& spec, int k, int D_c, std::uint64_t seed);

struct ExtendedConfig {
  double S = 1.0;
  double eta = 1.0;
  std::int64_t steps = 20000;
  double step_size = 0.01;
  /// Entries start i.i.d. uniform in (0, init_scale]; unset means 1e-3 sqrt(S).
  std::optional<double> init_scale;
  std::uint64_t seed = 0;
  /// Stop early once every skill's gradient norm is below this.
  double grad_tol = 1e-13;
  /// Record (a, B, R, drift) every this many steps; 0 records only endpoints.
  std::int64_t record_every = 0;
};

struct ExtendedSkillState {
  int skill = 1;
  double a = 0.0;
  Eigen::VectorXd B;
  double invariant0 = 0.0;  // a^2 - |B|^2 at t = 0
  double max_drift = 0.0;   // max over steps of |a^2 - |B|^2 - invariant0|
  double strength = 0.0;
  double loss = 0.0;        // this skill's share of the empirical loss
};

struct ExtendedSnapshot {
  double t = 0.0;
  int skill = 1;
  double a = 0.0;
  double B_norm = 0.0;
  double strength = 0.0;
  double drift = 0.0;
};

struct ExtendedResult {
  std::vector<ExtendedSkillState> skills;
  std::vector<ExtendedSnapshot> history;
  std::int64_t steps_taken = 0;
  double loss = 0.0;

  double strength(int k) const;
  double max_drift() const;
};

/// Gradient flow on the empirical half-MSE of f = sum_k a_k sum_l B_{k,l}
/// e_{k,l}, integrated with RK4 at `step_size`. The loss factorizes per skill
/// into (1/2D) |Phi_k^T (B_k a_k - S 1/sqrt(D_c))|^2, where Phi_k holds the
/// features of skill k's samples. Throws NumericError when the loss rises for
/// 100 consecutive steps.
ExtendedResult simulate_extended_model(const Dataset& data, std::span<const EklBasis> bases,
                                       const ExtendedConfig& cfg);

/// Minimum-norm interpolant of skill k's samples in span{e_{k,l}} (SVD
/// pseudo-inverse, singular values below 1e-10 dropped) and its correlation
/// with g_k.
struct MinimumNormResult {
  Eigen::VectorXd weights;  // coefficients on e_{k,l}
  double strength = 0.0;
  /// S - sqrt(2 L_k), with L_k the population skill loss of the interpolant.
  double loss_implied_strength = 0.0;
  int rank = 0;
};
MinimumNormResult minimum_norm_fit(const Dataset& data, const EklBasis& basis, double S);
double minimum_norm_oracle(const Dataset& data, const EklBasis& basis, double S);

/// CSV with header `t,k,a,b,R,conservation_drift`; b is the norm of B_k.
void write_extended_csv(std::ostream& out, const ExtendedResult& result);

}  // namespace skillscale
