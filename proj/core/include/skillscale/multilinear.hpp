#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "skillscale/parity_data.hpp"

namespace skillscale {

/// Parameters of the decoupled sigmoidal dynamics. r0[k-1] is R_k(0) and b2
/// rescales time (a calibration constant in (0, 1]).
struct DynamicsParams {
  double S = 5.0;
  double eta = 0.05;
  std::vector<double> r0;
  double b2 = 1.0;

  static DynamicsParams uniform(double S, double eta, double r, int n, double b2 = 1.0);
  double initial(int k) const;
  void validate() const;
};

/// f = sum_k a_k b_k g_k.
struct MultilinearState {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t size() const { return a.size(); }
  double strength(int k) const {
    return a[static_cast<std::size_t>(k - 1)] * b[static_cast<std::size_t>(k - 1)];
  }
  /// a_k = b_k = sqrt(R_k(0)).
  static MultilinearState symmetric(const DynamicsParams& p, int n);
};

/// S / (1 + (S/R_k(0) - 1) exp(-2 eta b2 (d_k/D) S T)).
double analytic_skill_strength(const DynamicsParams& p, int k, double dk_over_D, double T);

/// Total loss with N active skills: learned skills follow the closed form,
/// skills beyond N keep their full S^2/2 loss. dk_over_D defaults to the
/// skill frequencies; N > n_s is clamped with a warning.
double analytic_total_loss(const DynamicsParams& p, const SkillDistribution& dist, int N,
                           std::span<const double> dk_over_D, double T);

struct Trajectory {
  std::vector<double> times;
  std::vector<MultilinearState> states;
};

/// Fixed-step RK4 on da_k/dt = -eta (d_k/D) b_k (a_k b_k - S) and its mirror
/// for b_k. Records every `record_every` steps plus the endpoint.
Trajectory integrate_gradient_flow(const DynamicsParams& p, std::span<const double> dk_over_D,
                                   const MultilinearState& init, double t_end, double dt,
                                   int record_every = 1);

/// CSV with header `t,k,a,b,R`.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Linear model from zero init: S (1 - exp(-eta (d_k/D) T)).
double linear_baseline_strength(const DynamicsParams& p, int k, double dk_over_D, double T);

/// S (1 - sqrt(1 - d_k/D_c)) below D_c observations, S at or above.
double dc_shot_strength(double S, std::int64_t d_k, std::int64_t D_c);

/// Strength of skill k when N basis functions are shared out N_c per skill
/// in frequency order. N = 0 gives 0 for every k.
double nc_param_strength(double S, std::int64_t N, std::int64_t N_c, int k);

}  // namespace skillscale
