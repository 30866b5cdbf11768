#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skillscale/parity_data.hpp"

namespace skillscale {

enum class Law { time, data, param, compute };

std::string to_string(Law law);
Law law_from_string(std::string_view name);

/// Parameters of the analytic multilinear loss with a uniform initial skill
/// strength r.
struct TheoryParams {
  double alpha = 0.6;
  double S = 1.0;
  double r = 0.01;
  double eta = 1.0;
  int n_s = 100000;
  int N = 100000;
  /// lim N / (eta S T)^{1/(alpha+1)}. Unset means infinity for the time law
  /// and "minimize over lambda" for the compute law.
  std::optional<double> lambda;
  /// lim N / n_s for the parameter law, in [0, 1).
  double gamma_ratio = 0.0;
  /// lim D / N^{alpha+1} for the data law; 0 means N is not a bottleneck.
  double mu = 0.0;

  void validate() const;
};

/// Scaling-law constants. Time is per unit (eta S T) and compute per unit
/// (eta S C), so L ~ A * (eta S T)^{-alpha/(alpha+1)} and
/// L ~ A * (eta S C)^{-alpha/(alpha+2)}.
double theory_prefactor(Law law, const TheoryParams& tp);

/// Time constant A(lambda) for an explicit lambda in (0, inf]; pass
/// +infinity to drop the finite-N term.
double time_prefactor(const TheoryParams& tp, double lambda);

/// Small-r estimate of the integral in the time constant, already multiplied
/// by zeta^{-1/(alpha+1)} / (alpha+1).
double time_prefactor_small_r(const TheoryParams& tp);

/// Exponent of each law: -a/(a+1), -a/(a+1), -a, -a/(a+2).
double law_exponent(Law law, double alpha);

struct CurvePoint {
  double resource = 0.0;
  double loss = 0.0;
};

/// Closed-form loss with d_k/D = P(k), N active skills, after time T.
double time_loss(const TheoryParams& tp, const SkillDistribution& dist, double T);
/// Expected converged loss for D samples: (S^2/2) sum_k (1-P_k)^D P_k.
double data_loss(const SkillDistribution& dist, double S, double D);
/// Converged loss with N basis functions: (S^2/2) sum_{k>N} P_k.
double param_loss(const SkillDistribution& dist, double S, double N);

/// Loss versus resource for one law. The compute law returns the envelope
/// (pointwise minimum over `compute_n_grid`) of loss versus C = N T.
std::vector<CurvePoint> theory_curve(Law law, const TheoryParams& tp,
                                     std::span<const double> grid);

/// N values of the reference compute figure, 10 through 10^4.
std::vector<double> default_compute_n_grid();

struct ComputeCurve {
  double N = 0.0;
  std::vector<CurvePoint> points;  // resource is C = N T
};

/// For each N, the time-law loss at T = C / N for every C in c_grid with
/// T in [t_min, t_max].
std::vector<ComputeCurve> compute_family(const TheoryParams& tp, std::span<const double> n_grid,
                                         std::span<const double> c_grid, double t_min = 1.0,
                                         double t_max = 1e6);
std::vector<CurvePoint> compute_envelope(std::span<const ComputeCurve> family);

/// L_C = S^2 A N^{-alpha} / (2 alpha), the finite-N offset of the corrected
/// time law, with A the distribution's normalization constant.
double corrected_law_offset(const TheoryParams& tp, const SkillDistribution& dist);

/// Solution of dL/dT = -(a/(a+1)) (L + L_C)/T through (T0, L0).
double corrected_time_loss(double alpha, double L_C, double T0, double L0, double T);

/// Fit of y ~ K x^exponent - offset with exponent and offset fixed; K is
/// chosen to minimize the RMS of ln y - ln y_hat.
struct FixedExponentFit {
  double amplitude = 0.0;
  double rms_log_residual = 0.0;
};
FixedExponentFit fit_fixed_exponent(std::span<const CurvePoint> points, double exponent,
                                    double offset = 0.0);

struct StageTimes {
  int k = 1;
  double eps = 0.0;
  double tau_emerge = 0.0;
  double tau_saturate = 0.0;
};

/// Emergence time (R/S reaches eps) and saturation time (eps to 1-eps) of
/// skill k with d_k/D = P(k).
StageTimes stage_times(const TheoryParams& tp, int k, double eps);
/// True when skill k saturates before skill k+1 emerges.
bool check_stage_like(const TheoryParams& tp, int k, double eps);

enum class Regime { time_bound, param_bound, data_bound, compute_optimal, mixed };
std::string to_string(Regime regime);

struct RegimeReport {
  Regime regime = Regime::mixed;
  bool time_conditions = false;
  bool param_conditions = false;
  bool data_conditions = false;
  bool compute_optimal = false;
  bool params_exceed_skills = false;  // N > n_s: extra basis functions are inert
  double n_pow_over_t = 0.0;          // N^{alpha+1} / T
};

/// "Much greater" is read as a factor of at least 100.
RegimeReport regime_check(double T, double D, double N, double n_s, double alpha);

struct PowerLawFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points = 0;

  double prefactor() const;
  double predict(double x) const;
};

/// OLS of ln y on ln x over points with x in [lo, hi]; needs at least
/// `min_points` of them (five unless a caller has fewer by construction).
PowerLawFit fit_power_law(std::span<const CurvePoint> points, double lo, double hi,
                          int min_points = 5);
PowerLawFit fit_power_law(std::span<const CurvePoint> points);

/// CSV with header `resource,loss,law,alpha`.
void write_theory_csv(std::ostream& out, std::span<const CurvePoint> curve, Law law, double alpha);
std::vector<CurvePoint> read_theory_csv(std::istream& in);

/// Flat key=value report of all four constants plus the inputs.
std::string prefactor_report(const TheoryParams& tp);

/// n points log-spaced on [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace skillscale
