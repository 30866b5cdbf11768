#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skillscale/metrics.hpp"
#include "skillscale/mlp.hpp"
#include "skillscale/multilinear.hpp"
#include "skillscale/scaling.hpp"

namespace skillscale {

enum class Axis { time, data, param, compute };
std::string to_string(Axis axis);
Axis axis_from_string(std::string_view name);

/// One single-skill measurement: resource (T, D or N) and R/S.
struct Observation {
  double resource = 0.0;
  double r_over_s = 0.0;
};

struct CalibrationResult {
  Axis kind = Axis::time;
  double value = 0.0;     // b2 for time, D_c for data, N_c for param
  double residual = 0.0;  // mean squared error on R/S over the points used
  double r0 = 0.0;        // time only: initial strength used (fitted or given)
  int points = 0;
};

struct CalibrationOptions {
  double S = 5.0;
  double eta = 0.05;
  /// Time only: R(0). Ignored when fit_r0 is set.
  double r0 = 0.05;
  /// Time only: fit R(0) jointly with b2 (profile over log r0).
  bool fit_r0 = false;
  /// Time only: points with R/S outside this band are not fitted.
  double rise_lo = 0.05;
  double rise_hi = 0.95;
};

/// Least-squares fit on R/S of a single-skill system. Time fits b2 in (0, 1]
/// over a log grid refined by golden section; data and param search integers
/// exhaustively. Needs at least four points (after the time band filter).
CalibrationResult calibrate(Axis kind, std::span<const Observation> observations,
                            const CalibrationOptions& options = {});

struct Prediction {
  Axis axis = Axis::time;
  std::vector<double> grid;
  std::vector<std::vector<double>> r_over_s;  // r_over_s[k-1][j]
};

struct PredictOptions {
  /// Data axis: average the D_c-shot law over d_k ~ Binomial(D, P_k)
  /// instead of using floor(D P_k).
  bool binomial_average = false;
};

/// Curves R_k/S for k = 1..n_s predicted from a single-skill calibration.
/// p supplies S, eta and R_k(0); its b2 is replaced by a time calibration.
Prediction predict_emergence(const CalibrationResult& calib, const SkillDistribution& dist,
                             const DynamicsParams& p, Axis axis, std::span<const double> grid,
                             const PredictOptions& options = {});

/// First time R_k/S = eps under the calibrated closed form with d_k/D = P_k.
double predicted_emergence_time(const CalibrationResult& calib, const SkillDistribution& dist,
                                const DynamicsParams& p, int k, double eps);

struct SweepRow {
  double resource = 0.0;
  std::uint64_t seed = 0;
  int k = 0;  // 0 marks an aggregate row (compute axis)
  double r_over_s = 0.0;
  double loss = 0.0;
  double theory_loss = 0.0;
};

struct SweepConfig {
  TrainConfig train = desk_profile();
  double alpha = 0.6;
  int n_s = 5;
  int n_b = 16;
  int m = 3;
  double S = 5.0;
  /// Resource grid: data sizes (data), widths (param) or compute values
  /// (compute). Unused for time sweeps, which follow the training record.
  std::vector<double> grid;
  /// Compute axis: the N values of the family.
  std::vector<double> n_grid = default_compute_n_grid();
  /// Theory overlay inputs.
  double b2 = 1.0;
  double r0 = 0.01;
  std::int64_t N_c = 4;
  TheoryParams theory{};
  /// Worker threads; 0 means hardware concurrency.
  int workers = 0;
};

struct SweepFailure {
  double resource = 0.0;
  std::uint64_t seed = 0;
  std::string message;
};

struct SweepResult {
  Axis axis = Axis::time;
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
  std::map<std::string, std::string> meta;
};

/// Runs every (grid point, seed) job on a bounded pool and merges rows in
/// grid-then-seed order. A failed job is listed in `failures` and the other
/// jobs still report.
SweepResult run_sweep(Axis axis, const SweepConfig& config, std::span<const std::uint64_t> seeds);

/// CSV with header `axis,resource,seed,k,R_over_S,loss,theory_loss`.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
SweepResult read_sweep_csv(std::istream& in);

struct EmergentTimeFit {
  PowerLawFit fit;                 // tau_emerge versus k
  std::vector<double> tau;         // tau[k-1]; NaN for excluded skills
  std::vector<int> excluded;       // skills that never cross eps after step 0
};

/// First crossing of R_k/S = eps (linear interpolation between measurements)
/// and a log-log fit of tau against k. Needs at least three crossing skills.
EmergentTimeFit emergent_time_fit(const EmergenceRecord& record, double eps = 0.05);

/// Flat key=value text.
std::string calibration_report(const CalibrationResult& calib);

}  // namespace skillscale
