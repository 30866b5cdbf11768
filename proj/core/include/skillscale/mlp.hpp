#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "skillscale/metrics.hpp"
#include "skillscale/parity_data.hpp"

namespace skillscale {

/// Two-layer ReLU network on one-hot(control) ++ skill bits:
///   f(i, x) = w2 . relu(W1 [e_i; x] + b1) + b2.
/// Parameters live in one flat buffer laid out as
///   W1 (column-major, width x inputs) | b1 | w2 | b2
/// so a column of W1 (one input unit) is contiguous. Inputs are 0/1, so the
/// first layer reduces to summing the columns of the active units.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(int n_s, int n_b, int width);

  int n_s() const { return n_s_; }
  int n_b() const { return n_b_; }
  int width() const { return width_; }
  int inputs() const { return n_s_ + n_b_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Column j of W1: weights from input unit j (0..n_s-1 control, then bits).
  std::span<double> w1_column(int j);
  std::span<const double> w1_column(int j) const;
  double& w1(int q, int j) { return w1_column(j)[static_cast<std::size_t>(q)]; }
  double w1(int q, int j) const { return w1_column(j)[static_cast<std::size_t>(q)]; }
  std::span<double> b1();
  std::span<const double> b1() const;
  std::span<double> w2();
  std::span<const double> w2() const;
  double& b2() { return params_.back(); }
  double b2() const { return params_.back(); }

  /// A zero-valued model of the same shape.
  MlpModel zeros_like() const { return MlpModel(n_s_, n_b_, width_); }

 private:
  std::size_t b1_offset() const { return static_cast<std::size_t>(width_) * inputs(); }
  int n_s_ = 0;
  int n_b_ = 0;
  int width_ = 0;
  std::vector<double> params_;
};

MlpModel init_mlp(int n_s, int n_b, int width, double init_std, std::uint64_t seed);

/// Writes the hidden pre-activations for input (i, bits) into `pre`.
void hidden_preactivations(const MlpModel& model, int i, Bits bits, std::span<double> pre);

double forward(const MlpModel& model, int i, Bits bits);

struct LossAndGrads {
  double loss = 0.0;
  MlpModel grads;
};

/// Mean half-squared error over the batch and its exact gradient. The ReLU
/// derivative at 0 is taken as 0.
LossAndGrads loss_and_grads(const MlpModel& model, std::span<const Sample> batch);

/// Same as loss_and_grads but reuses `grads` (resized if needed) and a
/// caller-owned scratch buffer; used in the training loop.
double accumulate_loss_and_grads(const MlpModel& model, std::span<const Sample> batch,
                                 MlpModel& grads, std::vector<double>& scratch);

enum class Optimizer { sgd, adam };
enum class DataMode { online, fixed };

struct TrainConfig {
  int width = 1000;
  double lr = 0.05;
  double init_std = 0.01;
  int batch = 4000;
  std::int64_t steps = 500000;
  Optimizer optimizer = Optimizer::sgd;
  double adam_lr = 0.001;
  std::optional<double> weight_decay;  // unset: 0 for sgd, 5e-5 for adam
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<std::int64_t> halve_lr_every;
  std::int64_t measure_every = 50;
  DataMode data_mode = DataMode::online;
  std::uint64_t seed = 0;
  EvalConfig eval{};
  /// Stop once every skill's R/S is at or above this value at a measurement.
  std::optional<double> stop_when_all_above;

  double effective_weight_decay() const {
    return weight_decay.value_or(optimizer == Optimizer::adam ? 5e-5 : 0.0);
  }
  void validate() const;
};

/// The large reference configuration.
TrainConfig reference_profile();
/// A single-core configuration: width 256, batch 512, at most 5e4 steps.
TrainConfig desk_profile();

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
};

/// One optimizer update with the given learning rate (the schedule is the
/// caller's). Throws NumericError naming `step` if any gradient is not finite.
void train_step(MlpModel& model, OptimizerState& state, const MlpModel& grads,
                const TrainConfig& cfg, double lr, std::int64_t step);

/// Learning rate at `step` after applying the halving schedule.
double scheduled_lr(const TrainConfig& cfg, std::int64_t step);

/// R_k for k = 1..n_s and the total loss at the current parameters.
std::vector<double> measure_strengths(const MlpModel& model, const TaskSpec& spec,
                                      const EvalConfig& eval, double* total_loss_out = nullptr,
                                      const SkillDistribution* dist = nullptr, double S = 0.0);

struct TrainResult {
  EmergenceRecord record;
  MlpModel model;
};

/// Trains from init_mlp(cfg.seed). Online mode draws a fresh batch each
/// step; fixed mode walks `fixed_data` in minibatches drawn without
/// replacement, reshuffled every epoch. Measures at step 0, every
/// measure_every steps, and at the last step.
TrainResult train_run(const TrainConfig& cfg, const SkillDistribution& dist,
                      const TaskSpec& spec, double S, const Dataset* fixed_data = nullptr);

struct ModeReport {
  int skill = 1;
  std::vector<double> neuron;  // per hidden unit
  double bias = 0.0;           // the output bias never correlates with g_k
  double total = 0.0;
};

ModeReport mode_strengths(const MlpModel& model, const TaskSpec& spec, int k,
                          const EvalConfig& cfg);

void save_checkpoint(std::ostream& out, const MlpModel& model, std::uint64_t seed,
                     std::int64_t step);
struct Checkpoint {
  MlpModel model;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};
Checkpoint load_checkpoint(std::istream& in);

}  // namespace skillscale
