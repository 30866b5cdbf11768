#include "skillscale/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale {
namespace {

// Calls fn(j) for every active input unit of (i, bits).
template <typename Fn>
void for_each_active(int n_s, int n_b, int i, Bits bits, Fn&& fn) {
  fn(i - 1);
  Bits rest = bits;
  while (rest) {
    const int j = __builtin_ctzll(rest);
    if (j >= n_b) break;
    fn(n_s + j);
    rest &= rest - 1;
  }
}

void check_input(const MlpModel& model, int i) {
  if (i < 1 || i > model.n_s()) {
    throw ShapeError("control index " + std::to_string(i) + " outside [1, " +
                     std::to_string(model.n_s()) + "]");
  }
}

}  // namespace

MlpModel::MlpModel(int n_s, int n_b, int width) : n_s_(n_s), n_b_(n_b), width_(width) {
  if (n_s < 1 || n_b < 1 || n_b > kMaxSkillBits || width < 1) {
    throw ShapeError("MLP dimensions must be positive with n_b <= 64");
  }
  params_.assign(static_cast<std::size_t>(width) * (inputs() + 2) + 1, 0.0);
}

std::span<double> MlpModel::w1_column(int j) {
  return std::span<double>(params_).subspan(static_cast<std::size_t>(j) * width_,
                                            static_cast<std::size_t>(width_));
}
std::span<const double> MlpModel::w1_column(int j) const {
  return std::span<const double>(params_).subspan(static_cast<std::size_t>(j) * width_,
                                                  static_cast<std::size_t>(width_));
}
std::span<double> MlpModel::b1() {
  return std::span<double>(params_).subspan(b1_offset(), static_cast<std::size_t>(width_));
}
std::span<const double> MlpModel::b1() const {
  return std::span<const double>(params_).subspan(b1_offset(), static_cast<std::size_t>(width_));
}
std::span<double> MlpModel::w2() {
  return std::span<double>(params_).subspan(b1_offset() + width_,
                                            static_cast<std::size_t>(width_));
}
std::span<const double> MlpModel::w2() const {
  return std::span<const double>(params_).subspan(b1_offset() + width_,
                                                  static_cast<std::size_t>(width_));
}

MlpModel init_mlp(int n_s, int n_b, int width, double init_std, std::uint64_t seed) {
  if (init_std < 0.0) throw DomainError("init_std must be nonnegative");
  MlpModel model(n_s, n_b, width);
  Rng rng = make_rng(seed, Stream::mlp_init);
  for (double& p : model.params()) p = init_std * standard_normal(rng);
  return model;
}

void hidden_preactivations(const MlpModel& model, int i, Bits bits, std::span<double> pre) {
  check_input(model, i);
  if (pre.size() != static_cast<std::size_t>(model.width())) {
    throw ShapeError("pre-activation buffer has wrong width");
  }
  const auto b1 = model.b1();
  std::copy(b1.begin(), b1.end(), pre.begin());
  const std::size_t width = pre.size();
  for_each_active(model.n_s(), model.n_b(), i, bits, [&](int j) {
    const double* col = model.w1_column(j).data();
    for (std::size_t q = 0; q < width; ++q) pre[q] += col[q];
  });
}

double forward(const MlpModel& model, int i, Bits bits) {
  std::vector<double> pre(static_cast<std::size_t>(model.width()));
  hidden_preactivations(model, i, bits, pre);
  const auto w2 = model.w2();
  double out = model.b2();
  for (std::size_t q = 0; q < pre.size(); ++q) out += w2[q] * std::max(pre[q], 0.0);
  return out;
}

double accumulate_loss_and_grads(const MlpModel& model, std::span<const Sample> batch,
                                 MlpModel& grads, std::vector<double>& scratch) {
  if (batch.empty()) throw DomainError("empty batch");
  if (grads.parameter_count() != model.parameter_count() || grads.width() != model.width() ||
      grads.n_s() != model.n_s()) {
    grads = model.zeros_like();
  } else {
    std::fill(grads.params().begin(), grads.params().end(), 0.0);
  }
  const std::size_t width = static_cast<std::size_t>(model.width());
  scratch.resize(2 * width);
  double* pre = scratch.data();
  double* dpre = scratch.data() + width;
  const double* b1 = model.b1().data();
  const double* w2 = model.w2().data();
  double* gb1 = grads.b1().data();
  double* gw2 = grads.w2().data();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  double loss = 0.0;
  double gb2 = 0.0;
  for (const auto& s : batch) {
    check_input(model, s.skill);
    std::copy(b1, b1 + width, pre);
    for_each_active(model.n_s(), model.n_b(), s.skill, s.bits, [&](int j) {
      const double* col = model.w1_column(j).data();
      for (std::size_t q = 0; q < width; ++q) pre[q] += col[q];
    });
    double out = model.b2();
    for (std::size_t q = 0; q < width; ++q) out += w2[q] * std::max(pre[q], 0.0);
    const double err = out - s.target;
    loss += 0.5 * err * err;
    const double delta = err * inv_n;
    gb2 += delta;
    for (std::size_t q = 0; q < width; ++q) {
      const bool on = pre[q] > 0.0;
      gw2[q] += on ? delta * pre[q] : 0.0;
      dpre[q] = on ? delta * w2[q] : 0.0;
      gb1[q] += dpre[q];
    }
    for_each_active(model.n_s(), model.n_b(), s.skill, s.bits, [&](int j) {
      double* gcol = grads.w1_column(j).data();
      for (std::size_t q = 0; q < width; ++q) gcol[q] += dpre[q];
    });
  }
  grads.b2() = gb2;
  return loss * inv_n;
}

LossAndGrads loss_and_grads(const MlpModel& model, std::span<const Sample> batch) {
  LossAndGrads out{0.0, model.zeros_like()};
  std::vector<double> scratch;
  out.loss = accumulate_loss_and_grads(model, batch, out.grads, scratch);
  return out;
}

void TrainConfig::validate() const {
  if (width < 1) throw ConfigError("width must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (init_std < 0.0) throw ConfigError("init_std must be nonnegative");
  if (batch < 1) throw ConfigError("batch must be positive");
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (!(adam_lr > 0.0)) throw ConfigError("adam_lr must be positive");
  if (effective_weight_decay() < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (halve_lr_every && *halve_lr_every < 1) throw ConfigError("halve_lr_every must be positive");
  if (measure_every < 1) throw ConfigError("measure_every must be positive");
}

TrainConfig reference_profile() { return TrainConfig{}; }

TrainConfig desk_profile() {
  TrainConfig cfg;
  cfg.width = 256;
  cfg.batch = 512;
  cfg.steps = 50000;
  cfg.measure_every = 100;
  cfg.eval.n_eval = 2000;
  return cfg;
}

double scheduled_lr(const TrainConfig& cfg, std::int64_t step) {
  const double base = cfg.optimizer == Optimizer::adam ? cfg.adam_lr : cfg.lr;
  if (!cfg.halve_lr_every) return base;
  return std::ldexp(base, -static_cast<int>(step / *cfg.halve_lr_every));
}

void train_step(MlpModel& model, OptimizerState& state, const MlpModel& grads,
                const TrainConfig& cfg, double lr, std::int64_t step) {
  auto theta = model.params();
  const auto g = grads.params();
  if (g.size() != theta.size()) throw ShapeError("gradient shape differs from model");
  for (double gi : g) {
    if (!std::isfinite(gi)) {
      throw NumericError("training failed: non-finite gradient at step " + std::to_string(step));
    }
  }
  const double wd = cfg.effective_weight_decay();
  if (cfg.optimizer == Optimizer::sgd) {
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * (g[j] + wd * theta[j]);
    return;
  }
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t j = 0; j < theta.size(); ++j) {
    state.m[j] = b1 * state.m[j] + (1.0 - b1) * g[j];
    state.v[j] = b2 * state.v[j] + (1.0 - b2) * g[j] * g[j];
    const double mhat = state.m[j] / c1;
    const double vhat = state.v[j] / c2;
    theta[j] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) + wd * theta[j]);
  }
}

std::vector<double> measure_strengths(const MlpModel& model, const TaskSpec& spec,
                                      const EvalConfig& eval, double* total_loss_out,
                                      const SkillDistribution* dist, double S) {
  std::vector<double> pre(static_cast<std::size_t>(model.width()));
  const auto w2 = model.w2();
  const ModelFn f = [&](int i, Bits x) {
    hidden_preactivations(model, i, x, pre);
    double out = model.b2();
    for (std::size_t q = 0; q < pre.size(); ++q) out += w2[q] * std::max(pre[q], 0.0);
    return out;
  };
  std::vector<double> strengths;
  double loss = 0.0;
  for (int k = 1; k <= spec.n_s; ++k) {
    const auto mom = skill_moments(f, spec, k, eval);
    strengths.push_back(mom.strength);
    if (dist) loss += dist->weight(k) * 0.5 * (S * S + mom.second_moment - 2.0 * S * mom.strength);
  }
  if (total_loss_out) *total_loss_out = loss;
  return strengths;
}

TrainResult train_run(const TrainConfig& cfg, const SkillDistribution& dist,
                      const TaskSpec& spec, double S, const Dataset* fixed_data) {
  cfg.validate();
  const SampleGenerator gen(dist, spec, S);
  if (cfg.data_mode == DataMode::fixed) {
    if (!fixed_data) throw ConfigError("fixed data mode needs a dataset");
    if (fixed_data->samples.empty()) throw ConfigError("fixed data mode needs a nonempty dataset");
  }

  TrainResult result{EmergenceRecord{}, init_mlp(spec.n_s, spec.n_b, cfg.width, cfg.init_std,
                                                 cfg.seed)};
  auto& record = result.record;
  auto& model = result.model;
  record.S = S;
  record.n_s = spec.n_s;

  const auto measure = [&](std::int64_t step) {
    double loss = 0.0;
    auto row = measure_strengths(model, spec, cfg.eval, &loss, &dist, S);
    record.append(step, std::move(row), loss);
    if (!cfg.stop_when_all_above) return false;
    const auto& last = record.strengths.back();
    return std::all_of(last.begin(), last.end(),
                       [&](double r) { return r / S >= *cfg.stop_when_all_above; });
  };

  Rng rng = make_rng(cfg.seed, Stream::mlp_batches);
  std::vector<Sample> batch;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  if (fixed_data) {
    order.resize(fixed_data->samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    cursor = order.size();  // forces a shuffle before the first batch
  }
  MlpModel grads = model.zeros_like();
  std::vector<double> scratch;
  OptimizerState opt;

  if (measure(0)) return result;
  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    if (cfg.data_mode == DataMode::online) {
      for (int j = 0; j < cfg.batch; ++j) batch.push_back(gen(rng));
    } else {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch),
                                                     order.size());
      for (std::size_t j = 0; j < take; ++j) {
        if (cursor == order.size()) {
          shuffle(std::span<std::size_t>(order), rng);
          cursor = 0;
        }
        batch.push_back(fixed_data->samples[order[cursor++]]);
      }
    }
    accumulate_loss_and_grads(model, batch, grads, scratch);
    train_step(model, opt, grads, cfg, scheduled_lr(cfg, step - 1), step);
    if (step % cfg.measure_every == 0 || step == cfg.steps) {
      if (measure(step)) break;
    }
  }
  return result;
}

ModeReport mode_strengths(const MlpModel& model, const TaskSpec& spec, int k,
                          const EvalConfig& cfg) {
  if (spec.n_s != model.n_s() || spec.n_b != model.n_b()) {
    throw ShapeError("model and task spec dimensions differ");
  }
  const auto inputs = evaluation_inputs(spec, k, cfg);
  const Bits mask = spec.mask(k);
  const auto w2 = model.w2();
  ModeReport report;
  report.skill = k;
  report.neuron.assign(static_cast<std::size_t>(model.width()), 0.0);
  std::vector<double> pre(static_cast<std::size_t>(model.width()));
  double bias_corr = 0.0;
  for (Bits x : inputs) {
    hidden_preactivations(model, k, x, pre);
    const double g = parity(x, mask);
    for (std::size_t q = 0; q < pre.size(); ++q) {
      report.neuron[q] += g * w2[q] * std::max(pre[q], 0.0);
    }
    bias_corr += g;
  }
  const double n = static_cast<double>(inputs.size());
  for (double& c : report.neuron) c /= n;
  // E[g_k] is exactly zero under exact enumeration; under sampling it is the
  // sample mean, which is kept so the parts still sum to the measured R_k.
  report.bias = model.b2() * bias_corr / n;
  report.total = std::accumulate(report.neuron.begin(), report.neuron.end(), report.bias);
  return report;
}

void save_checkpoint(std::ostream& out, const MlpModel& model, std::uint64_t seed,
                     std::int64_t step) {
  nlohmann::json header;
  header["format"] = "skillscale-mlp";
  header["n_s"] = model.n_s();
  header["n_b"] = model.n_b();
  header["width"] = model.width();
  header["parameters"] = model.parameter_count();
  header["layout"] = "W1(col-major,width x inputs),b1,w2,b2";
  header["seed"] = seed;
  header["step"] = step;
  out << header.dump() << '\n';
  for (double p : model.params()) out << csv::format(p) << '\n';
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format", "") != "skillscale-mlp") throw ConfigError("checkpoint: bad format");
  Checkpoint ck;
  ck.model = MlpModel(header.at("n_s").get<int>(), header.at("n_b").get<int>(),
                      header.at("width").get<int>());
  ck.seed = header.at("seed").get<std::uint64_t>();
  ck.step = header.at("step").get<std::int64_t>();
  for (double& p : ck.model.params()) {
    if (!std::getline(in, line)) throw ConfigError("checkpoint: truncated tensor dump");
    p = csv::parse_double(line);
  }
  return ck;
}

}  // namespace skillscale
