#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "skillscale/csv.hpp"
#include "skillscale/lab.hpp"
#include "skillscale/metrics.hpp"
#include "skillscale/mlp.hpp"
#include "skillscale/multilinear.hpp"
#include "skillscale/parity_data.hpp"

namespace skillscale::cli {
namespace {

CheckResult check(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
  CheckResult r{std::move(name), false, {}};
  try {
    auto [ok, detail] = body();
    r.passed = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.detail = std::string("threw: ") + e.what();
  }
  return r;
}

std::pair<bool, std::string> parity_orthonormal() {
  const auto spec = make_task_spec(3, 10, 3, 7);
  const Bits limit = Bits{1} << spec.n_b;
  double worst = 0.0;
  for (int k = 1; k <= spec.n_s; ++k) {
    for (int l = 1; l <= spec.n_s; ++l) {
      for (int i = 1; i <= spec.n_s; ++i) {
        double sum = 0.0;
        for (Bits x = 0; x < limit; ++x) {
          sum += eval_skill_fn(spec, k, i, x) * eval_skill_fn(spec, l, i, x);
        }
        const double expect = (k == l && l == i) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(sum / static_cast<double>(limit) - expect));
      }
    }
  }
  return {worst == 0.0, "max deviation " + csv::format(worst)};
}

std::pair<bool, std::string> closed_form_flow() {
  const auto dist = make_skill_distribution(0.6, 5);
  const auto p = DynamicsParams::uniform(5.0, 0.05, 0.01, 5);
  const auto traj = integrate_gradient_flow(p, dist.weights, MultilinearState::symmetric(p, 5),
                                            50.0, 0.01);
  double worst = 0.0;
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    for (int k = 1; k <= 5; ++k) {
      const double exact = analytic_skill_strength(p, k, dist.weight(k), traj.times[j]);
      worst = std::max(worst, std::abs(traj.states[j].strength(k) - exact) / p.S);
    }
  }
  return {worst < 1e-6, "max |dR|/S " + csv::format(worst)};
}

std::pair<bool, std::string> time_round_trip() {
  const double b2 = 1.0 / 22.0;
  const auto p = DynamicsParams::uniform(5.0, 0.05, 0.05, 1, b2);
  std::vector<Observation> obs;
  for (double t = 0.0; t <= 1000.0; t += 5.0) {
    obs.push_back({t, analytic_skill_strength(p, 1, 1.0, t) / p.S});
  }
  const auto c = calibrate(Axis::time, obs, {});
  const double rel = std::abs(c.value / b2 - 1.0);
  return {rel < 0.02, "b2 " + csv::format(c.value) + " relative error " + csv::format(rel)};
}

std::pair<bool, std::string> nc_table() {
  const double expect[] = {1.0, 1.0, 0.5, 0.0, 0.0};
  double worst = 0.0;
  for (int k = 1; k <= 5; ++k) {
    worst = std::max(worst, std::abs(nc_param_strength(1.0, 10, 4, k) - expect[k - 1]));
  }
  return {worst < 1e-15, "max deviation " + csv::format(worst)};
}

std::pair<bool, std::string> mlp_gradient() {
  const auto dist = make_skill_distribution(0.6, 3);
  const auto spec = make_task_spec(3, 8, 2, 3);
  const auto data = sample_dataset(dist, spec, 2.0, 64, 3);
  MlpModel model = init_mlp(3, 8, 16, 0.5, 3);
  const auto lg = loss_and_grads(model, data.samples);
  Rng rng = make_rng(3, Stream::synthetic);
  double worst = 0.0;
  for (int j = 0; j < 20; ++j) {
    const auto q = uniform_index(rng, model.parameter_count());
    auto params = model.params();
    const double saved = params[q];
    const double h = 1e-6;
    params[q] = saved + h;
    const double up = loss_and_grads(model, data.samples).loss;
    params[q] = saved - h;
    const double down = loss_and_grads(model, data.samples).loss;
    params[q] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double an = lg.grads.params()[q];
    worst = std::max(worst, std::abs(fd - an) / std::max(1e-3, std::abs(fd) + std::abs(an)));
  }
  return {worst < 1e-5, "max relative error " + csv::format(worst)};
}

std::pair<bool, std::string> loss_decomposition() {
  const auto spec = make_task_spec(3, 8, 2, 11);
  const double S = 3.0;
  const MlpModel model = init_mlp(3, 8, 8, 0.5, 11);
  const ModelFn f = [&](int i, Bits x) { return forward(model, i, x); };
  EvalConfig exact;
  exact.mode = EvalMode::exact;
  double worst = 0.0;
  for (int k = 1; k <= spec.n_s; ++k) {
    double direct = 0.0;
    for (Bits x = 0; x < (Bits{1} << spec.n_b); ++x) {
      const double e = f(k, x) - eval_target(spec, S, k, x);
      direct += 0.5 * e * e;
    }
    direct /= static_cast<double>(Bits{1} << spec.n_b);
    worst = std::max(worst, std::abs(direct - skill_loss(f, spec, S, k, exact)));
  }
  return {worst < 1e-12, "max deviation " + csv::format(worst)};
}

std::pair<bool, std::string> emergence_csv_round_trip() {
  EmergenceRecord rec;
  rec.S = 5.0;
  rec.n_s = 2;
  rec.append(0, {0.1, 0.2});
  rec.append(50, {1.0 / 3.0, 4.9});
  std::stringstream buf;
  write_emergence_csv(buf, rec);
  const auto back = read_emergence_csv(buf, 5.0);
  const bool ok = back.steps == rec.steps && back.strengths == rec.strengths;
  return {ok, ok ? "identical" : "mismatch"};
}

}  // namespace

std::vector<CheckResult> run_selftest() {
  return {
      check("parity functions are orthonormal", parity_orthonormal),
      check("gradient flow matches closed form", closed_form_flow),
      check("time calibration round-trip", time_round_trip),
      check("N_c table at N=10", nc_table),
      check("MLP gradient by finite differences", mlp_gradient),
      check("skill loss decomposition", loss_decomposition),
      check("emergence CSV round-trip", emergence_csv_round_trip),
  };
}

}  // namespace skillscale::cli
