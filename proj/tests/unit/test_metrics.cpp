#include <doctest.h>

#include <cmath>
#include <sstream>

#include "skillscale/error.hpp"
#include "skillscale/metrics.hpp"

using namespace skillscale;

namespace {

EvalConfig exact_eval() {
  EvalConfig cfg;
  cfg.mode = EvalMode::exact;
  return cfg;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("skill strength of simple models") {
    const auto spec = make_task_spec(4, 12, 3, 2);
    const double S = 5.0;
    const auto eval = exact_eval();
    for (int k = 1; k <= 4; ++k) {
      const ModelFn scaled = [&](int i, Bits x) { return S * eval_skill_fn(spec, k, i, x); };
      CHECK(skill_strength(scaled, spec, k, eval) == S);
      const ModelFn zero = [](int, Bits) { return 0.0; };
      CHECK(skill_strength(zero, spec, k, eval) == 0.0);
      const ModelFn target = [&](int i, Bits x) { return eval_target(spec, S, i, x); };
      CHECK(skill_strength(target, spec, k, eval) == S);
      // A different skill's function on the same slice is orthogonal.
      const int other = k % 4 + 1;
      const ModelFn wrong = [&](int i, Bits x) { return S * parity(x, spec.mask(other)) * (i == k); };
      CHECK(skill_strength(wrong, spec, k, eval) == 0.0);
    }
  }

  TEST_CASE("skill loss is a function of S and R for multiples of g_k") {
    const auto spec = make_task_spec(3, 10, 3, 6);
    const double S = 5.0;
    const auto eval = exact_eval();
    for (double R : {0.0, 1.0, 2.5, 4.999, 5.0}) {
      const ModelFn f = [&](int i, Bits x) { return R * eval_skill_fn(spec, 2, i, x); };
      CHECK(std::abs(skill_loss(f, spec, S, 2, eval) - (S - R) * (S - R) / 2) < 1e-12);
    }
    const ModelFn zero = [](int, Bits) { return 0.0; };
    CHECK(skill_loss(zero, spec, S, 1, eval) == S * S / 2);
  }

  TEST_CASE("total loss weights skills by frequency") {
    const auto spec = make_task_spec(5, 16, 3, 1);
    const auto dist = make_skill_distribution(0.6, 5);
    const double S = 5.0;
    EvalConfig eval;
    eval.n_eval = 500;
    const ModelFn zero = [](int, Bits) { return 0.0; };
    CHECK(total_loss(zero, dist, spec, S, eval) == doctest::Approx(S * S / 2).epsilon(1e-14));
    const ModelFn target = [&](int i, Bits x) { return eval_target(spec, S, i, x); };
    CHECK(total_loss(target, dist, spec, S, eval) == 0.0);
    const ModelFn first = [&](int i, Bits x) { return S * eval_skill_fn(spec, 1, i, x); };
    CHECK(total_loss(first, dist, spec, S, eval) ==
          doctest::Approx(S * S / 2 * (1 - dist.weight(1))).epsilon(1e-13));
    CHECK_THROWS_AS(total_loss(zero, make_skill_distribution(0.6, 4), spec, S, eval), ConfigError);
  }

  TEST_CASE("evaluation mode selection") {
    EvalConfig cfg;
    CHECK(uses_exact(cfg, kAutoExactBits));
    CHECK_FALSE(uses_exact(cfg, kAutoExactBits + 1));
    cfg.mode = EvalMode::exact;
    CHECK(uses_exact(cfg, kExactBitBudget));
    CHECK_THROWS_AS(uses_exact(cfg, kExactBitBudget + 1), BudgetError);
    cfg.mode = EvalMode::monte_carlo;
    CHECK_FALSE(uses_exact(cfg, 4));
  }

  TEST_CASE("Monte Carlo inputs are shared across models and stay in range") {
    const auto spec = make_task_spec(2, 24, 3, 3);
    EvalConfig cfg;
    cfg.n_eval = 1000;
    cfg.seed = 4;
    const auto a = evaluation_inputs(spec, 1, cfg);
    const auto b = evaluation_inputs(spec, 1, cfg);
    CHECK(a == b);
    CHECK(a.size() == 1000);
    for (Bits x : a) CHECK((x >> 24) == 0);
    CHECK(evaluation_inputs(spec, 2, cfg) != a);
    cfg.n_eval = 0;
    CHECK_THROWS_AS(evaluation_inputs(spec, 1, cfg), DomainError);
  }

  TEST_CASE("Monte Carlo strength of S g_k is exact") {
    // Every sample contributes exactly S.
    const auto spec = make_task_spec(2, 30, 3, 3);
    EvalConfig cfg;
    cfg.n_eval = 37;
    const ModelFn f = [&](int i, Bits x) { return 2.0 * eval_skill_fn(spec, 1, i, x); };
    CHECK(skill_strength(f, spec, 1, cfg) == 2.0);
  }

  TEST_CASE("emergence record") {
    EmergenceRecord rec;
    rec.S = 2.0;
    rec.append(0, {0.2, 0.0}, 1.5);
    rec.append(10, {1.0, 0.4}, 1.0);
    CHECK(rec.n_s == 2);
    CHECK(rec.normalized(1, 1) == 0.5);
    CHECK_THROWS_AS(rec.append(10, {1.0, 1.0}, 0.5), DomainError);
    CHECK_THROWS_AS(rec.append(20, {1.0}, 0.5), ShapeError);
    CHECK_THROWS_AS(rec.append(20, {1.0, NAN}, 0.5), NumericError);
  }

  TEST_CASE("emergence CSV round-trip") {
    EmergenceRecord rec;
    rec.S = 5.0;
    rec.append(0, {0.01, 0.02, 0.03});
    rec.append(50, {0.1 + 0.2, 1e-300, 4.999999999999});
    rec.append(100, {5.0, 2.0 / 3.0, 0.0});
    std::stringstream buf;
    write_emergence_csv(buf, rec);
    CHECK(buf.str().rfind("step,k,R,R_over_S\n", 0) == 0);
    const auto back = read_emergence_csv(buf, 5.0);
    CHECK(back.steps == rec.steps);
    CHECK(back.strengths == rec.strengths);
    std::istringstream bad("step,k,R,R_over_S\n0,2,0.1,0.02\n");
    CHECK_THROWS_AS(read_emergence_csv(bad, 5.0), ConfigError);
    std::istringstream wrong_header("step,k,R\n0,1,0.1\n");
    CHECK_THROWS_AS(read_emergence_csv(wrong_header, 5.0), ConfigError);
  }
}
