#include <doctest.h>

#include <cmath>
#include <sstream>

#include "skillscale/error.hpp"
#include "skillscale/lab.hpp"

using namespace skillscale;

namespace {

std::vector<Observation> time_curve(double b2, double r0, double t_end, double dt) {
  const auto p = DynamicsParams::uniform(5.0, 0.05, r0, 1, b2);
  std::vector<Observation> obs;
  for (double t = 0.0; t <= t_end; t += dt) obs.push_back({t, analytic_skill_strength(p, 1, 1.0, t) / 5.0});
  return obs;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.n_s = 3;
  cfg.n_b = 9;
  cfg.S = 2.0;
  cfg.train.width = 8;
  cfg.train.batch = 16;
  cfg.train.steps = 20;
  cfg.train.measure_every = 10;
  cfg.train.eval.n_eval = 200;
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("lab") {
  TEST_CASE("axis names") {
    for (Axis a : {Axis::time, Axis::data, Axis::param, Axis::compute}) {
      CHECK(axis_from_string(to_string(a)) == a);
    }
    CHECK_THROWS_AS(axis_from_string("width"), ConfigError);
  }

  TEST_CASE("time calibration recovers b2") {
    CalibrationOptions opt;
    opt.r0 = 0.05;
    for (double b2 : {1.0, 0.2, 1.0 / 22.0}) {
      const auto c = calibrate(Axis::time, time_curve(b2, 0.05, 2000.0, 2.0), opt);
      CHECK(c.kind == Axis::time);
      CHECK(c.value == doctest::Approx(b2).epsilon(1e-4));
      CHECK(c.residual < 1e-10);
      CHECK(c.r0 == 0.05);
    }
    // Stretching time by two halves the fitted constant.
    auto obs = time_curve(0.2, 0.05, 2000.0, 2.0);
    for (auto& o : obs) o.resource *= 2.0;
    CHECK(calibrate(Axis::time, obs, opt).value == doctest::Approx(0.1).epsilon(1e-4));
  }

  TEST_CASE("time calibration can fit R(0)") {
    CalibrationOptions opt;
    opt.fit_r0 = true;
    const auto c = calibrate(Axis::time, time_curve(0.1, 1e-3, 3000.0, 2.0), opt);
    CHECK(c.value == doctest::Approx(0.1).epsilon(1e-2));
    CHECK(c.r0 == doctest::Approx(1e-3).epsilon(5e-2));
  }

  TEST_CASE("integer calibrations") {
    std::vector<Observation> data;
    for (double d : {0.0, 50.0, 200.0, 400.0, 700.0, 900.0}) data.push_back({d, dc_shot_strength(1.0, static_cast<std::int64_t>(d), 800)});
    const auto dc = calibrate(Axis::data, data);
    CHECK(dc.value == 800);
    CHECK(dc.residual == 0.0);
    std::vector<Observation> param;
    for (int n : {1, 2, 3, 5, 8}) param.push_back({double(n), nc_param_strength(1.0, n, 6, 1)});
    CHECK(calibrate(Axis::param, param).value == 6);
    const std::vector<Observation> few(3, Observation{1.0, 0.5});
    CHECK_THROWS_AS(calibrate(Axis::data, few), InsufficientDataError);
    CHECK_THROWS_AS(calibrate(Axis::param, few), InsufficientDataError);
    CHECK_THROWS_AS(calibrate(Axis::time, few), InsufficientDataError);
    CHECK_THROWS_AS(calibrate(Axis::compute, data), ConfigError);
  }

  TEST_CASE("time prediction scales midpoints by frequency") {
    const auto dist = make_skill_distribution(0.6, 5);
    const auto p = DynamicsParams::uniform(5.0, 0.05, 0.05, 5);
    CalibrationResult c;
    c.kind = Axis::time;
    c.value = 0.1;
    std::vector<double> mids;
    for (int k = 1; k <= 5; ++k) mids.push_back(predicted_emergence_time(c, dist, p, k, 0.5));
    for (int k = 2; k <= 5; ++k) CHECK(mids[k - 1] / mids[0] == doctest::Approx(std::pow(k, 1.6)).epsilon(1e-12));
    const std::vector<double> grid{mids[2]};
    const auto pred = predict_emergence(c, dist, p, Axis::time, grid);
    CHECK(pred.r_over_s[2][0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pred.r_over_s[0][0] > 0.5);
    CHECK(pred.r_over_s[4][0] < 0.5);
  }

  TEST_CASE("data and param predictions saturate where expected") {
    const auto dist = make_skill_distribution(0.6, 5);
    const auto p = DynamicsParams::uniform(5.0, 0.05, 0.05, 5);
    CalibrationResult dc{Axis::data, 100.0};
    const std::vector<double> grid{std::ceil(100.0 / dist.weight(1)), 0.0};
    const auto pd = predict_emergence(dc, dist, p, Axis::data, grid);
    CHECK(pd.r_over_s[0][0] == 1.0);
    CHECK(pd.r_over_s[1][0] < 1.0);
    CHECK(pd.r_over_s[0][1] == 0.0);
    const auto pb = predict_emergence(dc, dist, p, Axis::data, grid, {.binomial_average = true});
    CHECK(pb.r_over_s[0][0] > 0.5);
    CHECK(pb.r_over_s[0][0] <= 1.0);

    CalibrationResult nc{Axis::param, 4.0};
    const std::vector<double> widths{20.0, 10.0};
    const auto pp = predict_emergence(nc, dist, p, Axis::param, widths);
    for (int k = 1; k <= 5; ++k) CHECK(pp.r_over_s[k - 1][0] == 1.0);
    CHECK(pp.r_over_s[2][1] == 0.5);
    CHECK_THROWS_AS(predict_emergence(nc, dist, p, Axis::data, widths), ConfigError);
    CHECK_THROWS_AS(predicted_emergence_time(nc, dist, p, 1, 0.5), ConfigError);
  }

  TEST_CASE("emergent-time fit on a closed-form record") {
    const auto dist = make_skill_distribution(0.6, 5);
    const auto p = DynamicsParams::uniform(5.0, 0.05, 0.01, 5);
    EmergenceRecord rec;
    rec.S = 5.0;
    for (std::int64_t t = 0; t <= 20000; t += 2) {
      std::vector<double> row;
      for (int k = 1; k <= 5; ++k) row.push_back(analytic_skill_strength(p, k, dist.weight(k), t));
      rec.append(t, row);
    }
    const auto fit = emergent_time_fit(rec, 0.05);
    CHECK(fit.excluded.empty());
    CHECK(fit.fit.exponent == doctest::Approx(1.6).epsilon(0.01 / 1.6));

    EmergenceRecord flat;
    flat.S = 5.0;
    flat.append(0, {0.0, 0.0, 0.0, 0.0});
    flat.append(10, {0.1, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(emergent_time_fit(flat, 0.05), InsufficientDataError);
  }

  TEST_CASE("sweep CSV round-trip") {
    SweepResult res;
    res.axis = Axis::data;
    res.rows = {{100.0, 1, 1, 0.25, 0.5, 0.4}, {100.0, 1, 2, 1.0 / 3.0, 0.5, NAN}};
    std::stringstream buf;
    write_sweep_csv(buf, res);
    CHECK(buf.str().rfind("axis,resource,seed,k,R_over_S,loss,theory_loss\n", 0) == 0);
    const auto back = read_sweep_csv(buf);
    CHECK(back.axis == Axis::data);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].r_over_s == res.rows[1].r_over_s);
    CHECK(back.rows[0].theory_loss == 0.4);
    CHECK(std::isnan(back.rows[1].theory_loss));
  }

  TEST_CASE("zero-step time sweep stays at initialization") {
    auto cfg = small_sweep();
    cfg.train.steps = 0;
    const std::vector<std::uint64_t> seeds{0, 1};
    const auto res = run_sweep(Axis::time, cfg, seeds);
    CHECK(res.failures.empty());
    CHECK(res.rows.size() == 2 * 3);
    for (const auto& r : res.rows) {
      CHECK(r.resource == 0.0);
      CHECK(std::abs(r.r_over_s) < 0.1);
    }
  }

  TEST_CASE("sweeps are reproducible regardless of worker count") {
    auto cfg = small_sweep();
    cfg.grid = {10.0, 40.0};
    const std::vector<std::uint64_t> seeds{3, 4};
    const auto a = run_sweep(Axis::data, cfg, seeds);
    cfg.workers = 1;
    const auto b = run_sweep(Axis::data, cfg, seeds);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.rows.size() == 2 * 2 * 3);
    for (std::size_t j = 0; j < a.rows.size(); ++j) {
      CHECK(a.rows[j].resource == b.rows[j].resource);
      CHECK(a.rows[j].seed == b.rows[j].seed);
      CHECK(a.rows[j].r_over_s == b.rows[j].r_over_s);
    }
    cfg.grid = {1e3, 1e5};
    cfg.n_grid = {10.0, 100.0};
    const auto c1 = run_sweep(Axis::compute, cfg, {});
    const auto c2 = run_sweep(Axis::compute, cfg, {});
    // One row per (N, C), sorted by C; the envelope never exceeds a member.
    REQUIRE(c1.rows.size() == 4);
    REQUIRE(c2.rows.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(c1.rows[j].loss == c2.rows[j].loss);
      CHECK(c1.rows[j].k == 0);
      CHECK(c1.rows[j].theory_loss <= c1.rows[j].loss * (1 + 1e-12));
    }
    CHECK(c1.rows[0].resource <= c1.rows[3].resource);
  }

  TEST_CASE("calibration report") {
    CalibrationResult c{Axis::param, 4.0, 0.0, 0.0, 7};
    const auto text = calibration_report(c);
    CHECK(text.find("kind=param") != std::string::npos);
    CHECK(text.find("N_c=4") != std::string::npos);
    CHECK(text.find("points=7") != std::string::npos);
  }
}
