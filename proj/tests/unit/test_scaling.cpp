#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "skillscale/error.hpp"
#include "skillscale/scaling.hpp"
#include "skillscale/special.hpp"

using namespace skillscale;

namespace {

TheoryParams base(double alpha, double r) {
  TheoryParams tp;
  tp.alpha = alpha;
  tp.S = 1.0;
  tp.r = r;
  tp.eta = 1.0;
  return tp;
}

// Time constant by tanh-sinh quadrature; lambda = inf drops the finite-N term.
double oracle_time_prefactor(double alpha, double S, double r,
                             double lambda = std::numeric_limits<double>::infinity()) {
  const double z = boost::math::zeta(alpha + 1.0);
  const double p = 1.0 / (alpha + 1.0);
  const double logm = std::log(S / r - 1.0);
  const auto f = [&](double u) {
    const double d = 1.0 + std::exp(2.0 * u - logm);
    return 0.5 * S * S / (d * d) * std::pow(u, -p);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  const double u0 = std::isinf(lambda) ? 0.0 : std::pow(lambda, -(alpha + 1.0)) / z;
  const double value = ts.integrate(f, u0, std::numeric_limits<double>::infinity());
  double tail = 0.0;
  if (!std::isinf(lambda)) tail = S * S / (2.0 * alpha * z) * std::pow(lambda, -alpha);
  return std::pow(z, -p) / (alpha + 1.0) * value + tail;
}

}  // namespace

TEST_SUITE("special") {
  TEST_CASE("zeta against boost") {
    for (double s : {1.05, 1.3, 1.6, 2.0, 3.5, 10.0}) {
      CHECK(zeta(s) == doctest::Approx(boost::math::zeta(s)).epsilon(1e-12));
    }
    CHECK(zeta(2.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-13));
  }

  TEST_CASE("upper incomplete gamma against boost") {
    for (double s : {0.2, 0.375, 0.5, 1.0, 2.5}) {
      for (double x : {0.0, 0.01, 0.5, 1.0, 3.0, 10.0, 40.0}) {
        const double expect = boost::math::tgamma(s, x);
        CHECK(inc_gamma_upper(s, x) == doctest::Approx(expect).epsilon(1e-10));
      }
    }
    for (double x : {0.0, 0.3, 2.0, 9.0}) {
      CHECK(inc_gamma_upper(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(inc_gamma_upper(0.0, 1.0), DomainError);
  }

  TEST_CASE("quadrature and minimization") {
    const auto q = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    CHECK(q.value == doctest::Approx(2.0).epsilon(1e-12));
    const auto sq = integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-12);
    CHECK(sq.value == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    const auto m = golden_section_minimize([](double x) { return (x - 1.3) * (x - 1.3) + 2; }, -5, 5);
    CHECK(m.x == doctest::Approx(1.3).epsilon(1e-8));
    CHECK(m.value == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_SUITE("scaling") {
  TEST_CASE("exponents") {
    CHECK(law_exponent(Law::time, 0.6) == doctest::Approx(-0.375));
    CHECK(law_exponent(Law::data, 0.6) == doctest::Approx(-0.375));
    CHECK(law_exponent(Law::param, 0.6) == doctest::Approx(-0.6));
    CHECK(law_exponent(Law::compute, 0.6) == doctest::Approx(-0.6 / 2.6));
    for (Law l : {Law::time, Law::data, Law::param, Law::compute}) {
      CHECK(law_from_string(to_string(l)) == l);
    }
    CHECK_THROWS_AS(law_from_string("energy"), ConfigError);
  }

  TEST_CASE("parameter and data prefactors against boost") {
    for (double alpha : {0.3, 0.6, 0.9}) {
      auto tp = base(alpha, 0.01);
      const double z = boost::math::zeta(alpha + 1.0);
      CHECK(theory_prefactor(Law::param, tp) == doctest::Approx(1.0 / (2 * alpha * z)).epsilon(1e-11));
      tp.gamma_ratio = 0.5;
      CHECK(theory_prefactor(Law::param, tp) ==
            doctest::Approx((1 - std::pow(0.5, alpha)) / (2 * alpha * z)).epsilon(1e-11));
      tp.gamma_ratio = 0.0;
      const double s = alpha / (alpha + 1.0);
      const double data = 0.99 * 0.99 * std::pow(z, -1 / (alpha + 1)) / (2 * (alpha + 1)) *
                          boost::math::tgamma(s);
      CHECK(theory_prefactor(Law::data, tp) == doctest::Approx(data).epsilon(1e-9));
    }
  }

  TEST_CASE("time prefactor against tanh-sinh quadrature") {
    for (double alpha : {0.3, 0.6, 0.9}) {
      for (double r : {1e-2, 1e-4}) {
        const auto tp = base(alpha, r);
        CHECK(time_prefactor(tp, std::numeric_limits<double>::infinity()) ==
              doctest::Approx(oracle_time_prefactor(alpha, 1.0, r)).epsilon(1e-7));
      }
    }
    const auto tp = base(0.6, 1e-2);
    for (double lambda : {0.3, 1.0, 3.0}) {
      CHECK(time_prefactor(tp, lambda) ==
            doctest::Approx(oracle_time_prefactor(0.6, 1.0, 1e-2, lambda)).epsilon(1e-7));
    }
  }

  TEST_CASE("small-r estimate approaches the time prefactor") {
    const auto tp = base(0.6, 1e-4);
    const double exact = theory_prefactor(Law::time, tp);
    CHECK(std::abs(time_prefactor_small_r(tp) / exact - 1.0) < 0.15);
  }

  TEST_CASE("converged losses against direct sums") {
    const auto dist = make_skill_distribution(0.6, 50);
    CHECK(data_loss(dist, 2.0, 0.0) == doctest::Approx(2.0));
    for (double D : {1.0, 10.0, 333.0}) {
      double expect = 0.0;
      for (int k = 1; k <= 50; ++k) expect += std::pow(1 - dist.weight(k), D) * dist.weight(k);
      CHECK(data_loss(dist, 2.0, D) == doctest::Approx(2.0 * expect).epsilon(1e-12));
    }
    for (int N : {0, 1, 7, 50, 80}) {
      double expect = 0.0;
      for (int k = N + 1; k <= 50; ++k) expect += dist.weight(k);
      CHECK(param_loss(dist, 2.0, N) == doctest::Approx(2.0 * expect).epsilon(1e-12).scale(1e-12));
    }
    CHECK_THROWS_AS(data_loss(dist, 1.0, -1.0), DomainError);
  }

  TEST_CASE("time loss starts at the initial loss") {
    auto tp = base(0.6, 0.01);
    tp.n_s = 20;
    tp.N = 20;
    const auto dist = make_skill_distribution(0.6, 20);
    CHECK(time_loss(tp, dist, 0.0) == doctest::Approx(0.5 * 0.99 * 0.99).epsilon(1e-12));
    CHECK(time_loss(tp, dist, 1e7) < 1e-12);
    tp.N = 5;
    double tail = 0.0;
    for (int k = 6; k <= 20; ++k) tail += dist.weight(k);
    CHECK(time_loss(tp, dist, 1e9) == doctest::Approx(0.5 * tail).epsilon(1e-9));
  }

  TEST_CASE("stage times") {
    auto tp = base(0.6, 0.01);
    tp.S = 5.0;
    tp.eta = 0.05;
    tp.n_s = 5;
    const auto s1 = stage_times(tp, 1, 0.05);
    const auto s2 = stage_times(tp, 2, 0.05);
    CHECK(s2.tau_emerge / s1.tau_emerge == doctest::Approx(std::pow(2.0, 1.6)).epsilon(1e-12));
    CHECK(s2.tau_saturate / s1.tau_saturate == doctest::Approx(std::pow(2.0, 1.6)).epsilon(1e-12));
    const double p1 = make_skill_distribution(0.6, 5).weight(1);
    CHECK(s1.tau_emerge == doctest::Approx(std::log(499.0 / 19.0) / (2 * 0.05 * p1 * 5)).epsilon(1e-12));
    for (int k = 1; k < 5; ++k) {
      const auto here = stage_times(tp, k, 0.05);
      const auto next = stage_times(tp, k + 1, 0.05);
      CHECK(check_stage_like(tp, k, 0.05) ==
            (here.tau_saturate < next.tau_emerge - here.tau_emerge));
    }
    CHECK(check_stage_like(tp, 5, 0.05));
    CHECK_THROWS_AS(stage_times(tp, 1, 0.6), DomainError);
    CHECK_THROWS_AS(stage_times(tp, 6, 0.05), DomainError);
  }

  TEST_CASE("regime classification") {
    CHECK(regime_check(10, 1e8, 1e3, 1e5, 0.6).regime == Regime::time_bound);
    CHECK(regime_check(1e4, 1e15, 10, 1e5, 0.6).regime == Regime::param_bound);
    CHECK(regime_check(1e6, 100, 1e3, 1e5, 0.6).regime == Regime::data_bound);
    const auto opt = regime_check(40, 1, 10, 1e5, 0.6);
    CHECK(opt.regime == Regime::compute_optimal);
    CHECK(opt.n_pow_over_t == doctest::Approx(std::pow(10.0, 1.6) / 40));
    CHECK(regime_check(10, 1e8, 1e3, 100, 0.6).params_exceed_skills);
    CHECK_THROWS_AS(regime_check(0, 1, 1, 1, 0.6), DomainError);
  }

  TEST_CASE("power-law fits") {
    std::vector<CurvePoint> exact, flat, noisy;
    for (double x : log_grid(1.0, 1e4, 30)) {
      exact.push_back({x, 3.0 * std::pow(x, -0.5)});
      flat.push_back({x, 0.7});
      const double wiggle = exact.size() % 2 ? 1.01 : 0.99;
      noisy.push_back({x, 2.0 * std::pow(x, -0.3) * wiggle});
    }
    const auto e = fit_power_law(exact);
    CHECK(e.exponent == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(e.prefactor() == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(e.r_squared == doctest::Approx(1.0));
    CHECK(e.predict(100.0) == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(fit_power_law(flat).exponent == doctest::Approx(0.0).scale(1.0));
    CHECK(std::abs(fit_power_law(noisy).exponent + 0.3) < 0.01);
    const auto window = fit_power_law(exact, 10.0, 100.0, 3);
    CHECK(window.points >= 3);
    CHECK(window.window_lo >= 10.0);
    CHECK_THROWS_AS(fit_power_law(exact, 10.0, 11.0), InsufficientDataError);
  }

  TEST_CASE("fixed-exponent fit with offset") {
    std::vector<CurvePoint> pts;
    for (double x : log_grid(1.0, 1e3, 20)) pts.push_back({x, 2.0 * std::pow(x, -0.3) - 0.1});
    const auto fit = fit_fixed_exponent(pts, -0.3, 0.1);
    CHECK(fit.amplitude == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(fit.rms_log_residual < 1e-8);
    CHECK(corrected_time_loss(0.6, 0.2, 5.0, 1.0, 5.0) == doctest::Approx(1.0));
    CHECK(corrected_time_loss(0.6, 0.0, 1.0, 1.0, 2.0) == doctest::Approx(std::pow(2.0, -0.375)));
  }

  TEST_CASE("theory CSV and grids") {
    const auto grid = log_grid(1.0, 1e3, 4);
    REQUIRE(grid.size() == 4);
    CHECK(grid.front() == 1.0);
    CHECK(grid.back() == doctest::Approx(1e3));
    CHECK(grid[1] == doctest::Approx(10.0));
    auto tp = base(0.6, 0.01);
    tp.n_s = 100;
    const auto curve = theory_curve(Law::param, tp, grid);
    std::stringstream buf;
    write_theory_csv(buf, curve, Law::param, 0.6);
    CHECK(buf.str().rfind("resource,loss,law,alpha\n", 0) == 0);
    const auto back = read_theory_csv(buf);
    REQUIRE(back.size() == curve.size());
    for (std::size_t j = 0; j < curve.size(); ++j) {
      CHECK(back[j].resource == curve[j].resource);
      CHECK(back[j].loss == curve[j].loss);
    }
  }
}
