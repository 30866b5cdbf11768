#pragma once

#include <functional>

namespace skillscale {

/// Riemann zeta for real s > 1: direct sum of the first terms plus an
/// Euler-Maclaurin tail. Absolute error below 1e-12 for s >= 1.01.
double zeta(double s);

/// Upper incomplete gamma Gamma(s, x) for s > 0, x >= 0. Series below
/// x = s + 1, Lentz continued fraction above.
double inc_gamma_upper(double s, double x);

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on a finite interval. Intervals are bisected
/// until each one's Kronrod-Gauss difference is below its share of abs_tol.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-10, int max_depth = 50);

struct MinimizeResult {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a minimum of a unimodal f on [lo, hi].
MinimizeResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                       double hi, double x_tol = 1e-10, int max_iter = 200);

}  // namespace skillscale
