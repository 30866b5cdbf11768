#include "skillscale/special.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "skillscale/error.hpp"

namespace skillscale {

double zeta(double s) {
  if (!(s > 1.0)) throw DomainError("zeta needs s > 1");
  constexpr int kTerms = 20;
  // B_{2j} / (2j)! for j = 1..8.
  constexpr std::array<double, 8> kBernoulliOverFactorial = {
      1.0 / 12.0,
      -1.0 / 720.0,
      1.0 / 30240.0,
      -1.0 / 1209600.0,
      1.0 / 47900160.0,
      -691.0 / 1307674368000.0,
      1.0 / 74724249600.0,
      -3617.0 / 10670622842880000.0,
  };
  double sum = 0.0;
  for (int n = kTerms - 1; n >= 1; --n) sum += std::pow(n, -s);
  const double K = kTerms;
  sum += std::pow(K, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(K, -s);
  // Term j: B_{2j}/(2j)! * s(s+1)...(s+2j-2) * K^{-s-2j+1}.
  double rising = s;
  double kpow = std::pow(K, -s - 1.0);
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    sum += kBernoulliOverFactorial[j] * rising * kpow;
    rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
    kpow /= K * K;
  }
  return sum;
}

double inc_gamma_upper(double s, double x) {
  if (!(s > 0.0)) throw DomainError("incomplete gamma needs s > 0");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma needs x >= 0");
  if (x == 0.0) return std::tgamma(s);
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 10000;
  const double log_prefactor = s * std::log(x) - x;
  if (x < s + 1.0) {
    // gamma(s, x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n)).
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
      term *= x / (s + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return std::tgamma(s) - sum * std::exp(log_prefactor);
  }
  // Modified Lentz evaluation of the continued fraction for Gamma(s, x).
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor) * h;
}

namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the 7-point rule at Kronrod nodes 1, 3, 5, 7.
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double kronrod;
  double gauss;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(mid);
  double k = fc * kKronrodWeights[7];
  double g = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(mid - dx) + f(mid + dx);
    k += kKronrodWeights[j] * pair;
    if (j % 2 == 1) g += kGaussWeights[j / 2] * pair;
  }
  return {k * half, g * half};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth,
           QuadratureResult& out) {
  const Panel p = gk15(f, a, b);
  const double err = std::abs(p.kronrod - p.gauss);
  if (!std::isfinite(p.kronrod)) throw NumericError("quadrature: non-finite integrand");
  if (err <= tol || depth <= 0) {
    out.value += p.kronrod;
    out.abs_error += err;
    ++out.intervals;
    return;
  }
  const double mid = 0.5 * (a + b);
  adapt(f, a, mid, 0.5 * tol, depth - 1, out);
  adapt(f, mid, b, 0.5 * tol, depth - 1, out);
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, int max_depth) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("quadrature needs finite limits");
  QuadratureResult out;
  if (a == b) return out;
  adapt(f, a, b, abs_tol, max_depth, out);
  return out;
}

MinimizeResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                       double hi, double x_tol, int max_iter) {
  if (!(lo < hi)) throw DomainError("golden section needs lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // The bracket endpoints are candidates too when the minimum sits on a bound.
  MinimizeResult best{c, fc};
  if (fd < best.value) best = {d, fd};
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx < best.value) best = {x, fx};
  }
  return best;
}

}  // namespace skillscale
