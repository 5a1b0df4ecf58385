#include "sto/special_functions.hpp"

#include <cmath>
#include <limits>

#include "sto/errors.hpp"

namespace sto {

namespace {

// Leading series j_l(x) = x^l/(2l+1)!! * (1 - t/(1!(2l+3)) + t^2/(2!(2l+3)(2l+5)) - ...),
// t = x^2/2.  Converges fast for x^2 < 2l+3.
double sph_j_series(int l, double x) {
  double dfact = 1.0;
  for (int k = 3; k <= 2 * l + 1; k += 2) dfact *= k;
  double pref = 1.0;
  for (int k = 0; k < l; ++k) pref *= x;
  pref /= dfact;
  double t = 0.5 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 40; ++k) {
    term *= -t / (k * (2.0 * (l + k) + 1.0));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return pref * sum;
}

}  // namespace

double sph_bessel_j(int l, double x) {
  if (l < 0) throw DomainError("sph_bessel_j: negative degree");
  if (x < 0) throw DomainError("sph_bessel_j: negative argument");
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  if (x * x < 2.0 * l + 3.0) return sph_j_series(l, x);
  if (l == 0) return std::sin(x) / x;
  // Miller downward recurrence j_{k-1} = (2k+1)/x j_k - j_{k+1}, normalized by
  // j_0.  The start index sits well past the turning point so the dominant
  // solution has decayed below round-off by the time degree l is reached.
  int m = l + 30 + static_cast<int>(1.7 * x);
  double jp1 = 0.0, jk = 1e-280, jl = 0.0;
  for (int k = m; k >= 1; --k) {
    double jm1 = (2.0 * k + 1.0) / x * jk - jp1;
    if (k - 1 == l) jl = jm1;
    jp1 = jk;
    jk = jm1;
    if (std::abs(jk) > 1e260) {
      jk *= 1e-260;
      jp1 *= 1e-260;
      jl *= 1e-260;
    }
  }
  // jk now holds the unnormalized j_0.
  return jl * (std::sin(x) / x) / jk;
}

double sph_bessel_y(int l, double x) {
  if (l < 0) throw DomainError("sph_bessel_y: negative degree");
  if (x <= 0) throw DomainError("sph_bessel_y: non-positive argument");
  double y0 = -std::cos(x) / x;
  if (l == 0) return y0;
  double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
  if (l == 1) return y1;
  // Upward recurrence y_{k+1} = (2k+1)/x y_k - y_{k-1} is stable for y.
  double a = y0, b = y1;
  for (int k = 1; k < l; ++k) {
    double c = (2.0 * k + 1.0) / x * b - a;
    a = b;
    b = c;
  }
  return b;
}

double sph_bessel_i(int l, double x) {
  if (l < 0) throw DomainError("sph_bessel_i: negative degree");
  if (x < 0) throw DomainError("sph_bessel_i: negative argument");
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  double i0 = (x < 1e-4) ? 1.0 + x * x / 6.0 : std::sinh(x) / x;
  if (l == 0) return i0;
  // Downward Miller recurrence i_{k-1} = i_{k+1} + (2k+1)/x i_k, normalized by i_0.
  int m = l + 30 + static_cast<int>(1.7 * x);
  double ip1 = 0.0, ik = 1e-280, il = 0.0;
  for (int k = m; k >= 1; --k) {
    double im1 = ip1 + (2.0 * k + 1.0) / x * ik;
    if (k - 1 == l) il = im1;
    ip1 = ik;
    ik = im1;
    if (std::abs(ik) > 1e260) {
      ik *= 1e-260;
      ip1 *= 1e-260;
      il *= 1e-260;
    }
  }
  return il * i0 / ik;
}

double sph_bessel_k(int l, double x) {
  if (l < 0) throw DomainError("sph_bessel_k: negative degree");
  if (x <= 0) throw DomainError("sph_bessel_k: non-positive argument");
  const double half_pi = 1.5707963267948966;
  double k0 = half_pi * std::exp(-x) / x;
  if (l == 0) return k0;
  double k1 = k0 * (1.0 + 1.0 / x);
  if (l == 1) return k1;
  // Upward recurrence k_{l+1} = k_{l-1} + (2l+1)/x k_l is stable (k grows in l).
  double a = k0, b = k1;
  for (int k = 1; k < l; ++k) {
    double c = a + (2.0 * k + 1.0) / x * b;
    a = b;
    b = c;
  }
  return b;
}

std::pair<double, double> sph_bessel_j_d(int l, double x) {
  double jl = sph_bessel_j(l, x);
  if (l == 0) return {jl, -sph_bessel_j(1, x)};
  double jm1 = sph_bessel_j(l - 1, x);
  return {jl, jm1 - (l + 1.0) / x * jl};
}

std::pair<double, double> sph_bessel_y_d(int l, double x) {
  double yl = sph_bessel_y(l, x);
  if (l == 0) return {yl, -sph_bessel_y(1, x)};
  double ym1 = sph_bessel_y(l - 1, x);
  return {yl, ym1 - (l + 1.0) / x * yl};
}

std::pair<double, double> sph_bessel_i_d(int l, double x) {
  double il = sph_bessel_i(l, x);
  if (x == 0.0) return {il, l == 1 ? 1.0 / 3.0 : 0.0};
  if (l == 0) return {il, sph_bessel_i(1, x)};
  double im1 = sph_bessel_i(l - 1, x);
  return {il, im1 - (l + 1.0) / x * il};
}

std::pair<double, double> sph_bessel_k_d(int l, double x) {
  double kl = sph_bessel_k(l, x);
  if (l == 0) return {kl, -sph_bessel_k(1, x)};
  double km1 = sph_bessel_k(l - 1, x);
  return {kl, -km1 - (l + 1.0) / x * kl};
}

}  // namespace sto
