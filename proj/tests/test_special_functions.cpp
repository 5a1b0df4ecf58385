#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sto/special_functions.hpp"

using namespace sto;

TEST_CASE("low-order closed forms") {
  double x = 1.7;
  CHECK(sph_bessel_j(0, x) == doctest::Approx(std::sin(x) / x).epsilon(1e-14));
  CHECK(sph_bessel_y(0, x) == doctest::Approx(-std::cos(x) / x).epsilon(1e-14));
  CHECK(sph_bessel_i(0, x) == doctest::Approx(std::sinh(x) / x).epsilon(1e-14));
  CHECK(sph_bessel_k(0, x) ==
        doctest::Approx(0.5 * M_PI * std::exp(-x) / x).epsilon(1e-14));
  CHECK(sph_bessel_j(1, x) ==
        doctest::Approx(std::sin(x) / (x * x) - std::cos(x) / x).epsilon(1e-13));
}

TEST_CASE("Wronskian identity j_l y_l' - j_l' y_l = 1/x^2") {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> ux(0.05, 40.0);
  for (int trial = 0; trial < 400; ++trial) {
    double x = ux(g);
    int l = trial % 13;
    auto [j, jd] = sph_bessel_j_d(l, x);
    auto [y, yd] = sph_bessel_y_d(l, x);
    double w = j * yd - jd * y;
    CHECK(w * x * x == doctest::Approx(1.0).epsilon(1e-11));
  }
}

TEST_CASE("Wronskian identity i_l k_l' - i_l' k_l = -pi/(2 x^2)") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> ux(0.05, 30.0);
  for (int trial = 0; trial < 400; ++trial) {
    double x = ux(g);
    int l = trial % 13;
    auto [i, id] = sph_bessel_i_d(l, x);
    auto [k, kd] = sph_bessel_k_d(l, x);
    double w = i * kd - id * k;
    CHECK(w * x * x == doctest::Approx(-0.5 * M_PI).epsilon(1e-11));
  }
}

TEST_CASE("small-argument leading behavior") {
  // j_l(x) -> x^l / (2l+1)!!
  double x = 1e-3;
  double dfact = 1.0;
  for (int l = 0; l <= 8; ++l) {
    if (l > 0) dfact *= (2 * l + 1);
    double lead = std::pow(x, l) / dfact;
    CHECK(sph_bessel_j(l, x) == doctest::Approx(lead).epsilon(1e-6));
  }
}

namespace {

// Test-side long series for j_l, valid comfortably past the implementation's
// series/recurrence switchover.
double j_series_oracle(int l, double x) {
  double dfact = 1.0;
  for (int k = 3; k <= 2 * l + 1; k += 2) dfact *= k;
  double pref = std::pow(x, l) / dfact;
  double t = 0.5 * x * x, term = 1.0, sum = 1.0;
  for (int k = 1; k <= 120; ++k) {
    term *= -t / (k * (2.0 * (l + k) + 1.0));
    sum += term;
  }
  return pref * sum;
}

}  // namespace

TEST_CASE("series / recurrence agreement near the switchover") {
  for (int l = 1; l <= 10; ++l) {
    double xs = std::sqrt(2.0 * l + 3.0);
    for (double x : {xs * 1.001, xs * 1.3, xs * 2.0}) {
      CHECK(sph_bessel_j(l, x) == doctest::Approx(j_series_oracle(l, x)).epsilon(1e-12));
    }
    // recurrence identity j_{l-1} + j_{l+1} = (2l+1)/x j_l across the regimes
    for (double x : {xs * 0.999, xs * 1.001, 2.5, 9.0}) {
      double lhs = sph_bessel_j(l - 1, x) + sph_bessel_j(l + 1, x);
      double rhs = (2.0 * l + 1.0) / x * sph_bessel_j(l, x);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS(sph_bessel_j(-1, 1.0));
  CHECK_THROWS(sph_bessel_y(0, 0.0));
  CHECK_THROWS(sph_bessel_k(0, -1.0));
}
