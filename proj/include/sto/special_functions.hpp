#pragma once

// Spherical Bessel functions j_l, y_l and their modified counterparts i_l, k_l
// with derivatives, for the constant-coefficient radial solves.  Real
// arguments only; degrees up to a few tens.

#include <utility>

namespace sto {

/// j_l(x), regular at 0.  Series for small x, Miller downward recurrence otherwise.
double sph_bessel_j(int l, double x);
/// y_l(x), singular at 0 (x > 0).
double sph_bessel_y(int l, double x);
/// Modified i_l(x) = sqrt(pi/2x) I_{l+1/2}(x), regular at 0.
double sph_bessel_i(int l, double x);
/// Modified k_l(x) = sqrt(pi/2x) K_{l+1/2}(x); k_0 = (pi/2) e^{-x}/x.
double sph_bessel_k(int l, double x);

/// Value and derivative pairs.
std::pair<double, double> sph_bessel_j_d(int l, double x);
std::pair<double, double> sph_bessel_y_d(int l, double x);
std::pair<double, double> sph_bessel_i_d(int l, double x);
std::pair<double, double> sph_bessel_k_d(int l, double x);

}  // namespace sto
