#include "sto/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sto {

namespace {

// One cyclic Jacobi sweep target: annihilate the (p,q) off-diagonal entry.
inline void jacobi_rotate(std::array<double, 9>& a, int p, int q) {
  double apq = a[3 * p + q];
  if (apq == 0.0) return;
  double app = a[3 * p + p];
  double aqq = a[3 * q + q];
  double tau = (aqq - app) / (2.0 * apq);
  double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                          : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
  double c = 1.0 / std::sqrt(1.0 + t * t);
  double s = t * c;
  for (int k = 0; k < 3; ++k) {
    double akp = a[3 * k + p];
    double akq = a[3 * k + q];
    a[3 * k + p] = c * akp - s * akq;
    a[3 * k + q] = s * akp + c * akq;
  }
  for (int k = 0; k < 3; ++k) {
    double apk = a[3 * p + k];
    double aqk = a[3 * q + k];
    a[3 * p + k] = c * apk - s * aqk;
    a[3 * q + k] = s * apk + c * aqk;
  }
}

inline double offdiag_norm(const std::array<double, 9>& a) {
  return std::abs(a[1]) + std::abs(a[2]) + std::abs(a[5]);
}

}  // namespace

std::array<double, 3> SymTensor3::eigenvalues() const {
  std::array<double, 9> a = {xx, xy, xz, xy, yy, yz, xz, yz, zz};
  double scale = max_abs();
  if (scale == 0.0) return {0.0, 0.0, 0.0};
  for (int sweep = 0; sweep < 32 && offdiag_norm(a) > 1e-18 * scale; ++sweep) {
    jacobi_rotate(a, 0, 1);
    jacobi_rotate(a, 0, 2);
    jacobi_rotate(a, 1, 2);
  }
  std::array<double, 3> ev = {a[0], a[4], a[8]};
  std::sort(ev.begin(), ev.end());
  return ev;
}

bool SymTensor3::is_spd(double rel_threshold) const {
  auto ev = eigenvalues();
  double largest = std::max({std::abs(ev[0]), std::abs(ev[1]), std::abs(ev[2])});
  if (largest == 0.0) return false;
  return ev[0] > rel_threshold * largest;
}

SymTensor3 metric_to_conductivity(const SymTensor3& g) {
  if (!g.is_spd())
    throw DomainError("metric_to_conductivity: metric is not positive definite");
  double d = g.det();
  return g.inverse() * std::sqrt(d);
}

SymTensor3 conductivity_to_metric(const SymTensor3& sigma) {
  if (!sigma.is_spd())
    throw DomainError("conductivity_to_metric: conductivity is not positive definite");
  double d = sigma.det();
  // g^{ij} = (det sigma)^{-1} sigma^{ij}  =>  g_{ij} = det(sigma) * (sigma^{-1})_{ij}
  return sigma.inverse() * d;
}

double volume_density(const SymTensor3& g) {
  if (!g.is_spd())
    throw DomainError("volume_density: metric is not positive definite");
  return std::sqrt(g.det());
}

Mat3 spherical_chart_jacobian(const Vec3& y) {
  double r = y.norm();
  if (r == 0.0) throw DomainError("spherical_chart_jacobian: origin");
  double rho = std::sqrt(y.x * y.x + y.y * y.y);
  if (rho < 1e-14 * r)
    throw DomainError("spherical_chart_jacobian: point on the z-axis (chart singular)");
  double st = rho / r, ct = y.z / r;
  double cp = y.x / rho, sp = y.y / rho;
  Mat3 j;
  // columns: d y / d r, d y / d theta, d y / d phi
  j(0, 0) = st * cp;
  j(1, 0) = st * sp;
  j(2, 0) = ct;
  j(0, 1) = r * ct * cp;
  j(1, 1) = r * ct * sp;
  j(2, 1) = -r * st;
  j(0, 2) = -r * st * sp;
  j(1, 2) = r * st * cp;
  j(2, 2) = 0.0;
  return j;
}

Mat3 spherical_covariant_components(const SymTensor3& g, const Vec3& y) {
  Mat3 j = spherical_chart_jacobian(y);
  return j.transposed() * g.to_mat() * j;
}

Mat3 spherical_density_components(const SymTensor3& sigma, const Vec3& y) {
  Mat3 j = spherical_chart_jacobian(y);
  Mat3 jinv = j.inverse();
  double dj = std::abs(j.det());
  return (jinv * sigma.to_mat() * jinv.transposed()) * dj;
}

}  // namespace sto
