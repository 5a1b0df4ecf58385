#pragma once

// Value types for points, 3x3 matrices, symmetric tensors and tensor fields,
// plus the metric <-> conductivity correspondence sigma^{ij} = |g|^{1/2} g^{ij}.
// Tensors are stored and exchanged in Cartesian components; spherical-chart
// representations exist only as conversion views (the spherical chart is
// singular on the z-axis).

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "sto/errors.hpp"

namespace sto {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    if (n == 0.0) throw DomainError("Vec3::normalized: zero vector");
    return *this / n;
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Point3 = Vec3;

/// General (not necessarily symmetric) 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{};  // m[3*i+j]

  static Mat3 identity() {
    Mat3 r;
    r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
  }
  static Mat3 zero() { return Mat3{}; }

  double& operator()(int i, int j) { return m[3 * i + j]; }
  double operator()(int i, int j) const { return m[3 * i + j]; }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }
  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
    return r;
  }
  Mat3 operator*(double s) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
    return r;
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Mat3 inverse() const {
    double d = det();
    if (d == 0.0 || !std::isfinite(d)) throw DomainError("Mat3::inverse: singular matrix");
    Mat3 r;
    r(0, 0) = (m[4] * m[8] - m[5] * m[7]) / d;
    r(0, 1) = (m[2] * m[7] - m[1] * m[8]) / d;
    r(0, 2) = (m[1] * m[5] - m[2] * m[4]) / d;
    r(1, 0) = (m[5] * m[6] - m[3] * m[8]) / d;
    r(1, 1) = (m[0] * m[8] - m[2] * m[6]) / d;
    r(1, 2) = (m[2] * m[3] - m[0] * m[5]) / d;
    r(2, 0) = (m[3] * m[7] - m[4] * m[6]) / d;
    r(2, 1) = (m[1] * m[6] - m[0] * m[7]) / d;
    r(2, 2) = (m[0] * m[4] - m[1] * m[3]) / d;
    return r;
  }

  double max_abs() const {
    double r = 0;
    for (double v : m) r = std::max(r, std::abs(v));
    return r;
  }
};

/// Symmetric 3x3 tensor: six independent components.  Houses metrics g_{ij},
/// inverse metrics g^{ij}, conductivities sigma^{ij}, permittivities and
/// permeabilities.  Symmetry is exact by construction.
struct SymTensor3 {
  double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;

  static SymTensor3 identity() { return {1, 1, 1, 0, 0, 0}; }
  static SymTensor3 scalar(double s) { return {s, s, s, 0, 0, 0}; }
  static SymTensor3 diagonal(double a, double b, double c) { return {a, b, c, 0, 0, 0}; }

  /// a * rhat rhat^T + b * (I - rhat rhat^T) for a unit direction rhat:
  /// the radial/tangential eigenvalue form every medium in this toolkit uses.
  static SymTensor3 radial_tangential(const Vec3& rhat, double a, double b) {
    SymTensor3 t;
    t.xx = b + (a - b) * rhat.x * rhat.x;
    t.yy = b + (a - b) * rhat.y * rhat.y;
    t.zz = b + (a - b) * rhat.z * rhat.z;
    t.xy = (a - b) * rhat.x * rhat.y;
    t.xz = (a - b) * rhat.x * rhat.z;
    t.yz = (a - b) * rhat.y * rhat.z;
    return t;
  }

  static SymTensor3 from_mat_symmetrized(const Mat3& m) {
    SymTensor3 t;
    t.xx = m(0, 0);
    t.yy = m(1, 1);
    t.zz = m(2, 2);
    t.xy = 0.5 * (m(0, 1) + m(1, 0));
    t.xz = 0.5 * (m(0, 2) + m(2, 0));
    t.yz = 0.5 * (m(1, 2) + m(2, 1));
    return t;
  }

  Mat3 to_mat() const {
    Mat3 m;
    m.m = {xx, xy, xz, xy, yy, yz, xz, yz, zz};
    return m;
  }

  SymTensor3 operator+(const SymTensor3& o) const {
    return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy, xz + o.xz, yz + o.yz};
  }
  SymTensor3 operator-(const SymTensor3& o) const {
    return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
  }
  SymTensor3 operator*(double s) const {
    return {xx * s, yy * s, zz * s, xy * s, xz * s, yz * s};
  }

  Vec3 apply(const Vec3& v) const {
    return {xx * v.x + xy * v.y + xz * v.z,
            xy * v.x + yy * v.y + yz * v.z,
            xz * v.x + yz * v.y + zz * v.z};
  }

  double quad(const Vec3& v) const { return v.dot(apply(v)); }

  double trace() const { return xx + yy + zz; }

  double det() const {
    return xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) +
           xz * (xy * yz - yy * xz);
  }

  SymTensor3 inverse() const {
    double d = det();
    if (d == 0.0 || !std::isfinite(d))
      throw DomainError("SymTensor3::inverse: singular tensor");
    SymTensor3 r;
    r.xx = (yy * zz - yz * yz) / d;
    r.yy = (xx * zz - xz * xz) / d;
    r.zz = (xx * yy - xy * xy) / d;
    r.xy = (xz * yz - xy * zz) / d;
    r.xz = (xy * yz - xz * yy) / d;
    r.yz = (xy * xz - xx * yz) / d;
    return r;
  }

  double max_abs() const {
    double r = 0;
    for (double v : {xx, yy, zz, xy, xz, yz}) r = std::max(r, std::abs(v));
    return r;
  }

  /// Eigenvalues in ascending order (cyclic Jacobi; machine precision for the
  /// SPD threshold test, which Cardano formulas cannot guarantee).
  std::array<double, 3> eigenvalues() const;

  /// Smallest eigenvalue > spd_threshold * largest eigenvalue.
  bool is_spd(double rel_threshold = 1e-14) const;
};

/// sigma^{ij} = |g|^{1/2} g^{ij}: the conductivity (or mass-density /
/// permittivity) associated to a positive definite metric g_{ij}.
SymTensor3 metric_to_conductivity(const SymTensor3& g);

/// Inverse correspondence for n=3: g^{ij} = (det sigma)^{-1} sigma^{ij},
/// returned as the covariant metric g_{ij}.
SymTensor3 conductivity_to_metric(const SymTensor3& sigma);

/// |g|^{1/2} = sqrt(det g_{jk}); the bulk-modulus density.  Satisfies
/// |g| = (det sigma)^2 when sigma = metric_to_conductivity(g).
double volume_density(const SymTensor3& g);

/// Jacobian d(x,y,z)/d(r,theta,phi) of the spherical chart at y (|y| > 0,
/// off the z-axis for an invertible result).
Mat3 spherical_chart_jacobian(const Vec3& y);

/// Components of a covariant 2-tensor (metric) in the spherical coordinate
/// basis: J^T g J.
Mat3 spherical_covariant_components(const SymTensor3& g, const Vec3& y);

/// Components of a contravariant weight-1 density (conductivity) in the
/// spherical coordinate basis: |det J| * J^{-1} sigma J^{-T}.  This is the
/// representation in which radially symmetric cloak tensors are usually written.
Mat3 spherical_density_components(const SymTensor3& sigma, const Vec3& y);

/// Declared singular support of a field: nothing, a point, or a sphere |x|=r.
/// Evaluations within `guard` of the support raise SingularSetError.
struct SingularSupport {
  enum class Kind { none, point, sphere };
  Kind kind = Kind::none;
  Vec3 point{};
  double radius = 0.0;

  static SingularSupport none() { return {}; }
  static SingularSupport at_point(const Vec3& p) {
    SingularSupport s;
    s.kind = Kind::point;
    s.point = p;
    return s;
  }
  static SingularSupport on_sphere(double r, const Vec3& center = {}) {
    SingularSupport s;
    s.kind = Kind::sphere;
    s.radius = r;
    s.point = center;
    return s;
  }

  double distance(const Vec3& x) const {
    switch (kind) {
      case Kind::none:
        return std::numeric_limits<double>::infinity();
      case Kind::point:
        return (x - point).norm();
      case Kind::sphere:
        return std::abs((x - point).norm() - radius);
    }
    return std::numeric_limits<double>::infinity();
  }
};

constexpr double kSingularGuard = 1e-12;

/// Position-dependent symmetric tensor: evaluation rule plus declared
/// singular support.  Positive definite everywhere off the support.
class SymTensorField {
public:
  SymTensorField() = default;
  SymTensorField(std::function<SymTensor3(const Vec3&)> rule, SingularSupport support,
                 std::string name = "")
      : rule_(std::move(rule)), support_(support), name_(std::move(name)) {}

  static SymTensorField constant(const SymTensor3& t, std::string name = "constant") {
    return SymTensorField([t](const Vec3&) { return t; }, SingularSupport::none(),
                          std::move(name));
  }

  /// Radial medium a(r) rhat rhat^T + b(r) (I - rhat rhat^T).
  static SymTensorField radial(std::function<double(double)> a,
                               std::function<double(double)> b,
                               SingularSupport support, std::string name = "radial") {
    return SymTensorField(
        [a = std::move(a), b = std::move(b)](const Vec3& x) {
          double r = x.norm();
          if (r == 0.0) {
            // isotropic limit at the origin
            return SymTensor3::scalar(b(0.0));
          }
          return SymTensor3::radial_tangential(x / r, a(r), b(r));
        },
        support, std::move(name));
  }

  SymTensor3 operator()(const Vec3& x) const {
    if (support_.distance(x) < kSingularGuard)
      throw SingularSetError("SymTensorField '" + name_ +
                             "': evaluation on declared singular support");
    return rule_(x);
  }

  const SingularSupport& support() const { return support_; }
  const std::string& name() const { return name_; }

private:
  std::function<SymTensor3(const Vec3&)> rule_;
  SingularSupport support_{};
  std::string name_;
};

/// Scalar field with the same singular-support discipline (bulk moduli,
/// potentials, sources).
class ScalarField {
public:
  ScalarField() = default;
  ScalarField(std::function<double(const Vec3&)> rule, SingularSupport support,
              std::string name = "")
      : rule_(std::move(rule)), support_(support), name_(std::move(name)) {}

  static ScalarField constant(double v, std::string name = "constant") {
    return ScalarField([v](const Vec3&) { return v; }, SingularSupport::none(),
                       std::move(name));
  }

  double operator()(const Vec3& x) const {
    if (support_.distance(x) < kSingularGuard)
      throw SingularSetError("ScalarField '" + name_ +
                             "': evaluation on declared singular support");
    return rule_(x);
  }

  const SingularSupport& support() const { return support_; }

private:
  std::function<double(const Vec3&)> rule_;
  SingularSupport support_{};
  std::string name_;
};

}  // namespace sto
