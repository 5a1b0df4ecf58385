#include "sto/maps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sto {

namespace {

// Jacobian of a radial map x -> f(|x|) x/|x|: f'(r) P_r + (f(r)/r) P_t.
Mat3 radial_jacobian(const Vec3& x, double f, double fp) {
  double r = x.norm();
  Vec3 n = x / r;
  Mat3 j;
  double t = f / r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) j(i, k) = (fp - t) * n[i] * n[k] + (i == k ? t : 0.0);
  return j;
}

}  // namespace

DiffeoMap identity_map() {
  DiffeoMap m;
  m.forward = [](const Vec3& x) { return x; };
  m.inverse = [](const Vec3& y) { return y; };
  m.jacobian = [](const Vec3&) { return Mat3::identity(); };
  m.name = "identity";
  return m;
}

DiffeoMap blowup_point_map() {
  DiffeoMap m;
  m.forward = [](const Vec3& x) {
    double r = x.norm();
    return x * ((r / 2.0 + 1.0) / r);
  };
  m.inverse = [](const Vec3& y) {
    double r = y.norm();
    if (r <= 1.0)
      throw SingularSetError("blowup_point_map: inverse requested at |y| <= 1");
    return y * (2.0 * (r - 1.0) / r);
  };
  m.jacobian = [](const Vec3& x) {
    double r = x.norm();
    return radial_jacobian(x, r / 2.0 + 1.0, 0.5);
  };
  m.domain_singular = SingularSupport::at_point({0, 0, 0});
  m.image_singular = SingularSupport::on_sphere(1.0);
  m.name = "blowup_point";
  return m;
}

DiffeoMap truncation_map(double R) {
  if (!(R > 1.0 && R < 2.0))
    throw ParameterError("truncation_map: R must lie in (1,2), got " + std::to_string(R));
  double rho = 2.0 * (R - 1.0);
  // The map is nonsingular: {|y| < rho} is simply outside the domain (the
  // sphere |y| = rho itself maps onto the truncation sphere |x| = R).
  const double edge = rho * (1.0 - 1e-12);
  DiffeoMap m;
  m.forward = [rho, edge](const Vec3& y) {
    double r = y.norm();
    if (r < edge)
      throw SingularSetError("truncation_map: |y| < rho is outside the domain");
    if (r > 2.0) return y;
    return y * ((r / 2.0 + 1.0) / r);
  };
  m.inverse = [R](const Vec3& x) {
    double r = x.norm();
    if (r < R * (1.0 - 1e-12))
      throw SingularSetError("truncation_map: inverse requested at |x| < R");
    if (r > 2.0) return x;
    return x * (2.0 * (r - 1.0) / r);
  };
  m.jacobian = [edge](const Vec3& y) {
    double r = y.norm();
    if (r < edge)
      throw SingularSetError("truncation_map: Jacobian at |y| < rho");
    if (r > 2.0) return Mat3::identity();
    return radial_jacobian(y, r / 2.0 + 1.0, 0.5);
  };
  m.name = "truncation_R=" + std::to_string(R);
  return m;
}

DiffeoMap radial_map(std::function<double(double)> f, std::function<double(double)> fprime,
                     std::function<double(double)> finv, std::string name) {
  DiffeoMap m;
  m.forward = [f](const Vec3& x) {
    double r = x.norm();
    if (r == 0.0) return x;
    return x * (f(r) / r);
  };
  m.inverse = [finv](const Vec3& y) {
    double r = y.norm();
    if (r == 0.0) return y;
    return y * (finv(r) / r);
  };
  m.jacobian = [f, fprime](const Vec3& x) {
    double r = x.norm();
    if (r == 0.0) {
      // isotropic limit f(r)/r -> f'(0)
      return Mat3::identity() * fprime(0.0);
    }
    return radial_jacobian(x, f(r), fprime(r));
  };
  m.name = std::move(name);
  return m;
}

DiffeoMap compose(const DiffeoMap& g, const DiffeoMap& f) {
  DiffeoMap m;
  m.forward = [g, f](const Vec3& x) { return g.apply(f.apply(x)); };
  m.inverse = [g, f](const Vec3& y) { return f.apply_inverse(g.apply_inverse(y)); };
  m.jacobian = [g, f](const Vec3& x) {
    Vec3 mid = f.apply(x);
    return g.jacobian_at(mid) * f.jacobian_at(x);
  };
  m.domain_singular = f.domain_singular;
  m.image_singular = g.image_singular;
  m.name = g.name + "*" + f.name;
  return m;
}

SymTensor3 pushforward_metric(const DiffeoMap& f, const SymTensorField& g, const Vec3& y) {
  if (f.image_singular.distance(y) < kSingularGuard)
    throw SingularSetError("pushforward_metric: evaluation on image singular set");
  Vec3 x = f.inverse(y);
  Mat3 jinv = f.jacobian_at(x).inverse();  // Jacobian of F^{-1} at y
  Mat3 gm = g(x).to_mat();
  return SymTensor3::from_mat_symmetrized(jinv.transposed() * gm * jinv);
}

SymTensor3 pushforward_conductivity(const DiffeoMap& f, const SymTensorField& sigma,
                                    const Vec3& y) {
  if (f.image_singular.distance(y) < kSingularGuard)
    throw SingularSetError("pushforward_conductivity: evaluation on image singular set");
  Vec3 x = f.inverse(y);
  Mat3 j = f.jacobian_at(x);
  double dj = std::abs(j.det());
  if (dj == 0.0) throw SingularSetError("pushforward_conductivity: degenerate Jacobian");
  Mat3 sm = sigma(x).to_mat();
  // Contravariant placement: DF sigma DF^T / |det DF|.  The printed formula
  // with the transpose on the left coincides for radial (symmetric-Jacobian)
  // maps; this orientation is the one consistent with the metric route.
  return SymTensor3::from_mat_symmetrized((j * sm * j.transposed()) * (1.0 / dj));
}

double pushforward_density(const DiffeoMap& f, const ScalarField& w, const Vec3& y) {
  if (f.image_singular.distance(y) < kSingularGuard)
    throw SingularSetError("pushforward_density: evaluation on image singular set");
  Vec3 x = f.inverse(y);
  double dj = std::abs(f.jacobian_at(x).det());
  return w(x) / dj;
}

namespace {

// Smallest singular value of a 3x3 matrix.  Computed from the largest
// eigenvalue of the inverse Gram matrix, which stays well-conditioned when the
// singular values are wildly mixed (the blow-up Jacobian near gamma).
double smallest_singular_value(const Mat3& j) {
  double d = j.det();
  if (d == 0.0 || !std::isfinite(d)) return 0.0;
  Mat3 jinv = j.inverse();
  SymTensor3 gram = SymTensor3::from_mat_symmetrized(jinv * jinv.transposed());
  auto ev = gram.eigenvalues();
  if (!(ev[2] > 0.0)) return 0.0;
  return 1.0 / std::sqrt(ev[2]);
}

}  // namespace

SingularMapReport validate_singular_map(const DiffeoMap& f, const Vec3& gamma,
                                        int sample_count, unsigned seed) {
  if (sample_count < 2) throw ParameterError("validate_singular_map: need >= 2 samples");
  SingularMapReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Log-spaced approach distances; random directions.
  const double d_far = 0.5, d_near = 1e-6;
  double c0 = std::numeric_limits<double>::infinity();
  double c1 = std::numeric_limits<double>::infinity();
  std::vector<double> logs_d, logs_det;
  for (int i = 0; i < sample_count; ++i) {
    double frac = static_cast<double>(i) / (sample_count - 1);
    double d = d_far * std::pow(d_near / d_far, frac);
    Vec3 dir;
    do {
      dir = {unit(rng), unit(rng), unit(rng)};
    } while (dir.norm() < 1e-3 || dir.norm() > 1.0);
    Vec3 x = gamma + dir.normalized() * d;
    SingularMapReport::Sample s;
    s.dist = d;
    try {
      Mat3 j = f.jacobian_at(x);
      s.sigma_min = smallest_singular_value(j);
      s.det = j.det();
      s.evaluable = true;
      c0 = std::min(c0, s.sigma_min);
      c1 = std::min(c1, s.det * d);
      logs_d.push_back(std::log(d));
      logs_det.push_back(std::log(std::max(std::abs(s.det), 1e-300)));
    } catch (const SingularSetError&) {
      s.evaluable = false;
    }
    rep.samples.push_back(s);
  }
  if (logs_d.size() >= 2) {
    // least-squares slope of log(det) vs log(dist)
    double n = static_cast<double>(logs_d.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logs_d.size(); ++i) {
      sx += logs_d[i];
      sy += logs_det[i];
      sxx += logs_d[i] * logs_d[i];
      sxy += logs_d[i] * logs_det[i];
    }
    rep.det_loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  rep.c0_fit = std::isfinite(c0) ? c0 : 0.0;
  rep.c1_fit = std::isfinite(c1) ? c1 : 0.0;
  rep.det_blows_up = rep.det_loglog_slope <= -0.9;
  return rep;
}

}  // namespace sto
