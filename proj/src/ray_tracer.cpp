#include "sto/ray_tracer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sto/ode.hpp"

namespace sto {

namespace {

// --- metric implementations -------------------------------------------------

class EuclideanRayMetric final : public RayMetric {
public:
  SymTensor3 inverse_metric(const Vec3&, int) const override {
    return SymTensor3::identity();
  }
  std::array<SymTensor3, 3> inverse_metric_grad(const Vec3&, int) const override {
    return {SymTensor3{}, SymTensor3{}, SymTensor3{}};
  }
};

// alpha(r) rhat rhat + beta(r) (I - rhat rhat), analytic gradient:
//   d_k G^{ij} = alpha' n_k n_i n_j + beta' n_k (d_ij - n_i n_j)
//              + (alpha - beta) [d(n_i n_j)/d x_k]
//   with d(n_i n_j)/dx_k = (d_ik n_j + d_jk n_i - 2 n_i n_j n_k)/r.
struct RadialPiece {
  std::function<double(double)> alpha, alpha_prime, beta, beta_prime;
};

class PiecewiseRadialRayMetric final : public RayMetric {
public:
  PiecewiseRadialRayMetric(std::vector<RadialPiece> pieces, std::vector<double> radii,
                           std::optional<double> singular_r, int singular_region)
      : pieces_(std::move(pieces)),
        radii_(std::move(radii)),
        singular_r_(singular_r),
        singular_region_(singular_region) {}

  std::vector<double> interface_radii() const override { return radii_; }

  SymTensor3 inverse_metric(const Vec3& x, int region) const override {
    const auto& pc = pieces_.at(region);
    double r = x.norm();
    if (r == 0.0) return SymTensor3::scalar(pc.beta(0.0));
    return SymTensor3::radial_tangential(x / r, pc.alpha(r), pc.beta(r));
  }

  std::array<SymTensor3, 3> inverse_metric_grad(const Vec3& x, int region) const override {
    const auto& pc = pieces_.at(region);
    double r = x.norm();
    Vec3 n = x / r;
    double al = pc.alpha(r), be = pc.beta(r);
    double alp = pc.alpha_prime(r), bep = pc.beta_prime(r);
    std::array<SymTensor3, 3> g{};
    for (int k = 0; k < 3; ++k) {
      SymTensor3 t;
      double nk = n[k];
      auto entry = [&](int i, int j) {
        double nij = n[i] * n[j];
        double dnn = ((i == k ? n[j] : 0.0) + (j == k ? n[i] : 0.0) - 2.0 * nij * nk) / r;
        double dij = (i == j) ? 1.0 : 0.0;
        return alp * nk * nij + bep * nk * (dij - nij) + (al - be) * dnn;
      };
      t.xx = entry(0, 0);
      t.yy = entry(1, 1);
      t.zz = entry(2, 2);
      t.xy = entry(0, 1);
      t.xz = entry(0, 2);
      t.yz = entry(1, 2);
      g[k] = t;
    }
    return g;
  }

  std::optional<double> singular_radius(int region) const override {
    if (singular_r_ && region == singular_region_) return singular_r_;
    return std::nullopt;
  }

private:
  std::vector<RadialPiece> pieces_;
  std::vector<double> radii_;
  std::optional<double> singular_r_;
  int singular_region_ = -1;
};

class FieldRayMetric final : public RayMetric {
public:
  FieldRayMetric(SymTensorField g, double h) : g_(std::move(g)), h_(h) {}

  SymTensor3 inverse_metric(const Vec3& x, int) const override { return g_(x).inverse(); }

  std::array<SymTensor3, 3> inverse_metric_grad(const Vec3& x, int) const override {
    std::array<SymTensor3, 3> out{};
    for (int k = 0; k < 3; ++k) {
      auto diff = [&](double h) {
        Vec3 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        return (g_(xp).inverse() - g_(xm).inverse()) * (0.5 / h);
      };
      SymTensor3 dh = diff(h_);
      SymTensor3 dh2 = diff(0.5 * h_);
      out[k] = dh2 * (4.0 / 3.0) - dh * (1.0 / 3.0);  // Richardson
    }
    return out;
  }

  std::optional<double> singular_radius(int) const override {
    if (g_.support().kind == SingularSupport::Kind::sphere) return g_.support().radius;
    return std::nullopt;
  }

private:
  SymTensorField g_;
  double h_;
};

}  // namespace

std::shared_ptr<RayMetric> euclidean_ray_metric() {
  return std::make_shared<EuclideanRayMetric>();
}

std::shared_ptr<RayMetric> cloak_ray_metric() {
  // Inverse metric of (F_1)_* g_0 on the shell: radial 1/4, tangential
  // r^2 / (4 (r-1)^2); identity outside.
  RadialPiece shell;
  shell.alpha = [](double) { return 0.25; };
  shell.alpha_prime = [](double) { return 0.0; };
  shell.beta = [](double r) {
    double d = 2.0 * (r - 1.0);
    return r * r / (d * d);
  };
  shell.beta_prime = [](double r) {
    double d = r - 1.0;
    return -r / (2.0 * d * d * d);
  };
  RadialPiece outside;
  outside.alpha = [](double) { return 1.0; };
  outside.alpha_prime = [](double) { return 0.0; };
  outside.beta = [](double) { return 1.0; };
  outside.beta_prime = [](double) { return 0.0; };
  return std::make_shared<PiecewiseRadialRayMetric>(
      std::vector<RadialPiece>{shell, outside}, std::vector<double>{2.0},
      std::optional<double>(1.0), 0);
}

std::shared_ptr<RayMetric> radial_ray_metric(std::function<double(double)> alpha,
                                             std::function<double(double)> alpha_prime,
                                             std::function<double(double)> beta,
                                             std::function<double(double)> beta_prime) {
  RadialPiece p{std::move(alpha), std::move(alpha_prime), std::move(beta),
                std::move(beta_prime)};
  return std::make_shared<PiecewiseRadialRayMetric>(std::vector<RadialPiece>{p},
                                                    std::vector<double>{}, std::nullopt, -1);
}

std::shared_ptr<RayMetric> field_ray_metric(SymTensorField g, double fd_step) {
  return std::make_shared<FieldRayMetric>(std::move(g), fd_step);
}

Vec3 momentum_for_velocity(const RayMetric& metric, const Vec3& x, const Vec3& v) {
  SymTensor3 ginv = metric.inverse_metric(x);
  // p = g v = (G)^{-1} v
  Mat3 g = ginv.to_mat().inverse();
  return g * v;
}

// ---------------------------------------------------------------------------

namespace {

double hamiltonian(const RayMetric& m, const Vec3& x, const Vec3& p, int region) {
  return 0.5 * m.inverse_metric(x, region).quad(p);
}

// y = (x, p, length)
OdeRhs make_rhs(const RayMetric& m, int region) {
  return [&m, region](double, const std::vector<double>& y, std::vector<double>& dy) {
    Vec3 x{y[0], y[1], y[2]}, p{y[3], y[4], y[5]};
    SymTensor3 G = m.inverse_metric(x, region);
    Vec3 v = G.apply(p);
    auto dG = m.inverse_metric_grad(x, region);
    dy[0] = v.x;
    dy[1] = v.y;
    dy[2] = v.z;
    dy[3] = -0.5 * dG[0].quad(p);
    dy[4] = -0.5 * dG[1].quad(p);
    dy[5] = -0.5 * dG[2].quad(p);
    double h2 = p.dot(v);
    dy[6] = std::sqrt(std::max(0.0, h2));
  };
}

// New normal momentum component from energy conservation across an interface:
// quadratic (1/2 nGn) xi^2 + (nGp_t) xi + (1/2 p_t G p_t - H) = 0; the root
// with sign(v_r) = sign(incoming v_r) is the transmitted branch.
Vec3 refract(const RayMetric& m, const Vec3& x, const Vec3& p, int old_region,
             int new_region) {
  Vec3 n = x.normalized();
  double vr_old = m.inverse_metric(x, old_region).apply(p).dot(n);
  double H = hamiltonian(m, x, p, old_region);
  Vec3 pt = p - n * p.dot(n);
  SymTensor3 G = m.inverse_metric(x, new_region);
  double a = 0.5 * G.quad(n);
  double b = n.dot(G.apply(pt));
  double c = 0.5 * G.quad(pt) - H;
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0)
    throw NumericalError("refract: no transmitted branch (total reflection)");
  double root = std::sqrt(disc);
  double xi = (vr_old >= 0.0) ? (-b + root) / (2.0 * a) : (-b - root) / (2.0 * a);
  return pt + n * xi;
}

}  // namespace

TraceResult trace(const RayMetric& metric, const RayState& start, double t_max,
                  const TraceOptions& opts) {
  if (!(start.p.norm() > 0.0)) throw DomainError("trace: zero momentum");
  if (!start.x.finite() || !start.p.finite()) throw DomainError("trace: non-finite start");
  auto radii = metric.interface_radii();
  int region = metric.region_of(start.x);
  if (auto rs = metric.singular_radius(region)) {
    if (start.x.norm() <= *rs + opts.guard_distance)
      throw DomainError("trace: start on or inside the singular surface");
  }

  double H0 = hamiltonian(metric, start.x, start.p, region);
  if (!(H0 > 0.0)) throw DomainError("trace: start Hamiltonian must be positive");

  TraceResult result;
  double drift = 0.0;
  auto push_sample = [&](double t, const std::vector<double>& y, bool event) {
    TraceSample s;
    s.piece = 0;
    s.t = t;
    s.pos = {y[0], y[1], y[2]};
    s.momentum = {y[3], y[4], y[5]};
    s.length = y[6];
    s.hamiltonian = hamiltonian(metric, s.pos, s.momentum, region);
    s.event = event;
    drift = std::max(drift, std::abs(s.hamiltonian - H0) / H0);
    result.samples.push_back(s);
  };

  std::vector<double> y = {start.x.x, start.x.y, start.x.z,
                           start.p.x, start.p.y, start.p.z, start.length};
  double t = start.t;
  push_sample(t, y, false);

  // Region boundaries for crossing detection.  A degenerate sphere bounding
  // the region from below is a hard boundary too: rays reaching it terminate
  // at the tangency guard instead of stepping across the singular surface.
  auto region_bounds = [&](int reg) {
    double lo = (reg > 0) ? radii[reg - 1] : 0.0;
    if (auto rs = metric.singular_radius(reg)) lo = std::max(lo, *rs + opts.guard_distance);
    double hi = (reg < static_cast<int>(radii.size())) ? radii[reg]
                                                       : std::numeric_limits<double>::max();
    return std::pair<double, double>(lo, hi);
  };

  OdeOptions oo;
  oo.rtol = opts.rtol;
  oo.atol = 1e-14;
  // Step cap: boundary crossings are detected at step endpoints, so no step
  // may span a region chord.  0.1 length units resolves every sphere dip with
  // impact parameter below 1.999 of the outermost radius.
  oo.max_step = 0.1 / std::sqrt(2.0 * H0);

  while (t < t_max) {
    auto [lo, hi] = region_bounds(region);
    auto rs = metric.singular_radius(region);

    double t_prev = t;
    std::vector<double> y_prev = y;
    bool crossed = false;
    bool guarded = false;
    auto rhs = make_rhs(metric, region);

    auto res = integrate_dopri5(
        rhs, t, y, t_max, oo,
        [&](double tc, const std::vector<double>& yc, const std::vector<double>&) {
          Vec3 x{yc[0], yc[1], yc[2]};
          double r = x.norm();
          if (result.samples.size() >= opts.max_samples) return false;
          if (r >= hi || r <= lo || r >= opts.domain_radius) {
            crossed = true;
            return false;
          }
          if (rs) {
            // asymptotic wrap: creeping along the degenerate sphere
            Vec3 p{yc[3], yc[4], yc[5]};
            Vec3 v = metric.inverse_metric(x, region).apply(p);
            double vr = v.dot(x) / r;
            if (r - *rs < 128.0 * opts.guard_distance && std::abs(vr) < opts.guard_momentum) {
              guarded = true;
              return false;
            }
          }
          t_prev = tc;
          y_prev = yc;
          push_sample(tc, yc, false);
          return true;
        });

    if (guarded || res.step_collapsed) {
      push_sample(res.t_end, res.y_end, false);
      result.termination = TraceTermination::tangency_guard;
      result.hamiltonian_drift = drift;
      return result;
    }
    if (result.samples.size() >= opts.max_samples) {
      result.termination = TraceTermination::max_steps;
      result.hamiltonian_drift = drift;
      return result;
    }
    if (!crossed) {
      // ran to t_max
      t = res.t_end;
      y = res.y_end;
      push_sample(t, y, false);
      result.termination = TraceTermination::time_budget;
      result.hamiltonian_drift = drift;
      return result;
    }

    // Locate the boundary crossing between (t_prev, y_prev) and res.t_end.
    Vec3 x_end{res.y_end[0], res.y_end[1], res.y_end[2]};
    double r_end = x_end.norm();
    double target;
    if (r_end >= opts.domain_radius &&
        (static_cast<int>(radii.size()) == region || r_end < hi))
      target = opts.domain_radius;
    else
      target = (r_end >= hi) ? hi : lo;

    double h_lo = 0.0, h_hi = res.t_end - t_prev;
    std::vector<double> y_cross = res.y_end;
    double r_prev = Vec3{y_prev[0], y_prev[1], y_prev[2]}.norm();
    double sign_out = (r_end > r_prev) ? 1.0 : -1.0;
    for (int it = 0; it < 60; ++it) {
      double h = 0.5 * (h_lo + h_hi);
      auto sub = integrate_dopri5(rhs, t_prev, y_prev, t_prev + h, oo);
      Vec3 xs{sub.y_end[0], sub.y_end[1], sub.y_end[2]};
      if (sign_out * (xs.norm() - target) >= 0.0) {
        h_hi = h;
        y_cross = sub.y_end;
      } else {
        h_lo = h;
      }
      if (h_hi - h_lo < 1e-15 * std::max(1.0, h_hi)) break;
    }
    t = t_prev + h_hi;
    y = y_cross;

    if (target == opts.domain_radius) {
      push_sample(t, y, false);
      result.termination = TraceTermination::exited_domain;
      result.hamiltonian_drift = drift;
      return result;
    }
    if (target == lo && rs && lo <= *rs + opts.guard_distance * 1.0001) {
      // reached the degenerate surface head-on: the exceptional ray
      push_sample(t, y, false);
      result.termination = TraceTermination::tangency_guard;
      result.hamiltonian_drift = drift;
      return result;
    }

    // Refract into the adjacent region.
    int new_region = region + ((target == hi) ? 1 : -1);
    Vec3 xc{y[0], y[1], y[2]};
    Vec3 pc{y[3], y[4], y[5]};
    Vec3 pn = refract(metric, xc, pc, region, new_region);
    y[3] = pn.x;
    y[4] = pn.y;
    y[5] = pn.z;
    region = new_region;
    push_sample(t, y, true);
  }

  result.termination = TraceTermination::time_budget;
  result.hamiltonian_drift = drift;
  return result;
}

// ---------------------------------------------------------------------------
// Wormhole tracing.

namespace {

struct HandleState {
  Vec3 s, sd;
  double z = 0, zd = 0, length = 0;
};

// Earliest intersection parameter of x + v tau with the sphere |q - c| = 1.
std::optional<double> ray_sphere(const Vec3& x, const Vec3& v, const Vec3& c) {
  Vec3 d = x - c;
  double a = v.dot(v);
  double b = 2.0 * d.dot(v);
  double cc = d.dot(d) - 1.0;
  double disc = b * b - 4.0 * a * cc;
  if (disc < 1e-14) return std::nullopt;  // miss or tangential graze
  double root = std::sqrt(disc);
  double t1 = (-b - root) / (2.0 * a);
  double t2 = (-b + root) / (2.0 * a);
  if (t1 > 1e-12) return t1;
  if (t2 > 1e-12) return t2;
  return std::nullopt;
}

}  // namespace

TraceResult wormhole_trace(const StoDesign& design, const RayState& start, double t_max,
                           const TraceOptions& opts) {
  if (design.gluings.size() != 2 || design.pieces.size() != 2)
    throw ParameterError("wormhole_trace: design is not a wormhole StoDesign");
  const auto& handle = design.pieces[1];
  if (handle.metric != ManifoldPiece::Metric::warped_product_handle || !handle.warp)
    throw ParameterError("wormhole_trace: second piece is not a warped handle");
  auto warp = handle.warp;
  auto warp_prime = handle.warp_prime;

  TraceResult result;
  double speed = start.p.norm();
  if (!(speed > 0.0)) throw DomainError("wormhole_trace: zero momentum");
  double H0 = 0.5 * speed * speed;
  double drift = 0.0;

  Vec3 x = start.x, v = start.p;  // exterior metric is Euclidean: velocity = momentum
  double t = start.t, length = start.length;

  // Reject starts inside either ball.
  for (const auto& g : design.gluings)
    if ((x - g.ball_center).norm() < g.ball_radius - 1e-12)
      throw DomainError("wormhole_trace: start inside a glued ball");

  auto push_exterior = [&](bool event) {
    TraceSample s;
    s.piece = 0;
    s.t = t;
    s.pos = x;
    s.momentum = v;
    s.hamiltonian = 0.5 * v.dot(v);
    s.length = length;
    s.event = event;
    drift = std::max(drift, std::abs(s.hamiltonian - H0) / H0);
    result.samples.push_back(s);
  };
  push_exterior(false);

  int last_entry_gluing = -1;
  while (t < t_max) {
    // --- exterior straight segment ---
    std::optional<double> tau_hit;
    int hit = -1;
    for (std::size_t gi = 0; gi < design.gluings.size(); ++gi) {
      auto tau = ray_sphere(x, v, design.gluings[gi].ball_center);
      if (tau && (!tau_hit || *tau < *tau_hit)) {
        tau_hit = tau;
        hit = static_cast<int>(gi);
      }
    }
    double budget = t_max - t;
    if (!tau_hit || *tau_hit > budget) {
      // no transit: run out the budget or leave the domain
      double tau_exit = budget;
      bool exited = false;
      if (v.norm() > 0) {
        // time to |x| = domain_radius (outward crossing), if any
        double a = v.dot(v);
        double b = 2.0 * x.dot(v);
        double c = x.dot(x) - opts.domain_radius * opts.domain_radius;
        double disc = b * b - 4 * a * c;
        if (disc > 0) {
          double tq = (-b + std::sqrt(disc)) / (2 * a);
          if (tq > 0 && tq < tau_exit) {
            tau_exit = tq;
            exited = true;
          }
        }
      }
      x = x + v * tau_exit;
      t += tau_exit;
      length += speed * tau_exit;
      push_exterior(false);
      result.termination =
          exited ? TraceTermination::exited_domain : TraceTermination::time_budget;
      result.hamiltonian_drift = drift;
      return result;
    }

    // advance to the gluing sphere
    x = x + v * (*tau_hit);
    t += *tau_hit;
    length += speed * (*tau_hit);
    push_exterior(true);

    // --- glue into the handle ---
    const auto& g_in = design.gluings[hit];
    last_entry_gluing = hit;
    Vec3 n = (x - g_in.ball_center).normalized();
    double vn = v.dot(n);  // < 0: inward
    Vec3 vt = v - n * vn;
    HandleState hs;
    hs.s = g_in.rotation * n;
    hs.sd = g_in.rotation * vt;
    hs.z = g_in.handle_end;
    hs.zd = (g_in.handle_end == 0.0) ? -vn : vn;
    hs.length = length;

    // --- integrate the handle geodesic (embedded form) ---
    //   s'' = -(2 r' z'/r) s' - |s'|^2 s,  z'' = r r' |s'|^2
    auto rhs = [&warp, &warp_prime](double, const std::vector<double>& yy,
                                    std::vector<double>& dy) {
      Vec3 s{yy[0], yy[1], yy[2]}, sd{yy[3], yy[4], yy[5]};
      double z = yy[6], zd = yy[7];
      double r = warp(z), rp = warp_prime(z);
      double sd2 = sd.dot(sd);
      Vec3 sdd = sd * (-2.0 * rp * zd / r) - s * sd2;
      dy[0] = sd.x;
      dy[1] = sd.y;
      dy[2] = sd.z;
      dy[3] = sdd.x;
      dy[4] = sdd.y;
      dy[5] = sdd.z;
      dy[6] = zd;
      dy[7] = r * rp * sd2;
      dy[8] = std::sqrt(zd * zd + r * r * sd2);
    };

    std::vector<double> y = {hs.s.x, hs.s.y, hs.s.z, hs.sd.x, hs.sd.y,
                             hs.sd.z, hs.z,  hs.zd,  hs.length};
    auto push_handle = [&](double tc, const std::vector<double>& yc, bool event) {
      TraceSample smp;
      smp.piece = 1;
      smp.t = tc;
      smp.pos = {yc[0], yc[1], yc[2]};
      smp.momentum = {yc[3], yc[4], yc[5]};
      smp.aux = yc[6];
      smp.aux_momentum = yc[7];
      double r = warp(yc[6]);
      Vec3 sd{yc[3], yc[4], yc[5]};
      smp.hamiltonian = 0.5 * (yc[7] * yc[7] + r * r * sd.dot(sd));
      smp.length = yc[8];
      smp.event = event;
      drift = std::max(drift, std::abs(smp.hamiltonian - H0) / H0);
      result.samples.push_back(smp);
    };
    push_handle(t, y, true);

    OdeOptions oo;
    oo.rtol = opts.rtol;
    oo.atol = 1e-14;
    oo.max_step = 0.02;  // dense handle sampling for invariant checks

    double t_prev = t;
    std::vector<double> y_prev = y;
    bool left_handle = false;
    auto res = integrate_dopri5(rhs, t, y, t_max, oo,
                                [&](double tc, const std::vector<double>& yc,
                                    const std::vector<double>&) {
                                  if (result.samples.size() >= opts.max_samples) return false;
                                  if (yc[6] < 0.0 || yc[6] > 1.0) {
                                    left_handle = true;
                                    return false;
                                  }
                                  t_prev = tc;
                                  y_prev = yc;
                                  // renormalize the embedded sphere point
                                  std::vector<double> yn = yc;
                                  Vec3 s{yn[0], yn[1], yn[2]};
                                  double ns = s.norm();
                                  yn[0] /= ns;
                                  yn[1] /= ns;
                                  yn[2] /= ns;
                                  push_handle(tc, yn, false);
                                  return true;
                                });
    if (result.samples.size() >= opts.max_samples) {
      result.termination = TraceTermination::max_steps;
      result.hamiltonian_drift = drift;
      return result;
    }
    if (!left_handle) {
      push_handle(res.t_end, res.y_end, false);
      result.termination = TraceTermination::entered_piece;
      result.hamiltonian_drift = drift;
      return result;
    }

    // locate z-crossing (z = 0 or z = 1) by step bisection
    double z_end = res.y_end[6];
    double z_target = (z_end < 0.0) ? 0.0 : 1.0;
    double h_lo = 0.0, h_hi = res.t_end - t_prev;
    std::vector<double> y_cross = res.y_end;
    double sign_out = (z_end < 0.0) ? -1.0 : 1.0;
    for (int it = 0; it < 60; ++it) {
      double h = 0.5 * (h_lo + h_hi);
      auto sub = integrate_dopri5(rhs, t_prev, y_prev, t_prev + h, oo);
      if (sign_out * (sub.y_end[6] - z_target) >= 0.0) {
        h_hi = h;
        y_cross = sub.y_end;
      } else {
        h_lo = h;
      }
      if (h_hi - h_lo < 1e-15 * std::max(1.0, h_hi)) break;
    }
    t = t_prev + h_hi;
    y = y_cross;
    push_handle(t, y, true);

    // --- glue out of the handle ---
    int out_end = (z_target == 0.0) ? 0 : 1;
    int out_gluing = -1;
    for (std::size_t gi = 0; gi < design.gluings.size(); ++gi)
      if (design.gluings[gi].handle_end == static_cast<double>(out_end))
        out_gluing = static_cast<int>(gi);
    if (out_gluing < 0) throw NumericalError("wormhole_trace: missing gluing");
    const auto& g_out = design.gluings[out_gluing];
    Vec3 s{y[0], y[1], y[2]};
    s = s.normalized();
    Vec3 sd{y[3], y[4], y[5]};
    sd = sd - s * s.dot(sd);
    double zd = y[7];
    length = y[8];
    Mat3 rot_t = g_out.rotation.transposed();
    Vec3 n_out = rot_t * s;
    double vr = (out_end == 0) ? -zd : zd;  // outward radial speed
    v = n_out * vr + rot_t * sd;
    x = g_out.ball_center + n_out * g_out.ball_radius;
    if (out_gluing != last_entry_gluing) ++result.handle_transits;
    push_exterior(true);
  }

  result.termination = TraceTermination::time_budget;
  result.hamiltonian_drift = drift;
  return result;
}

TraceResult trace(const StoDesign& design, const RayState& start, double t_max,
                  const TraceOptions& opts) {
  return wormhole_trace(design, start, t_max, opts);
}

double handle_clairaut_drift(const TraceResult& result) {
  // scan the longest run of piece-1 samples; drift of r^2 |s x sd| where the
  // warp radius is recoverable from H and zd: r^2 |sd|^2 = 2H - zd^2 and
  // |s x sd| = |sd| for unit s, so the invariant is r^2 |sd| = sqrt(r^2) *
  // sqrt(2H - zd^2) -- stored directly via the sample fields.
  double best_len = -1.0;
  double best_drift = 0.0;
  std::size_t i = 0;
  const auto& smp = result.samples;
  while (i < smp.size()) {
    if (smp[i].piece != 1) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double jmin = std::numeric_limits<double>::max(), jmax = 0.0;
    while (j < smp.size() && smp[j].piece == 1) {
      double h2 = 2.0 * smp[j].hamiltonian;
      double tangential2 = std::max(0.0, h2 - smp[j].aux_momentum * smp[j].aux_momentum);
      // r^2 |sd|^2 = tangential2  =>  invariant r^2 |sd| = sqrt(tangential2 * r^2);
      // recover r^2 from tangential2 / |sd|^2.
      Vec3 sd = smp[j].momentum;
      double sd2 = sd.dot(sd);
      if (sd2 > 1e-30) {
        double r2 = tangential2 / sd2;
        double inv = r2 * std::sqrt(sd2);
        jmin = std::min(jmin, inv);
        jmax = std::max(jmax, inv);
      }
      ++j;
    }
    double run_len = smp[j - 1].t - smp[i].t;
    if (run_len > best_len && jmax > 0) {
      best_len = run_len;
      best_drift = (jmax - jmin) / jmax;
    }
    i = j;
  }
  return best_drift;
}

// ---------------------------------------------------------------------------

std::vector<RayCompareRow> travel_time_compare(const RayFanSpec& fan,
                                               const TraceOptions& opts,
                                               std::vector<TraceResult>* traces) {
  auto metric = cloak_ray_metric();
  std::mt19937_64 rng(fan.seed);
  std::uniform_real_distribution<double> uimp(fan.impact_min, fan.impact_max);
  std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> ucos(-1.0, 1.0);

  std::vector<RayCompareRow> rows;
  for (int i = 0; i < fan.count; ++i) {
    double b = uimp(rng);
    double phi = uang(rng), ct = ucos(rng);
    double st = std::sqrt(1.0 - ct * ct);
    Vec3 d{st * std::cos(phi), st * std::sin(phi), ct};
    // perpendicular impact offset
    Vec3 ref = (std::abs(d.z) < 0.9) ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    Vec3 e1 = d.cross(ref).normalized();
    double psi = uang(rng);
    Vec3 e = e1 * std::cos(psi) + d.cross(e1) * std::sin(psi);
    Vec3 x0 = e * b - d * fan.start_distance;

    RayCompareRow row;
    row.impact = b;

    TraceOptions to = opts;
    to.domain_radius = fan.start_distance + 1.0;
    RayState rs;
    rs.x = x0;
    rs.p = d;
    TraceResult tr = trace(*metric, rs, 4.0 * fan.start_distance + 20.0, to);

    // oracle: straight line x0 + t d crosses |x| = 2 at t_in/t_out
    double bq = 2.0 * x0.dot(d);
    double cq = x0.dot(x0) - 4.0;
    double disc = bq * bq - 4.0 * cq;

    if (disc <= 0.0) {
      // misses the device entirely: trivial agreement unless it somehow
      // refracted anyway
      for (const auto& s : tr.samples)
        if (s.event) row.guarded = true;
      row.h_drift = tr.hamiltonian_drift;
      if (traces) traces->push_back(std::move(tr));
      rows.push_back(row);
      continue;
    }

    double t_in = (-bq - std::sqrt(disc)) / 2.0;
    double t_out = (-bq + std::sqrt(disc)) / 2.0;
    Vec3 exit = x0 + d * t_out;
    double chord = t_out - t_in;

    if (tr.termination == TraceTermination::tangency_guard) {
      row.guarded = true;
      if (traces) traces->push_back(std::move(tr));
      rows.push_back(row);
      continue;
    }

    // the two refraction events bracket the passage through the device
    std::vector<std::size_t> events;
    for (std::size_t k = 0; k < tr.samples.size(); ++k)
      if (tr.samples[k].event) events.push_back(k);
    if (events.size() != 2) {
      row.guarded = true;
      if (traces) traces->push_back(std::move(tr));
      rows.push_back(row);
      continue;
    }
    const auto& sin_ = tr.samples[events[0]];
    const auto& sout = tr.samples[events[1]];
    row.exit_pos_err = (sout.pos - exit).norm() / 2.0;
    Vec3 dir_out = sout.momentum.normalized();  // identity metric outside
    row.exit_dir_err = (dir_out - d).norm();
    row.length_err = std::abs((sout.length - sin_.length) - chord) / chord;
    row.h_drift = tr.hamiltonian_drift;
    if (traces) traces->push_back(std::move(tr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sto
