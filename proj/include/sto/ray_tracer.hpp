#pragma once

// Hamiltonian geodesic integration, H = (1/2) g^{ij}(x) p_i p_j:
//   dx/dt = g^{ij} p_j,   dp_k/dt = -(1/2) d_k g^{ij} p_i p_j.
// Index-raised formulation: only the inverse metric and its first derivatives
// are needed; analytic for the built-in metrics, Richardson-extrapolated
// central differences for user fields.  Metric discontinuities across declared
// spheres are crossed by refraction: tangential covector components stay
// continuous, the normal component is re-solved from energy conservation.
// Evaluation is region-locked so integrator stages never straddle a jump.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sto/designs.hpp"
#include "sto/geometry.hpp"
#include "sto/maps.hpp"

namespace sto {

/// Inverse-metric provider.  Regions are the radial shells cut out by
/// interface_radii(); within a region the metric is smooth and its formula
/// extends smoothly a little past the boundary (region-locked evaluation).
class RayMetric {
public:
  virtual ~RayMetric() = default;

  /// Spheres |x| = R across which the metric jumps, ascending.
  virtual std::vector<double> interface_radii() const { return {}; }

  int region_of(const Vec3& x) const {
    auto radii = interface_radii();
    double r = x.norm();
    int k = 0;
    for (double R : radii)
      if (r > R) ++k;
    return k;
  }

  virtual SymTensor3 inverse_metric(const Vec3& x, int region) const = 0;
  virtual std::array<SymTensor3, 3> inverse_metric_grad(const Vec3& x, int region) const = 0;

  SymTensor3 inverse_metric(const Vec3& x) const { return inverse_metric(x, region_of(x)); }

  /// Degenerate sphere |x| = R bounding `region` from below (tangency guard).
  virtual std::optional<double> singular_radius(int region) const {
    (void)region;
    return std::nullopt;
  }
};

/// Flat Euclidean space.
std::shared_ptr<RayMetric> euclidean_ray_metric();

/// The ideal cloak metric (F_1)_* g_0: identity outside |x| = 2, the cloak
/// metric on the shell 1 < |x| < 2 (Lipschitz jump at |x| = 2, degenerate at
/// |x| = 1).
std::shared_ptr<RayMetric> cloak_ray_metric();

/// Smooth radial inverse metric alpha(r) rhat rhat + beta(r)(I - rhat rhat)
/// with analytic derivatives; no interfaces.
std::shared_ptr<RayMetric> radial_ray_metric(std::function<double(double)> alpha,
                                             std::function<double(double)> alpha_prime,
                                             std::function<double(double)> beta,
                                             std::function<double(double)> beta_prime);

/// Generic adapter around a covariant metric field; derivatives of the
/// inverse metric by central differences (step h, Richardson-extrapolated).
std::shared_ptr<RayMetric> field_ray_metric(SymTensorField g, double fd_step = 1e-6);

/// Position / covector pair evolving under the metric Hamiltonian.
struct RayState {
  Vec3 x;
  Vec3 p;
  double t = 0;
  double length = 0;  // accumulated optical length
};

enum class TraceTermination {
  exited_domain,
  tangency_guard,
  max_steps,
  time_budget,
  entered_piece,  // time budget exhausted inside the wormhole handle
};

struct TraceSample {
  int piece = 0;          // 0 = ambient space, 1 = wormhole handle
  double t = 0;
  Vec3 pos;               // piece 1: unit-sphere point s
  double aux = 0;         // piece 1: handle coordinate z
  Vec3 momentum;          // piece 0: covector p; piece 1: s_dot
  double aux_momentum = 0;  // piece 1: z_dot
  double hamiltonian = 0;
  double length = 0;
  bool event = false;     // refraction / gluing crossing
};

struct TraceResult {
  std::vector<TraceSample> samples;
  TraceTermination termination = TraceTermination::exited_domain;
  double hamiltonian_drift = 0;  // max |H - H0| / H0
  int handle_transits = 0;       // completed passes through the wormhole handle

  const TraceSample& final_sample() const { return samples.back(); }
};

struct TraceOptions {
  double rtol = 1e-10;
  double domain_radius = 8.0;    // |x| beyond which the ray has exited
  std::size_t max_samples = 400000;
  double guard_distance = 1e-9;  // tangency guard: |x| - singular radius
  double guard_momentum = 1e-9;  // tangency guard: inward radial velocity bound
};

/// Trace through a metric field until exit, guard, or t_max.
TraceResult trace(const RayMetric& metric, const RayState& start, double t_max,
                  const TraceOptions& opts = {});

/// Momentum covector for a desired initial velocity: p = g(x) v.
Vec3 momentum_for_velocity(const RayMetric& metric, const Vec3& x, const Vec3& v);

/// Trace through a wormhole StoDesign: straight exterior segments, warped
/// product handle (embedded form, no polar-chart singularities), gluing
/// transitions preserving metric-orthonormal momentum components.
TraceResult wormhole_trace(const StoDesign& design, const RayState& start, double t_max,
                           const TraceOptions& opts = {});

/// StoDesign overload of trace (dispatches to wormhole_trace).
TraceResult trace(const StoDesign& design, const RayState& start, double t_max,
                  const TraceOptions& opts = {});

/// Batch comparison of cloak-metric rays against the F_1-pushed straight-line
/// oracle: exit point, exit direction, and optical length (= free chord).
struct RayCompareRow {
  double impact = 0;
  double exit_pos_err = 0;
  double exit_dir_err = 0;
  double length_err = 0;  // relative
  double h_drift = 0;
  bool guarded = false;   // tangency guard fired (exceptional ray)
};

struct RayFanSpec {
  int count = 100;
  double impact_min = 0.1;
  double impact_max = 1.9;
  unsigned seed = 20260808u;
  double start_distance = 5.0;
};

/// Impact parameters >= 2 are legal: such rays never enter the device and
/// compare trivially.  When `traces` is non-null the full TraceResult of each
/// ray is collected (polyline serialization).
std::vector<RayCompareRow> travel_time_compare(const RayFanSpec& fan,
                                               const TraceOptions& opts = {},
                                               std::vector<TraceResult>* traces = nullptr);

/// Max relative drift of the Clairaut invariant r(z)^2 |s x s_dot| over the
/// longest handle pass of a wormhole trace.
double handle_clairaut_drift(const TraceResult& result);

}  // namespace sto
