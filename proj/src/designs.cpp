#include "sto/designs.hpp"

#include <algorithm>
#include <cmath>

namespace sto {

RadialMediumProfile::RadialMediumProfile(std::string name, std::vector<Interval> intervals,
                                         std::optional<double> singular_interface)
    : name_(std::move(name)),
      intervals_(std::move(intervals)),
      singular_interface_(singular_interface) {
  if (intervals_.empty()) throw ParameterError("RadialMediumProfile: no intervals");
  double prev = 0.0;
  for (const auto& iv : intervals_) {
    if (!(iv.r_lo >= prev - 1e-15 && iv.r_hi > iv.r_lo))
      throw ParameterError("RadialMediumProfile: intervals must partition (0,2]");
    prev = iv.r_hi;
  }
  if (std::abs(prev - outer_radius()) > 1e-12)
    throw ParameterError("RadialMediumProfile: outer radius must be 2");
}

int RadialMediumProfile::interval_index(double r) const {
  if (r <= 0.0 || r > outer_radius() + 1e-12)
    throw DomainError("RadialMediumProfile: r outside (0,2]");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (r <= intervals_[i].r_hi + 1e-15) return static_cast<int>(i);
  }
  return static_cast<int>(intervals_.size()) - 1;
}

namespace {

double eval_a(const RadialMediumProfile::Interval& iv, double r) {
  using K = RadialMediumProfile::Interval::Kind;
  switch (iv.kind) {
    case K::constant: return iv.a0;
    case K::cloak_shell: return cloak_shell_radial(r);
    case K::laminate_shell: return iv.phase;
    case K::rule: return iv.a_rule(r);
  }
  return 0;
}

double eval_b(const RadialMediumProfile::Interval& iv, double r) {
  using K = RadialMediumProfile::Interval::Kind;
  switch (iv.kind) {
    case K::constant: return iv.b0;
    case K::cloak_shell: return cloak_shell_tangential(r);
    case K::laminate_shell: return iv.phase;
    case K::rule: return iv.b_rule(r);
  }
  return 0;
}

double eval_w(const RadialMediumProfile::Interval& iv, double r) {
  using K = RadialMediumProfile::Interval::Kind;
  switch (iv.kind) {
    case K::constant: return iv.w0;
    case K::cloak_shell: return cloak_shell_density(r);
    case K::laminate_shell: return cloak_shell_density(r);
    case K::rule: return iv.w_rule(r);
  }
  return 0;
}

double eval_pot(const RadialMediumProfile::Interval& iv, double r) {
  using K = RadialMediumProfile::Interval::Kind;
  switch (iv.kind) {
    case K::constant: return iv.pot0;
    case K::cloak_shell: return 0.0;
    case K::laminate_shell: return 0.0;
    case K::rule: return iv.pot_rule ? iv.pot_rule(r) : 0.0;
  }
  return 0;
}

}  // namespace

double RadialMediumProfile::a(double r) const { return eval_a(intervals_[interval_index(r)], r); }
double RadialMediumProfile::b(double r) const { return eval_b(intervals_[interval_index(r)], r); }
double RadialMediumProfile::w(double r) const { return eval_w(intervals_[interval_index(r)], r); }
double RadialMediumProfile::potential(double r) const {
  return eval_pot(intervals_[interval_index(r)], r);
}

void RadialMediumProfile::validate() const {
  for (const auto& iv : intervals_) {
    double rm = 0.5 * (iv.r_lo + iv.r_hi);
    if (!(eval_a(iv, rm) > 0 && eval_b(iv, rm) > 0 && eval_w(iv, rm) > 0))
      throw DomainError("RadialMediumProfile '" + name_ +
                        "': non-positive coefficient in interval interior");
  }
}

double cloak_shell_radial(double r) {
  double t = (r - 1.0) / r;
  return 2.0 * t * t;
}
double cloak_shell_tangential(double) { return 2.0; }
double cloak_shell_density(double r) {
  double t = (r - 1.0) / r;
  return 8.0 * t * t;
}

RadialMediumProfile homogeneous_profile() {
  RadialMediumProfile::Interval iv;
  iv.r_lo = 0.0;
  iv.r_hi = 2.0;
  return RadialMediumProfile("homogeneous", {iv});
}

RadialMediumProfile ideal_cloak_profile() {
  RadialMediumProfile::Interval inner;
  inner.r_lo = 0.0;
  inner.r_hi = 1.0;
  inner.a0 = inner.b0 = 2.0;
  inner.w0 = 8.0;
  RadialMediumProfile::Interval shell;
  shell.r_lo = 1.0;
  shell.r_hi = 2.0;
  shell.kind = RadialMediumProfile::Interval::Kind::cloak_shell;
  return RadialMediumProfile("ideal_cloak", {inner, shell}, 1.0);
}

RadialMediumProfile truncated_cloak_profile(double R) {
  if (!(R > 1.0 && R < 2.0))
    throw ParameterError("truncated_cloak_profile: R must lie in (1,2), got " +
                         std::to_string(R));
  RadialMediumProfile::Interval inner;
  inner.r_lo = 0.0;
  inner.r_hi = R;
  inner.a0 = inner.b0 = 2.0;
  inner.w0 = 8.0;
  RadialMediumProfile::Interval shell;
  shell.r_lo = R;
  shell.r_hi = 2.0;
  shell.kind = RadialMediumProfile::Interval::Kind::cloak_shell;
  return RadialMediumProfile("truncated_cloak_R=" + std::to_string(R), {inner, shell});
}

std::pair<double, double> laminate_phase_pair(double radial, double tangential) {
  if (!(radial > 0 && tangential > 0))
    throw DomainError("laminate_phase_pair: target eigenvalues must be positive");
  if (radial > tangential * (1.0 + 1e-12))
    throw DomainError(
        "laminate_phase_pair: radial target exceeds tangential target; two-phase "
        "laminate infeasible");
  double disc = tangential * tangential - radial * tangential;
  double root = std::sqrt(std::max(0.0, disc));
  return {tangential + root, tangential - root};
}

namespace {

std::vector<RadialMediumProfile::Interval> laminate_shells(double R, int pairs) {
  std::vector<RadialMediumProfile::Interval> shells;
  double h = (RadialMediumProfile::outer_radius() - R) / (2.0 * pairs);
  for (int p = 0; p < pairs; ++p) {
    double lo = R + 2.0 * p * h;
    double mid = lo + h;  // pair midpoint radius
    auto [hi_phase, lo_phase] =
        laminate_phase_pair(cloak_shell_radial(mid), cloak_shell_tangential(mid));
    RadialMediumProfile::Interval first, second;
    first.r_lo = lo;
    first.r_hi = lo + h;
    first.kind = RadialMediumProfile::Interval::Kind::laminate_shell;
    first.phase = hi_phase;
    second.r_lo = lo + h;
    second.r_hi = lo + 2.0 * h;
    second.kind = RadialMediumProfile::Interval::Kind::laminate_shell;
    second.phase = lo_phase;
    shells.push_back(first);
    shells.push_back(second);
  }
  shells.back().r_hi = RadialMediumProfile::outer_radius();  // absorb rounding
  return shells;
}

}  // namespace

RadialMediumProfile layered_isotropic_profile(double R, int pairs) {
  if (!(R > 1.0 && R < 2.0))
    throw ParameterError("layered_isotropic_profile: R must lie in (1,2)");
  if (pairs < 1) throw ParameterError("layered_isotropic_profile: need >= 1 shell pair");
  std::vector<RadialMediumProfile::Interval> ivs;
  RadialMediumProfile::Interval inner;
  inner.r_lo = 0.0;
  inner.r_hi = R;
  inner.a0 = inner.b0 = 2.0;
  inner.w0 = 8.0;
  ivs.push_back(inner);
  auto shells = laminate_shells(R, pairs);
  ivs.insert(ivs.end(), shells.begin(), shells.end());
  return RadialMediumProfile(
      "layered_R=" + std::to_string(R) + "_n=" + std::to_string(pairs), std::move(ivs));
}

double default_truncation_for_layers(int pairs) {
  if (pairs < 1) throw ParameterError("default_truncation_for_layers: pairs >= 1");
  return 1.0 + 1.0 / (8.0 * pairs);
}

RadialMediumProfile quantum_potential_profile(const QuantumCloakSpec& spec) {
  if (spec.pairs < 1) throw ParameterError("quantum_potential_profile: pairs >= 1");
  double R = spec.R > 0.0 ? spec.R : default_truncation_for_layers(spec.pairs);
  if (!(R > 1.0 && R < 2.0))
    throw ParameterError("quantum_potential_profile: R must lie in (1,2)");
  std::vector<RadialMediumProfile::Interval> ivs;

  // Hidden region B(0,1): free medium carrying the cloaked potential W.
  RadialMediumProfile::Interval hidden;
  hidden.r_lo = 0.0;
  hidden.r_hi = 1.0;
  hidden.a0 = hidden.b0 = hidden.w0 = 1.0;
  if (spec.hidden_potential) {
    hidden.kind = RadialMediumProfile::Interval::Kind::rule;
    hidden.a_rule = [](double) { return 1.0; };
    hidden.b_rule = [](double) { return 1.0; };
    hidden.w_rule = [](double) { return 1.0; };
    hidden.pot_rule = spec.hidden_potential;
  }
  ivs.push_back(hidden);

  // Buffer (1, R): free medium, potential-free (V_n^E = 0 here).
  if (R > 1.0 + 1e-12) {
    RadialMediumProfile::Interval buffer;
    buffer.r_lo = 1.0;
    buffer.r_hi = R;
    buffer.a0 = buffer.b0 = buffer.w0 = 1.0;
    ivs.push_back(buffer);
  }

  auto shells = laminate_shells(R, spec.pairs);
  ivs.insert(ivs.end(), shells.begin(), shells.end());
  return RadialMediumProfile("quantum_R=" + std::to_string(R) + "_n=" +
                                 std::to_string(spec.pairs),
                             std::move(ivs));
}

double schrodinger_potential_value(const RadialMediumProfile& profile, double energy,
                                   double r) {
  double gamma = profile.a(r);
  double w = profile.w(r);
  // grad^2 gamma^{1/2} = 0 in interval interiors (gamma piecewise constant).
  return -energy * w / gamma + energy + profile.potential(r);
}

std::pair<SymTensor3, SymTensor3> maxwell_cloak_tensors(const Vec3& x) {
  double r = x.norm();
  if (std::abs(r - 1.0) < kSingularGuard)
    throw SingularSetError("maxwell_cloak_tensors: evaluation on the cloaking surface");
  if (r <= 1.0 || r > 2.0) {
    SymTensor3 id = SymTensor3::identity();
    return {id, id};
  }
  SymTensor3 t =
      SymTensor3::radial_tangential(x / r, cloak_shell_radial(r), cloak_shell_tangential(r));
  return {t, t};
}

std::function<double(double)> warp_product() {
  return [](double) { return 1.0; };
}
std::function<double(double)> warp_collimator(double depth) {
  if (!(depth > 0.0 && depth < 1.0))
    throw ParameterError("warp_collimator: depth must lie in (0,1)");
  return [depth](double z) {
    double s = std::sin(M_PI * z);
    return 1.0 - depth * s * s;
  };
}
std::function<double(double)> warp_collimator_prime(double depth) {
  if (!(depth > 0.0 && depth < 1.0))
    throw ParameterError("warp_collimator_prime: depth must lie in (0,1)");
  return [depth](double z) { return -depth * M_PI * std::sin(2.0 * M_PI * z); };
}

StoDesign wormhole_geometry(double L, std::function<double(double)> warp,
                            std::function<double(double)> warp_prime) {
  if (!(L > 3.0))
    throw ParameterError("wormhole_geometry: ball separation L must exceed 3, got " +
                         std::to_string(L));
  if (!warp) {
    warp = warp_product();
    warp_prime = [](double) { return 0.0; };
  } else if (!warp_prime) {
    throw ParameterError("wormhole_geometry: warp supplied without derivative");
  }
  if (std::abs(warp(0.0) - 1.0) > 1e-12 || std::abs(warp(1.0) - 1.0) > 1e-12)
    throw ParameterError("wormhole_geometry: warp must equal 1 at both handle ends");

  StoDesign d;
  d.name = "wormhole_L=" + std::to_string(L);
  d.ball_separation = L;

  ManifoldPiece m1;
  m1.name = "exterior";
  m1.metric = ManifoldPiece::Metric::euclidean;
  m1.gamma = ManifoldPiece::GammaKind::curve;  // the blown-up segment of the z-axis
  ManifoldPiece m2;
  m2.name = "handle";
  m2.metric = ManifoldPiece::Metric::warped_product_handle;
  m2.warp = warp;
  m2.warp_prime = warp_prime;
  d.pieces = {m1, m2};

  DeviceRegion n1;
  n1.name = "exterior_device";
  DeviceRegion n2;
  n2.name = "tunnel_device";
  d.regions = {n1, n2};

  HandleGluing g0;
  g0.ball_center = {0, 0, 0};
  g0.handle_end = 0.0;
  g0.rotation = Mat3::identity();
  HandleGluing g1;
  g1.ball_center = {0, 0, L};
  g1.handle_end = 1.0;
  // Half-turn about the x-axis: (s1, s2, s3) -> (s1, -s2, -s3); carries the
  // north pole to the inward axis point (0,0,L-1) and the axial ray out along
  // the axis.
  g1.rotation = Mat3::identity();
  g1.rotation(1, 1) = -1.0;
  g1.rotation(2, 2) = -1.0;
  d.gluings = {g0, g1};
  return d;
}

}  // namespace sto
