#pragma once

// Closed-form generators for every material-parameter family: ideal /
// truncated / layered-isotropic / quantum cloaks, the Maxwell tensor pair,
// and the wormhole geometry descriptor.
//
// Radial bookkeeping convention (fixed project-wide): a(r), b(r) are the
// radial / tangential conductivity eigenvalues in the orthonormal (Cartesian)
// frame and w(r) = |g|^{1/2} is the Cartesian volume density, so that
// w = a b^2 holds for conductivity-derived media and the separated radial ODE
// reads (r^2 a u')' + [w q r^2 - b l(l+1)] u = w p r^2.  The spherical
// coordinate-basis density component printed in the literature equals r^2 a(r)
// and is exposed as spherical_radial_component().

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sto/geometry.hpp"
#include "sto/maps.hpp"

namespace sto {

/// Piecewise radial description of a medium on (0, 2]: per interval the
/// conductivity eigenvalues a, b, the bulk density w and an optional scalar
/// potential (the hidden Schroedinger potential W in quantum solves).
class RadialMediumProfile {
public:
  struct Interval {
    double r_lo = 0, r_hi = 0;
    enum class Kind { constant, cloak_shell, laminate_shell, rule } kind = Kind::constant;
    // constant
    double a0 = 1, b0 = 1, w0 = 1, pot0 = 0;
    // laminate_shell: isotropic phase value; w follows the cloak closed form
    double phase = 1;
    // rule
    std::function<double(double)> a_rule, b_rule, w_rule, pot_rule;
    bool constant_coefficients() const { return kind == Kind::constant; }
  };

  RadialMediumProfile() = default;
  RadialMediumProfile(std::string name, std::vector<Interval> intervals,
                      std::optional<double> singular_interface = std::nullopt);

  double a(double r) const;
  double b(double r) const;
  double w(double r) const;
  double potential(double r) const;

  /// r^2 a(r): the spherical coordinate-basis density component (the value
  /// printed in the familiar diag(2(r-1)^2 sin(theta), ...) matrices at the
  /// equator).
  double spherical_radial_component(double r) const { return r * r * a(r); }

  const std::vector<Interval>& intervals() const { return intervals_; }
  const std::string& name() const { return name_; }
  static constexpr double outer_radius() { return 2.0; }

  /// Radius at which the medium degenerates (the ideal cloak's r = 1), if any.
  std::optional<double> singular_interface() const { return singular_interface_; }

  int interval_index(double r) const;

  /// Positivity of a, b, w at interval midpoints (DomainError otherwise).
  void validate() const;

private:
  std::string name_;
  std::vector<Interval> intervals_;
  std::optional<double> singular_interface_;
};

/// Cloak-shell closed forms (orthonormal-frame components of (F_1)_* applied
/// to the unit medium).
double cloak_shell_radial(double r);      // 2 (r-1)^2 / r^2
double cloak_shell_tangential(double r);  // 2
double cloak_shell_density(double r);     // 8 (r-1)^2 / r^2 = |g|^{1/2}

/// The homogeneous reference medium a = b = w = 1.
RadialMediumProfile homogeneous_profile();

/// Ideal cloak: degenerate shell on (1,2), isotropic 2 (bulk 8) inside.
RadialMediumProfile ideal_cloak_profile();

/// Truncated cloak sigma_R: ideal on (R,2), isotropic 2 / bulk 64^{1/2} = 8 on (0,R).
RadialMediumProfile truncated_cloak_profile(double R);

/// Two-phase values whose harmonic mean is `radial` and arithmetic mean is
/// `tangential`: {b + sqrt(b^2 - a b), b - sqrt(b^2 - a b)}.
std::pair<double, double> laminate_phase_pair(double radial, double tangential);

/// Isotropic laminate on (R,2): 2n alternating shells of equal radial
/// thickness, phases matched per pair at the pair midpoint, high phase first
/// moving outward; interior and bulk as in the truncated cloak.
RadialMediumProfile layered_isotropic_profile(double R, int pairs);

/// Quantum cloak specification (layer count, truncation, energy, hidden
/// potential W on B(0,1)).
struct QuantumCloakSpec {
  int pairs = 8;
  double R = 0.0;  // 0 -> default_truncation_for_layers(pairs)
  double energy = 1.0;
  std::function<double(double)> hidden_potential;  // W(r) on r < 1; null -> 0
};

/// Default coupling R(n) = 1 + 1/(8n).
double default_truncation_for_layers(int pairs);

/// Laminate profile realizing the approximate quantum cloak at energy E:
/// interior (gamma, w) = (1, 1) carrying W, laminate shells on (R, 2).
RadialMediumProfile quantum_potential_profile(const QuantumCloakSpec& spec);

/// V_n^E(r) + W(r): the effective Schroedinger potential in interval
/// interiors, gamma^{-1/2} grad^2 gamma^{1/2} - E gamma^{-1} g^{1/2} + E with
/// the Laplacian term vanishing on piecewise-constant gamma.  Interface
/// contributions are transmission conditions on psi = gamma^{1/2} u, applied
/// exactly by the solver, never as a mollified potential.
double schrodinger_potential_value(const RadialMediumProfile& profile, double energy,
                                   double r);

/// The ideal electromagnetic cloak pair (epsilon, mu): identical tensors,
/// equal to the cloak conductivity on the shell 1 < |x| < 2 and the identity
/// elsewhere; SingularSetError on the cloaking surface.
std::pair<SymTensor3, SymTensor3> maxwell_cloak_tensors(const Vec3& x);

/// Warp presets for the wormhole handle.
std::function<double(double)> warp_product();                    // r(z) = 1
std::function<double(double)> warp_collimator(double depth);     // 1 - depth sin^2(pi z)
std::function<double(double)> warp_collimator_prime(double depth);

/// Wormhole STO design: M1 = R^3 minus unit balls at O and (0,0,L) (L > 3),
/// M2 = S^2 x [0,1] with handle metric dz^2 + r(z)^2 g_{S^2}; gluing carries
/// the unit sphere around O to S^2 x {0} identically and S^2 x {1} to the
/// sphere around P by the axis-preserving half-turn.
StoDesign wormhole_geometry(double L = 4.0,
                            std::function<double(double)> warp = nullptr,
                            std::function<double(double)> warp_prime = nullptr);

}  // namespace sto
