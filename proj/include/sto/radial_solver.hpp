#pragma once

// Spherical-harmonic separation solver for radially layered anisotropic
// Helmholtz / Schroedinger problems.  Per degree l the field u_l(r) Y_lm
// satisfies
//
//   (r^2 a(r) u')' + [ (omega^2 w(r) - a(r) V(r)) r^2 - b(r) l(l+1) ] u
//        = w(r) p_l(r) r^2
//
// with continuity of u and of the flux r^2 a u' at every interface, the
// regular branch at r = 0 (or at a degenerate inner interface), and Dirichlet
// data at r = 2.  Constant isotropic intervals use spherical Bessel / power /
// modified-Bessel closed forms; everything else is integrated with adaptive
// Dormand-Prince 5(4).  The DN eigenvalue is the boundary flux per unit area
// per unit Dirichlet value, lambda_l = a(2) u'(2) / u(2), normalized so the
// homogeneous ball at omega = 0 gives lambda_l = l/2.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sto/designs.hpp"

namespace sto {

struct RadialSolveOptions {
  double rtol = 1e-10;                        // RK tolerance on variable intervals
  double resonance_condition_threshold = 1e12;  // interface-system condition limit
};

using RadialSource = std::function<double(double)>;  // modal amplitude p_l(r)

class RadialSolution {
public:
  int degree() const { return l_; }
  double omega() const { return omega_; }

  /// (u, u') at radius r inside the solve domain; 0 in a decoupled ideal-cloak
  /// interior.
  std::pair<double, double> eval(double r) const;
  double value(double r) const { return eval(r).first; }
  double derivative(double r) const { return eval(r).second; }

  /// Flux r^2 a(r) u'(r); continuous across interfaces by construction.
  double flux(double r) const;

  /// a(2) u'(2) / u(2) = flux(2) / (4 u(2)).
  double dn_eigenvalue() const;

  /// Innermost radius of the solved region (0, or the degenerate interface).
  double inner_solve_radius() const { return inner_radius_; }

  /// Residual of the separated ODE at r, via finite differences on the flux;
  /// normalized by the local term scale.
  double ode_residual(double r) const;

  /// Integral of f(r, u, u') over [lo, hi] (adaptive Simpson).
  double integrate(const std::function<double(double, double, double)>& f, double lo,
                   double hi, double tol = 1e-10) const;

  const RadialMediumProfile& profile() const { return *profile_; }

  struct IntervalSolve;  // implementation detail, defined in the .cpp

private:
  friend RadialSolution radial_solve(const RadialMediumProfile&, int, double,
                                     const RadialSource&, double,
                                     const RadialSolveOptions&);
  std::shared_ptr<const RadialMediumProfile> profile_;
  std::vector<std::shared_ptr<IntervalSolve>> parts_;
  int l_ = 0;
  double omega_ = 0;
  double dirichlet_ = 0;
  double inner_radius_ = 0;
};

/// Solve one separated mode.  `source` may be null.  Throws ResonanceError if
/// the interface system condition exceeds the threshold, DomainError for a
/// degenerate profile.
RadialSolution radial_solve(const RadialMediumProfile& profile, int l, double omega,
                            const RadialSource& source = nullptr, double dirichlet = 1.0,
                            const RadialSolveOptions& opts = {});

/// DN-map eigenvalues indexed by harmonic degree at fixed frequency
/// (m-degeneracy collapsed: radial media give m-independent spectra).
struct DNSpectrum {
  double omega = 0;
  std::vector<double> lambda;  // lambda[l], l = 0..L_max
  int l_max() const { return static_cast<int>(lambda.size()) - 1; }
};

DNSpectrum dn_spectrum(const RadialMediumProfile& profile, double omega, int l_max,
                       const RadialSolveOptions& opts = {});

/// Per-R rows of |lambda_l(sigma_R) - lambda_l(homogeneous)|; resonant rows
/// are flagged and the sweep continues.
struct CloakConvergenceRow {
  double R = 0;
  bool resonant = false;
  std::vector<double> abs_err;  // per degree
  double max_err = 0;
};

std::vector<CloakConvergenceRow> cloak_convergence_sweep(double omega, int l_max,
                                                         const std::vector<double>& R_list,
                                                         const RadialSolveOptions& opts = {});

/// Interior-side flux r^2 a u' at the truncation sphere for unit boundary data
/// of degree l (no interior source); tends to 0 as R -> 1 (the hidden Neumann
/// condition emerging).
double hidden_bc_flux(double R, double omega, int l, const RadialSolveOptions& opts = {});

/// First `count` energies E with a regular solution of -Delta + W at energy E
/// on B(0, radius) satisfying u'(radius) = 0.  W may be null (free).  l = 0
/// includes E = 0 (W = 0) via the constant solution.
std::vector<double> neumann_eigenvalues(int l, double radius, const RadialSource& W,
                                        int count);

/// Dirichlet eigenvalues of -Delta on B(0, radius) for degrees <= l_max below
/// E_max (precondition checks).
std::vector<double> dirichlet_eigenvalues_free_ball(double radius, int l_max, double E_max);

/// Quantum convergence sweep: per laminate count n, DN spectrum of the
/// quantum profile at energy E vs free space.
struct QuantumSweepRow {
  int pairs = 0;
  double R = 0;
  std::vector<double> abs_err;  // per degree vs free space
  double max_err = 0;
};

std::vector<QuantumSweepRow> quantum_dn_convergence(const std::vector<int>& n_list,
                                                    double energy, const RadialSource& W,
                                                    int l_max,
                                                    const RadialSolveOptions& opts = {});

/// Energy scan of interior (r<1) to exterior (1<r<2) probability weight
/// gamma u^2 for unit Dirichlet data: almost-trapped-state resonance curve.
struct TrappedScanPoint {
  double energy = 0;
  double ratio = 0;
};
struct TrappedScanResult {
  std::vector<TrappedScanPoint> curve;  // sorted by energy
  double peak_energy = 0;
  double peak_ratio = 0;
};

TrappedScanResult trapped_state_scan(int pairs, double e_lo, double e_hi, int l,
                                     int base_samples = 161, const RadialSource& W = nullptr,
                                     double R = 0.0, const RadialSolveOptions& opts = {});

}  // namespace sto
