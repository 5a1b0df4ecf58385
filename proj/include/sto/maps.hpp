#pragma once

// Diffeomorphisms (smooth and singular), analytic Jacobians, push-forwards of
// metrics / conductivities / densities, Jacobian-condition validation for
// singular maps, and the STO design triplet data model.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sto/geometry.hpp"

namespace sto {

/// Invertible coordinate map with analytic Jacobian and a declared singular
/// set removed from its domain.  Finite differences are used only as a test
/// oracle, never in the solve path: the Jacobian appears squared in
/// push-forwards and FD noise is amplified near the cloaking surface.
struct DiffeoMap {
  std::function<Vec3(const Vec3&)> forward;
  std::function<Vec3(const Vec3&)> inverse;
  std::function<Mat3(const Vec3&)> jacobian;          // of forward, at x
  SingularSupport domain_singular{};                  // removed from the source domain
  SingularSupport image_singular{};                   // image-side surface (e.g. |y|=1)
  std::string name;

  Vec3 apply(const Vec3& x) const {
    if (domain_singular.distance(x) < kSingularGuard)
      throw SingularSetError("DiffeoMap '" + name + "': forward evaluation on singular set");
    return forward(x);
  }
  Vec3 apply_inverse(const Vec3& y) const {
    if (image_singular.distance(y) < kSingularGuard)
      throw SingularSetError("DiffeoMap '" + name + "': inverse evaluation on singular set");
    return inverse(y);
  }
  Mat3 jacobian_at(const Vec3& x) const {
    if (domain_singular.distance(x) < kSingularGuard)
      throw SingularSetError("DiffeoMap '" + name + "': Jacobian on singular set");
    return jacobian(x);
  }
};

/// Identity map on R^3.
DiffeoMap identity_map();

/// The blow-up of the origin: F1(x) = (|x|/2 + 1) x/|x| maps B(0,2)\{0} onto
/// the annulus 1 < |y| < 2, fixing |x| = 2 pointwise.  Inverse y -> 2(|y|-1) y/|y|.
DiffeoMap blowup_point_map();

/// Truncated blow-up F_R: identity for |y| > 2, the same affine radial rule on
/// rho < |y| <= 2 with rho = 2(R-1); maps {|y| > rho} onto {|x| > R}.
DiffeoMap truncation_map(double R);

/// Smooth radial diffeomorphism r -> f(r) of the ball, fixing 0 and the
/// boundary sphere; supply f, f' and f^{-1} (used for invariance tests and as
/// a push-forward building block).
DiffeoMap radial_map(std::function<double(double)> f, std::function<double(double)> fprime,
                     std::function<double(double)> finv, std::string name = "radial");

/// Composition G after F (Jacobian by chain rule).
DiffeoMap compose(const DiffeoMap& g, const DiffeoMap& f);

/// (F_* g)(y): push-forward of a covariant metric through F, computed with the
/// Jacobian of F^{-1} at y.
SymTensor3 pushforward_metric(const DiffeoMap& f, const SymTensorField& g, const Vec3& y);

/// (F_* sigma)(y) for a contravariant weight-1 density (conductivity,
/// permittivity, mass tensor): DF sigma DF^T / |det DF| evaluated at F^{-1}(y).
SymTensor3 pushforward_conductivity(const DiffeoMap& f, const SymTensorField& sigma,
                                    const Vec3& y);

/// Push-forward of a scalar density of weight 1 (bulk modulus |g|^{1/2}):
/// w(F^{-1}(y)) / |det DF(F^{-1}(y))|.
double pushforward_density(const DiffeoMap& f, const ScalarField& w, const Vec3& y);

/// Report of the singular-map Jacobian conditions dF >= c0 I and
/// det dF >= c1 / dist(x, gamma) along a sample sequence approaching gamma.
struct SingularMapReport {
  struct Sample {
    double dist = 0;          // distance of x to gamma
    double sigma_min = 0;     // smallest singular value of dF(x)
    double det = 0;           // det dF(x)
    bool evaluable = false;   // inside the map's domain
  };
  std::vector<Sample> samples;
  double c0_fit = 0;          // min over samples of sigma_min
  double c1_fit = 0;          // min over samples of det * dist
  double det_loglog_slope = 0;  // d log(det) / d log(dist); ~ -2 for the blow-up map
  bool det_blows_up = false;    // slope <= -0.9 over the sampled range

  bool passes(double c0_threshold, double c1_threshold) const {
    return det_blows_up && c0_fit >= c0_threshold && c1_fit >= c1_threshold;
  }
};

SingularMapReport validate_singular_map(const DiffeoMap& f, const Vec3& gamma,
                                        int sample_count, unsigned seed = 20260808u);

/// --- STO design triplet (M, N, F) -------------------------------------------

/// One manifold piece (M_j, g_j) with an optional blow-up submanifold gamma_j
/// of dimension <= n-2 (point or curve).
struct ManifoldPiece {
  std::string name;
  enum class Metric { euclidean, warped_product_handle } metric = Metric::euclidean;
  // For warped_product_handle: S^2 x [0,1] with g = dz^2 + r(z)^2 g_{S^2}.
  std::function<double(double)> warp;        // r(z) > 0
  std::function<double(double)> warp_prime;  // r'(z)
  enum class GammaKind { none, point, curve } gamma = GammaKind::none;
  Vec3 gamma_point{};
};

/// Device region N_j with interface hypersurface Sigma_j.
struct DeviceRegion {
  std::string name;
  SingularSupport interface;  // Sigma_j
};

/// Map piece with source/target indices.
struct DesignMap {
  int source_piece = 0;
  int target_region = 0;
  DiffeoMap map;
};

/// Gluing of a boundary sphere of a Euclidean piece to one end of the handle:
/// unit-vector rotation carrying the sphere chart to the S^2 factor.
struct HandleGluing {
  Vec3 ball_center{};
  double ball_radius = 1.0;
  double handle_end = 0.0;  // z = 0 or z = 1
  Mat3 rotation = Mat3::identity();  // unit-sphere point s_handle = rotation * n_hat
};

/// Singular transformation optics design: pieces, device regions, maps
/// between them, and (for the wormhole) the concrete gluing data geodesics
/// cross by continuity of position and metric-orthonormal momentum.
struct StoDesign {
  std::string name;
  std::vector<ManifoldPiece> pieces;
  std::vector<DeviceRegion> regions;
  std::vector<DesignMap> maps;
  std::vector<HandleGluing> gluings;
  double ball_separation = 0.0;  // wormhole parameter L
};

}  // namespace sto
