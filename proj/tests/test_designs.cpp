#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sto/designs.hpp"
#include "test_common.hpp"

using namespace sto;

TEST_CASE("ideal cloak profile closed forms") {
  RadialMediumProfile p = ideal_cloak_profile();
  // spherical coordinate-density entry at r = 1.5: 2(r-1)^2 = 0.5
  CHECK(p.spherical_radial_component(1.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.b(1.5) == doctest::Approx(2.0).epsilon(1e-15));
  // orthonormal-frame radial eigenvalue 2(r-1)^2/r^2
  CHECK(p.a(1.5) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  // bulk density squared = g_R closed form 64 r^-4 (r-1)^4
  double w = p.w(1.5);
  CHECK(w * w == doctest::Approx(0.790123456790123).epsilon(1e-13));
  // degenerate at the cloaking surface
  CHECK(p.spherical_radial_component(1.0 + 1e-9) < 1e-17);
  CHECK(p.singular_interface().has_value());
  // interior modification: isotropic 2, bulk 8
  CHECK(p.a(0.5) == doctest::Approx(2.0));
  CHECK(p.w(0.5) == doctest::Approx(8.0));
}

TEST_CASE("w^2 matches the g_R closed form across the shell to 1e-12") {
  RadialMediumProfile p = ideal_cloak_profile();
  for (double r = 1.05; r < 2.0; r += 0.05) {
    double expect = 64.0 * std::pow(r, -4.0) * std::pow(r - 1.0, 4.0);
    CHECK(p.w(r) * p.w(r) == doctest::Approx(expect).epsilon(1e-12));
    // determinant chain: w = a b^2 for conductivity-derived media
    CHECK(p.a(r) * p.b(r) * p.b(r) == doctest::Approx(p.w(r)).epsilon(1e-12));
  }
}

TEST_CASE("truncated cloak equals the ideal profile outside R, isotropic inside") {
  CHECK_THROWS_AS(truncated_cloak_profile(1.0), ParameterError);
  CHECK_THROWS_AS(truncated_cloak_profile(2.3), ParameterError);
  RadialMediumProfile tr = truncated_cloak_profile(1.5);
  RadialMediumProfile ideal = ideal_cloak_profile();
  for (double r : {1.55, 1.7, 1.9, 1.99}) {
    CHECK(tr.a(r) == ideal.a(r));
    CHECK(tr.b(r) == ideal.b(r));
    CHECK(tr.w(r) == ideal.w(r));
  }
  // jump at the truncation sphere: spherical component 0.5 outside, isotropic
  // Cartesian value 2 inside; g_R = 64 inside
  CHECK(tr.spherical_radial_component(1.5 + 1e-9) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(tr.a(1.5 - 1e-9) == doctest::Approx(2.0));
  CHECK(tr.w(1.2) * tr.w(1.2) == doctest::Approx(64.0));
  // pointwise limit R -> 1: same closed form at fixed r != 1
  RadialMediumProfile tr2 = truncated_cloak_profile(1.0001);
  CHECK(tr2.a(1.4) == ideal.a(1.4));
}

TEST_CASE("laminate phase pair") {
  auto [hi, lo] = laminate_phase_pair(0.5, 2.0);
  CHECK(hi == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-14));
  CHECK(lo == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
  // direct substitution into the two mean formulas
  CHECK(2.0 * hi * lo / (hi + lo) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(0.5 * (hi + lo) == doctest::Approx(2.0).epsilon(1e-12));
  // isotropic target: both phases equal it
  auto [h2, l2] = laminate_phase_pair(3.0, 3.0);
  CHECK(h2 == doctest::Approx(3.0));
  CHECK(l2 == doctest::Approx(3.0));
  CHECK_THROWS_AS(laminate_phase_pair(2.5, 2.0), DomainError);
}

TEST_CASE("layered profile: pair means match the local truncated-cloak targets") {
  double R = 1.2;
  int n = 8;
  RadialMediumProfile lay = layered_isotropic_profile(R, n);
  const auto& ivs = lay.intervals();
  REQUIRE(static_cast<int>(ivs.size()) == 1 + 2 * n);
  for (int p = 0; p < n; ++p) {
    const auto& first = ivs[1 + 2 * p];
    const auto& second = ivs[2 + 2 * p];
    double mid = first.r_hi;  // pair midpoint = shared boundary of the pair
    double x = first.phase, y = second.phase;
    CHECK(x >= y);  // high phase first moving outward
    CHECK(2.0 * x * y / (x + y) ==
          doctest::Approx(cloak_shell_radial(mid)).epsilon(1e-12));
    CHECK(0.5 * (x + y) == doctest::Approx(2.0).epsilon(1e-12));
    // bulk unchanged from the truncated profile
    double rm = 0.5 * (first.r_lo + first.r_hi);
    CHECK(lay.w(rm) == doctest::Approx(cloak_shell_density(rm)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(layered_isotropic_profile(1.2, 0), ParameterError);
  CHECK_THROWS_AS(layered_isotropic_profile(2.5, 4), ParameterError);
}

TEST_CASE("quantum potential profile and V_n^E values") {
  // free space: gamma = 1, w = 1  ->  V = -E + E = 0 identically
  RadialMediumProfile free_p = homogeneous_profile();
  CHECK(schrodinger_potential_value(free_p, 3.7, 0.8) == doctest::Approx(0.0));
  CHECK(schrodinger_potential_value(free_p, 3.7, 1.9) == doctest::Approx(0.0));

  QuantumCloakSpec spec;
  spec.pairs = 4;
  spec.energy = 2.0;
  RadialMediumProfile qp = quantum_potential_profile(spec);
  double R = default_truncation_for_layers(4);
  CHECK(R == doctest::Approx(1.0 + 1.0 / 32.0));

  // hidden region and buffer are potential-free free space: V = 0
  CHECK(schrodinger_potential_value(qp, spec.energy, 0.5) == doctest::Approx(0.0));
  // shell interior with gamma = c constant: V = -E w / c + E
  double r = 0.5 * (R + 2.0);
  double c = qp.a(r), w = qp.w(r);
  CHECK(schrodinger_potential_value(qp, spec.energy, r) ==
        doctest::Approx(-spec.energy * w / c + spec.energy).epsilon(1e-13));
  // E = 0 -> V = 0 in shell interiors
  CHECK(schrodinger_potential_value(qp, 0.0, r) == doctest::Approx(0.0));

  // hidden potential is carried by the profile
  QuantumCloakSpec spec2 = spec;
  spec2.hidden_potential = [](double) { return 10.0; };
  RadialMediumProfile qp2 = quantum_potential_profile(spec2);
  CHECK(qp2.potential(0.5) == doctest::Approx(10.0));
  CHECK(qp2.potential(1.5) == doctest::Approx(0.0));
}

TEST_CASE("maxwell cloak tensor pair") {
  auto [eps, mu] = maxwell_cloak_tensors({1.5, 0, 0});
  CHECK(std::abs(eps.xx - mu.xx) < 1e-15);
  Mat3 sph = spherical_density_components(eps, {1.5, 0, 0});
  CHECK(sph(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sph(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sph(2, 2) == doctest::Approx(2.0).epsilon(1e-12));

  auto [ein, min_] = maxwell_cloak_tensors({0.4, 0.2, 0.1});
  CHECK(ein.xx == doctest::Approx(1.0));
  CHECK(min_.xy == doctest::Approx(0.0));
  auto [eout, mout] = maxwell_cloak_tensors({0, 0, 3.0});
  CHECK(eout.zz == doctest::Approx(1.0));
  (void)mout;
  CHECK_THROWS_AS(maxwell_cloak_tensors({1.0, 0, 0}), SingularSetError);
}

TEST_CASE("wormhole geometry validation and structure") {
  CHECK_THROWS_AS(wormhole_geometry(3.0), ParameterError);
  CHECK_THROWS_AS(wormhole_geometry(2.0), ParameterError);
  StoDesign d = wormhole_geometry(4.0);
  CHECK(d.pieces.size() == 2);
  CHECK(d.gluings.size() == 2);
  CHECK(d.ball_separation == doctest::Approx(4.0));
  CHECK(d.gluings[1].ball_center.z == doctest::Approx(4.0));
  // collimator warp: ends pinned to 1, narrowed in the middle
  auto warp = warp_collimator(0.5);
  CHECK(warp(0.0) == doctest::Approx(1.0));
  CHECK(warp(1.0) == doctest::Approx(1.0));
  CHECK(warp(0.5) == doctest::Approx(0.5));
  StoDesign dw = wormhole_geometry(5.0, warp, warp_collimator_prime(0.5));
  CHECK(dw.pieces[1].warp(0.5) == doctest::Approx(0.5));
}

TEST_CASE("profile validation catches degenerate media") {
  RadialMediumProfile::Interval bad;
  bad.r_lo = 0;
  bad.r_hi = 2;
  bad.a0 = -1.0;
  RadialMediumProfile p("bad", {bad});
  CHECK_THROWS_AS(p.validate(), DomainError);
}
