#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sto/maps.hpp"
#include "sto/radial_solver.hpp"
#include "sto/special_functions.hpp"
#include "test_common.hpp"

using namespace sto;

namespace {

// Homogeneous medium forced through the generic integrated-interval path.
RadialMediumProfile homogeneous_rule_profile() {
  RadialMediumProfile::Interval iv;
  iv.r_lo = 0.0;
  iv.r_hi = 2.0;
  iv.kind = RadialMediumProfile::Interval::Kind::rule;
  iv.a_rule = [](double) { return 1.0; };
  iv.b_rule = [](double) { return 1.0; };
  iv.w_rule = [](double) { return 1.0; };
  return RadialMediumProfile("homogeneous_rule", {iv});
}

// Independent oracle for the truncated cloak without sources: free Helmholtz
// in the pulled-back annulus rho < s < 2 coupled to the interior ball with
// wavenumber 2w, assembled as a hand-built 3x3 system:
//   u(r) = v+(2(r-1)) on r > R,   u(r) = v-(r) on r < R,
//   v+ = B j_l(w s) + C y_l(w s),  v- = A j_l(2w r),
//   v+(2) = 1;  v-(R) = v+(rho);  2 R^2 v-'(R) = rho^2 v+'(rho).
struct TruncatedOracle {
  int l;
  double omega, R, rho;
  double A, B, C;

  TruncatedOracle(int l_, double omega_, double R_) : l(l_), omega(omega_), R(R_) {
    rho = 2.0 * (R - 1.0);
    auto [j2, j2d] = sph_bessel_j_d(l, omega * 2.0);
    auto [y2, y2d] = sph_bessel_y_d(l, omega * 2.0);
    auto [jr, jrd] = sph_bessel_j_d(l, omega * rho);
    auto [yr, yrd] = sph_bessel_y_d(l, omega * rho);
    auto [ji, jid] = sph_bessel_j_d(l, 2.0 * omega * R);
    // unknowns (A, B, C)
    std::array<std::array<double, 3>, 3> M{};
    std::array<double, 3> rhs{};
    // Dirichlet at s = 2
    M[0] = {0.0, j2, y2};
    rhs[0] = 1.0;
    // continuity at the interface
    M[1] = {ji, -jr, -yr};
    rhs[1] = 0.0;
    // flux: 2 R^2 (2w) j_l'(2wR) A = rho^2 w (j_l'(w rho) B + y_l'(w rho) C)
    M[2] = {2.0 * R * R * 2.0 * omega * jid, -rho * rho * omega * jrd,
            -rho * rho * omega * yrd};
    rhs[2] = 0.0;
    auto x = sto_test::solve_small<3>(M, rhs);
    A = x[0];
    B = x[1];
    C = x[2];
  }

  double outer(double r) const {
    double s = 2.0 * (r - 1.0);
    return B * sph_bessel_j(l, omega * s) + C * sph_bessel_y(l, omega * s);
  }
  double inner(double r) const { return A * sph_bessel_j(l, 2.0 * omega * r); }
};

}  // namespace

TEST_CASE("homogeneous static mode: u = r^l, dn eigenvalue l/2") {
  RadialMediumProfile p = homogeneous_profile();
  RadialSolution sol = radial_solve(p, 1, 0.0, nullptr, 1.0);
  // l = 1, boundary value 1 at r = 2: u(r) = r/2
  CHECK(sol.value(1.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(sol.derivative(2.0) == doctest::Approx(0.5).epsilon(1e-13));
  for (int l = 0; l <= 8; ++l) {
    RadialSolution s = radial_solve(p, l, 0.0);
    CHECK(s.dn_eigenvalue() == doctest::Approx(l / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("homogeneous static mode through the integrator path") {
  RadialMediumProfile p = homogeneous_rule_profile();
  for (int l = 0; l <= 8; ++l) {
    RadialSolution s = radial_solve(p, l, 0.0);
    CHECK(std::abs(s.dn_eigenvalue() - l / 2.0) < 1e-8);
  }
}

TEST_CASE("homogeneous l=0 dn eigenvalue at positive frequency: closed form") {
  // u = j_0(w r): lambda_0 = u'(2)/u(2) = (2w cos 2w - sin 2w) / (2 sin 2w)
  for (double omega : {0.3, 1.0, 1.2}) {
    double expect =
        (2.0 * omega * std::cos(2.0 * omega) - std::sin(2.0 * omega)) /
        (2.0 * std::sin(2.0 * omega));
    DNSpectrum s = dn_spectrum(homogeneous_profile(), omega, 0);
    CHECK(s.lambda[0] == doctest::Approx(expect).epsilon(1e-12));
    DNSpectrum srk = dn_spectrum(homogeneous_rule_profile(), omega, 0);
    CHECK(std::abs(srk.lambda[0] - expect) < 1e-9);
  }
}

TEST_CASE("ideal cloak DN spectrum equals free space (static and at omega=1)") {
  RadialMediumProfile ideal = ideal_cloak_profile();
  for (int l = 0; l <= 4; ++l) {
    RadialSolution s = radial_solve(ideal, l, 0.0);
    CHECK(std::abs(s.dn_eigenvalue() - l / 2.0) < 1e-8);
  }
  DNSpectrum free_s = dn_spectrum(homogeneous_profile(), 1.0, 4);
  DNSpectrum cloak_s = dn_spectrum(ideal, 1.0, 4);
  for (int l = 0; l <= 4; ++l)
    CHECK(std::abs(cloak_s.lambda[l] - free_s.lambda[l]) < 1e-8);
}

TEST_CASE("truncated cloak matches the pulled-back free-annulus oracle") {
  double R = 1.5, omega = 1.0;
  RadialMediumProfile p = truncated_cloak_profile(R);
  for (int l = 0; l <= 4; ++l) {
    TruncatedOracle oracle(l, omega, R);
    RadialSolution sol = radial_solve(p, l, omega);
    for (int i = 0; i <= 40; ++i) {
      double r = R + (2.0 - R) * (i + 0.5) / 41.5;
      CHECK(std::abs(sol.value(r) - oracle.outer(r)) < 1e-8);
    }
    for (int i = 1; i <= 10; ++i) {
      double r = R * i / 11.0;
      CHECK(std::abs(sol.value(r) - oracle.inner(r)) < 1e-8);
    }
  }
}

TEST_CASE("pullback oracle holds at high degree and frequency") {
  double R = 1.25, omega = 2.0;
  RadialMediumProfile p = truncated_cloak_profile(R);
  for (int l : {6, 8}) {
    TruncatedOracle oracle(l, omega, R);
    RadialSolution sol = radial_solve(p, l, omega);
    for (int i = 0; i <= 30; ++i) {
      double r = R + (2.0 - R) * (i + 0.5) / 31.0;
      CHECK(std::abs(sol.value(r) - oracle.outer(r)) < 1e-8);
    }
  }
}

TEST_CASE("transmission conditions hold at every interface") {
  RadialMediumProfile p = layered_isotropic_profile(1.3, 6);
  RadialSolution sol = radial_solve(p, 2, 1.1);
  const double h = 1e-8;
  for (const auto& iv : p.intervals()) {
    double r = iv.r_hi;
    if (r >= 2.0) break;
    // extrapolate each side onto the interface so the comparison measures the
    // jump, not the radius offset
    auto [um, dum] = sol.eval(r - h);
    auto [up, dup] = sol.eval(r + h);
    double u_from_below = um + h * dum;
    double u_from_above = up - h * dup;
    CHECK(std::abs(u_from_below - u_from_above) <
          1e-10 * std::max(1.0, std::abs(u_from_below)));
    // flux extrapolation uses the ODE itself: Phi' = -[(w^2 w) r^2 - b l(l+1)] u
    auto phi_prime = [&](double rr, double u) {
      double omega = 1.1;
      int l = 2;
      return -((omega * omega * p.w(rr)) * rr * rr - p.b(rr) * l * (l + 1.0)) * u;
    };
    double f_from_below = sol.flux(r - h) + h * phi_prime(r - h, um);
    double f_from_above = sol.flux(r + h) - h * phi_prime(r + h, up);
    double scale = std::max({std::abs(f_from_below), std::abs(f_from_above), 1.0});
    CHECK(std::abs(f_from_below - f_from_above) / scale < 1e-10);
  }
}

TEST_CASE("interior source: the factor-4 equation") {
  // Truncated cloak with a unit source inside: the interior piece obeys
  // u'' + (2/r) u' + 4 w^2 u = 4 p.
  double R = 1.4, omega = 1.0;
  RadialMediumProfile p = truncated_cloak_profile(R);
  RadialSource src = [R](double r) { return r < R ? 1.0 : 0.0; };
  RadialSolution sol = radial_solve(p, 0, omega, src, 0.7);
  for (double r : {0.3, 0.6, 0.9, 1.2}) {
    double h = 1e-5;
    auto [um, dum] = sol.eval(r - h);
    auto [u0, du0] = sol.eval(r);
    auto [up, dup] = sol.eval(r + h);
    (void)dum;
    (void)dup;
    double upp = (um - 2.0 * u0 + up) / (h * h);
    double resid = upp + 2.0 / r * du0 + 4.0 * omega * omega * u0 - 4.0;
    CHECK(std::abs(resid) < 1e-5 * std::max(1.0, std::abs(4.0 * omega * omega * u0)));
  }
  // and the boundary value is honored
  CHECK(sol.value(2.0) == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("ode residual diagnostic is small for source-free solves") {
  RadialMediumProfile p = truncated_cloak_profile(1.25);
  RadialSolution sol = radial_solve(p, 1, 1.0);
  for (double r : {0.4, 1.1, 1.5, 1.9}) CHECK(sol.ode_residual(r) < 1e-8);
}

TEST_CASE("resonance detection at a Dirichlet eigenvalue") {
  // first l=0 Dirichlet eigenvalue of the ball radius 2: omega = pi/2
  CHECK_THROWS_AS(dn_spectrum(homogeneous_profile(), M_PI / 2.0, 0), ResonanceError);
  // slightly off resonance the solve is fine
  CHECK_NOTHROW(dn_spectrum(homogeneous_profile(), M_PI / 2.0 + 0.05, 0));
}

TEST_CASE("reciprocity: volume energy form equals the boundary pairing") {
  // static conductivity: int sigma grad u . grad u = 4 lambda_l f^2 per degree
  RadialMediumProfile p = truncated_cloak_profile(1.3);
  for (int l = 1; l <= 3; ++l) {
    RadialSolution sol = radial_solve(p, l, 0.0);
    double lam = sol.dn_eigenvalue();
    double ll1 = l * (l + 1.0);
    double q = sol.integrate(
        [&](double r, double u, double du) {
          return (p.a(r) * du * du + p.b(r) * ll1 * u * u / (r * r)) * r * r;
        },
        0.0, 2.0, 1e-11);
    CHECK(std::abs(q - 4.0 * lam) < 1e-8 * std::max(1.0, std::abs(q)));
  }
}

TEST_CASE("static cloak convergence toward l/2 and hidden Neumann flux decay") {
  auto rows = cloak_convergence_sweep(0.0, 4, {1.5, 1.25, 1.1, 1.05, 1.01});
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK_FALSE(rows[i].resonant);
    for (int l = 1; l <= 4; ++l) CHECK(rows[i + 1].abs_err[l] < rows[i].abs_err[l]);
  }
  // l = 0 static: constants are harmonic, lambda_0 = 0 for every profile
  for (const auto& row : rows) CHECK(row.abs_err[0] < 1e-11);

  // hidden Neumann condition emerging: interior flux decreasing as R -> 1
  for (int l = 1; l <= 2; ++l) {
    double f15 = std::abs(hidden_bc_flux(1.5, 1.0, l));
    double f11 = std::abs(hidden_bc_flux(1.1, 1.0, l));
    CHECK(f11 < f15);
  }
  // l=0 static with unit boundary data: the solution is the constant 1, so the
  // flux vanishes identically
  CHECK(std::abs(hidden_bc_flux(1.3, 0.0, 0)) < 1e-12);
}

TEST_CASE("smooth-diffeo push-forward leaves the DN spectrum invariant") {
  // sigma smooth radial anisotropic-free; psi fixes 0 and the boundary sphere
  auto aa = [](double r) { return 1.0 + 0.4 * std::exp(-(r - 1.0) * (r - 1.0)); };
  auto ww = [](double r) { return 1.0 + 0.2 * std::cos(0.7 * r); };
  RadialMediumProfile::Interval iv;
  iv.r_lo = 0.0;
  iv.r_hi = 2.0;
  iv.kind = RadialMediumProfile::Interval::Kind::rule;
  iv.a_rule = aa;
  iv.b_rule = aa;
  iv.w_rule = ww;
  RadialMediumProfile base("smooth_medium", {iv});

  auto f = [](double r) { return r + 0.22 * r * (2.0 - r); };
  auto fp = [](double r) { return 1.0 + 0.22 * (2.0 - 2.0 * r); };
  auto finv = [f](double y) {
    double lo = 0.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (f(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  DiffeoMap psi = radial_map(f, fp, finv, "test_diffeo");

  SymTensorField sigma_field = SymTensorField::radial(aa, aa, SingularSupport::none());
  ScalarField w_field([ww](const Vec3& x) { return ww(x.norm()); }, SingularSupport::none());

  RadialMediumProfile::Interval pv;
  pv.r_lo = 0.0;
  pv.r_hi = 2.0;
  pv.kind = RadialMediumProfile::Interval::Kind::rule;
  pv.a_rule = [&, psi](double r) {
    Vec3 y{r, 0, 0};
    SymTensor3 s = pushforward_conductivity(psi, sigma_field, y);
    Vec3 n{1, 0, 0};
    return n.dot(s.apply(n));
  };
  pv.b_rule = [&, psi](double r) {
    Vec3 y{r, 0, 0};
    SymTensor3 s = pushforward_conductivity(psi, sigma_field, y);
    Vec3 t{0, 1, 0};
    return t.dot(s.apply(t));
  };
  pv.w_rule = [&, psi](double r) {
    return pushforward_density(psi, w_field, Vec3{r, 0, 0});
  };
  RadialMediumProfile pushed("pushed_medium", {pv});

  for (double omega : {0.0, 1.0}) {
    DNSpectrum s0 = dn_spectrum(base, omega, 3);
    DNSpectrum s1 = dn_spectrum(pushed, omega, 3);
    for (int l = 0; l <= 3; ++l) CHECK(std::abs(s0.lambda[l] - s1.lambda[l]) < 1e-8);
  }
}

TEST_CASE("neumann eigenvalues: transcendental oracle") {
  // l=0, W=0, radius 1: tan k = k; first nonzero root by bisection on
  // f(k) = tan(k) - k in (pi, 3pi/2).
  double lo = M_PI + 1e-9, hi = 1.5 * M_PI - 1e-9;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    ((std::tan(mid) - mid) < 0.0 ? lo : hi) = mid;
  }
  double kstar = 0.5 * (lo + hi);
  CHECK(kstar == doctest::Approx(4.493409457909064).epsilon(1e-12));

  auto eigs = neumann_eigenvalues(0, 1.0, nullptr, 2);
  REQUIRE(eigs.size() == 2);
  CHECK(eigs[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eigs[1] == doctest::Approx(kstar * kstar).epsilon(1e-9));

  // l=1: root of d/dr j_1(k r) at r=1, located by the same kind of bisection
  auto mismatch = [](double k) { return sph_bessel_j_d(1, k).second; };
  double a = 1.5, b = 3.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (a + b);
    (mismatch(mid) > 0.0 ? a : b) = mid;
  }
  double k1 = 0.5 * (a + b);
  auto eigs1 = neumann_eigenvalues(1, 1.0, nullptr, 1);
  REQUIRE(eigs1.size() == 1);
  CHECK(eigs1[0] == doctest::Approx(k1 * k1).epsilon(1e-9));

  // constant potential shifts the l=0 ground state to E = W
  RadialSource wconst = [](double) { return 10.0; };
  auto eigsw = neumann_eigenvalues(0, 1.0, wconst, 1);
  REQUIRE(eigsw.size() == 1);
  CHECK(eigsw[0] == doctest::Approx(10.0).epsilon(1e-7));
}

TEST_CASE("quantum profile with free laminate region reduces to free space") {
  // gamma = w = 1 everywhere: dn at energy E equals free space exactly
  double E = 1.0;
  DNSpectrum free_s = dn_spectrum(homogeneous_profile(), std::sqrt(E), 3);
  RadialMediumProfile::Interval iv;
  iv.r_lo = 0;
  iv.r_hi = 2;
  RadialMediumProfile p("free", {iv});
  DNSpectrum s = dn_spectrum(p, std::sqrt(E), 3);
  for (int l = 0; l <= 3; ++l)
    CHECK(s.lambda[l] == doctest::Approx(free_s.lambda[l]).epsilon(1e-12));
}

TEST_CASE("quantum dn convergence precondition checks") {
  // first Dirichlet eigenvalue of the free ball radius 2 is (pi/2)^2
  double bad = M_PI * M_PI / 4.0;
  CHECK_THROWS_AS(quantum_dn_convergence({4}, bad, nullptr, 2), PreconditionError);
  // a genuine interior Neumann eigenvalue is rejected
  double estar = 20.190728556426629;  // k^2, tan k = k
  CHECK_THROWS_AS(quantum_dn_convergence({4}, estar, nullptr, 2), PreconditionError);
}

TEST_CASE("quantum sweep at E = 0 reduces to the conductivity cloaking sweep") {
  // zero-frequency consistency: the E = 0 rows are exactly the static DN
  // errors of the same laminate profiles (the flux-free constant mode at
  // E = 0 is not a trapped state and must not trip the precondition)
  auto rows = quantum_dn_convergence({4, 8}, 0.0, nullptr, 2);
  DNSpectrum free_s = dn_spectrum(homogeneous_profile(), 0.0, 2);
  for (const auto& row : rows) {
    QuantumCloakSpec qs;
    qs.pairs = row.pairs;
    qs.R = row.R;
    qs.energy = 0.0;
    DNSpectrum s = dn_spectrum(quantum_potential_profile(qs), 0.0, 2);
    for (int l = 0; l <= 2; ++l)
      CHECK(row.abs_err[l] ==
            doctest::Approx(std::abs(s.lambda[l] - free_s.lambda[l])).epsilon(1e-12));
  }
  CHECK(rows[1].max_err < rows[0].max_err);
}

TEST_CASE("quantum dn convergence decreases along n (smoke, two steps)") {
  auto rows = quantum_dn_convergence({4, 8}, 1.0, nullptr, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].max_err < rows[0].max_err);
}
