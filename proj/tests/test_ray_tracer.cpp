#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sto/ray_tracer.hpp"
#include "test_common.hpp"

using namespace sto;

TEST_CASE("flat metric: straight rays, exact length, negligible drift") {
  auto m = euclidean_ray_metric();
  RayState s;
  s.x = {-3.0, 0.2, 0.1};
  s.p = {1.0, 0.0, 0.0};
  TraceOptions opts;
  opts.domain_radius = 6.0;
  TraceResult tr = trace(*m, s, 50.0, opts);
  CHECK(tr.termination == TraceTermination::exited_domain);
  CHECK(tr.hamiltonian_drift < 1e-12);
  for (const auto& smp : tr.samples) {
    CHECK(std::abs(smp.pos.y - 0.2) < 1e-10);
    CHECK(std::abs(smp.pos.z - 0.1) < 1e-10);
  }
  const auto& fin = tr.final_sample();
  CHECK(fin.length == doctest::Approx(fin.pos.x - s.x.x).epsilon(1e-10));
}

TEST_CASE("momentum_for_velocity inverts the metric") {
  auto m = cloak_ray_metric();
  Vec3 x{1.5, 0, 0};
  Vec3 v{0.3, 0.4, 0.0};
  Vec3 p = momentum_for_velocity(*m, x, v);
  Vec3 back = m->inverse_metric(x).apply(p);
  CHECK((back - v).norm() < 1e-12);
}

TEST_CASE("cloak rays match the F1-pushed straight-line oracle") {
  RayFanSpec fan;
  fan.count = 8;
  fan.seed = 424242u;
  auto rows = travel_time_compare(fan);
  REQUIRE(rows.size() == 8);
  for (const auto& row : rows) {
    CHECK_FALSE(row.guarded);
    CHECK(row.exit_pos_err < 1e-6);
    CHECK(row.exit_dir_err < 1e-6);
    CHECK(row.length_err < 1e-6);
    CHECK(row.h_drift < 1e-9);
  }
}

TEST_CASE("rays with impact parameter beyond 2 never enter the device") {
  RayFanSpec fan;
  fan.count = 6;
  fan.impact_min = 2.05;
  fan.impact_max = 2.6;
  fan.seed = 5150u;
  std::vector<TraceResult> traces;
  auto rows = travel_time_compare(fan, {}, &traces);
  REQUIRE(rows.size() == 6);
  REQUIRE(traces.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK_FALSE(rows[i].guarded);
    CHECK(rows[i].exit_pos_err == 0.0);
    CHECK(rows[i].length_err == 0.0);
    for (const auto& smp : traces[i].samples) CHECK_FALSE(smp.event);
  }
}

TEST_CASE("the exceptional radial ray terminates at the tangency guard") {
  auto m = cloak_ray_metric();
  RayState s;
  s.x = {-4.0, 0, 0};
  s.p = {1.0, 0, 0};  // aimed exactly at the origin
  TraceResult tr = trace(*m, s, 50.0, {});
  CHECK(tr.termination == TraceTermination::tangency_guard);
  // terminated hugging the cloaking surface
  CHECK(tr.final_sample().pos.norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("time reversal returns to the start") {
  auto m = cloak_ray_metric();
  RayState s;
  s.x = {-4.0, 0.8, 0.0};
  s.p = {1.0, 0, 0};
  TraceOptions opts;
  opts.domain_radius = 4.5;
  TraceResult fwd = trace(*m, s, 60.0, opts);
  REQUIRE(fwd.termination == TraceTermination::exited_domain);
  RayState back;
  back.x = fwd.final_sample().pos;
  back.p = fwd.final_sample().momentum * -1.0;
  // integrate backwards for exactly the forward elapsed time
  TraceResult rev = trace(*m, back, fwd.final_sample().t, opts);
  REQUIRE(rev.termination == TraceTermination::time_budget);
  CHECK((rev.final_sample().pos - s.x).norm() < 1e-6);
  CHECK((rev.final_sample().momentum + s.p).norm() < 1e-6);
}

TEST_CASE("wormhole: ray missing both balls runs straight through") {
  StoDesign d = wormhole_geometry(4.0);
  RayState s;
  s.x = {-6.0, 2.5, 0.0};
  s.p = {1.0, 0, 0};
  TraceOptions opts;
  opts.domain_radius = 12.0;
  TraceResult tr = wormhole_trace(d, s, 100.0, opts);
  CHECK(tr.handle_transits == 0);
  CHECK(tr.termination == TraceTermination::exited_domain);
  for (const auto& smp : tr.samples) CHECK(smp.piece == 0);
  CHECK(std::abs(tr.final_sample().pos.y - 2.5) < 1e-9);
}

TEST_CASE("wormhole: axial ray transits the handle and exits the far ball") {
  StoDesign d = wormhole_geometry(4.0);
  RayState s;
  s.x = {0.0, 0.0, -3.0};
  s.p = {0.0, 0.0, 1.0};
  TraceOptions opts;
  opts.domain_radius = 12.0;
  TraceResult tr = wormhole_trace(d, s, 30.0, opts);
  CHECK(tr.handle_transits == 1);
  REQUIRE(tr.termination == TraceTermination::exited_domain);
  const auto& fin = tr.final_sample();
  // exits the ball around P = (0,0,4) along the +z axis
  CHECK(std::abs(fin.pos.x) < 1e-9);
  CHECK(std::abs(fin.pos.y) < 1e-9);
  CHECK(fin.pos.z > 5.0);
  CHECK(fin.momentum.normalized().z == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.hamiltonian_drift < 1e-9);
}

TEST_CASE("wormhole: Clairaut invariant conserved on a warped handle") {
  StoDesign d = wormhole_geometry(4.0, warp_collimator(0.3), warp_collimator_prime(0.3));
  // off-axis ray entering the near ball at a modest angle (passes through)
  Vec3 hit{0.2, 0.0, -std::sqrt(1.0 - 0.04)};
  Vec3 v = Vec3{0.15, 0.05, 1.0}.normalized();
  RayState s;
  s.x = hit - v * 2.0;
  s.p = v;
  TraceOptions opts;
  opts.domain_radius = 12.0;
  TraceResult tr = wormhole_trace(d, s, 40.0, opts);
  bool in_handle = false;
  for (const auto& smp : tr.samples) in_handle |= (smp.piece == 1);
  REQUIRE(in_handle);
  CHECK(handle_clairaut_drift(tr) < 1e-8);
  CHECK(tr.hamiltonian_drift < 1e-9);
}

TEST_CASE("wormhole: mid-narrowed warp returns an off-axis ray to its entry end") {
  // warp minimum 0.5; entry with sin(incidence) ~ 0.707 > 0.5 forces a
  // z-turning point inside the handle
  StoDesign d = wormhole_geometry(4.0, warp_collimator(0.5), warp_collimator_prime(0.5));
  Vec3 n{0.0, 0.0, -1.0};  // entry point on the near ball: its south pole
  Vec3 v = Vec3{1.0, 0.0, 1.0}.normalized();
  RayState s;
  s.x = n - v * 2.0;
  s.p = v;
  TraceOptions opts;
  opts.domain_radius = 14.0;
  TraceResult tr = wormhole_trace(d, s, 60.0, opts);
  CHECK(tr.handle_transits == 0);  // came back out the same end
  bool was_inside = false;
  double z_max = 0.0;
  for (const auto& smp : tr.samples)
    if (smp.piece == 1) {
      was_inside = true;
      z_max = std::max(z_max, smp.aux);
    }
  REQUIRE(was_inside);
  CHECK(z_max < 1.0);   // never reached the far end
  CHECK(z_max > 0.05);  // genuinely explored the handle
  REQUIRE(tr.termination == TraceTermination::exited_domain);
  // final segment moves away from the entry ball around the origin
  const auto& fin = tr.final_sample();
  CHECK(fin.pos.dot(fin.momentum) > 0.0);
  CHECK((fin.pos - Vec3{0, 0, 4.0}).norm() > 4.0);  // not near the far ball
}

TEST_CASE("trace rejects degenerate starts") {
  auto m = cloak_ray_metric();
  RayState s;
  s.x = {1.5, 0, 0};
  s.p = {0, 0, 0};
  CHECK_THROWS_AS(trace(*m, s, 1.0, {}), DomainError);
  RayState s2;
  s2.x = {1.0, 0, 0};  // on the cloaking surface
  s2.p = {1, 0, 0};
  CHECK_THROWS_AS(trace(*m, s2, 1.0, {}), DomainError);
}
