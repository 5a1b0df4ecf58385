#pragma once

// Adaptive Dormand-Prince 5(4) integrator over std::vector<double> state.
// Shared by the radial solver (variable-coefficient intervals) and the ray
// tracer.  Step acceptance on a mixed absolute/relative error norm; FSAL.

#include <cstddef>
#include <functional>
#include <vector>

#include "sto/errors.hpp"

namespace sto {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;   // 0 -> auto
  double max_step = 0.0;       // 0 -> no cap
  double min_step = 1e-14;     // relative to interval length; step collapse guard
  std::size_t max_steps = 2000000;
};

using OdeRhs = std::function<void(double t, const std::vector<double>& y,
                                  std::vector<double>& dydt)>;

/// Called after every accepted step with (t, y, dydt-at-t).  Returning false
/// stops the integration (used for event guards).
using OdeObserver =
    std::function<bool(double t, const std::vector<double>& y, const std::vector<double>& f)>;

struct OdeResult {
  double t_end = 0.0;
  std::vector<double> y_end;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  bool stopped_by_observer = false;
  bool step_collapsed = false;
};

OdeResult integrate_dopri5(const OdeRhs& rhs, double t0, std::vector<double> y0, double t1,
                           const OdeOptions& opts, const OdeObserver& observer = nullptr);

}  // namespace sto
