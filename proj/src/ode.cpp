#include "sto/ode.hpp"

#include <algorithm>
#include <cmath>

namespace sto {

namespace {

// Dormand-Prince RK5(4)7M coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Error weights (5th order minus embedded 4th order).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeResult integrate_dopri5(const OdeRhs& rhs, double t0, std::vector<double> y0, double t1,
                           const OdeOptions& opts, const OdeObserver& observer) {
  OdeResult res;
  const std::size_t n = y0.size();
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  if (span == 0.0) {
    res.t_end = t0;
    res.y_end = std::move(y0);
    return res;
  }

  std::vector<double> y = std::move(y0), ytmp(n), ynew(n), yerr(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  auto error_norm = [&](const std::vector<double>& ycur, const std::vector<double>& ynx,
                        const std::vector<double>& err) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double sc = opts.atol + opts.rtol * std::max(std::abs(ycur[i]), std::abs(ynx[i]));
      double q = err[i] / sc;
      sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(n));
  };

  rhs(t0, y, k1);

  double h;
  if (opts.initial_step > 0) {
    h = opts.initial_step;
  } else {
    // crude initial step from the first derivative scale
    double ynorm = 0, fnorm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ynorm = std::max(ynorm, std::abs(y[i]));
      fnorm = std::max(fnorm, std::abs(k1[i]));
    }
    h = (fnorm > 0) ? 0.01 * std::max(ynorm, opts.atol) / fnorm : 1e-4 * span;
    h = std::min(h, 0.1 * span);
    h = std::max(h, 1e-10 * span);
  }
  if (opts.max_step > 0) h = std::min(h, opts.max_step);

  double t = t0;
  const double hmin = opts.min_step * span;

  while (dir * (t1 - t) > 0) {
    if (res.steps_accepted + res.steps_rejected > opts.max_steps)
      throw NumericalError("integrate_dopri5: step budget exceeded");
    if (h < hmin) {
      res.step_collapsed = true;
      break;
    }
    bool last = dir * (t + dir * h - t1) >= 0;
    double hs = last ? std::abs(t1 - t) : h;
    double hd = dir * hs;

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hd * a21 * k1[i];
    rhs(t + c2 * hd, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hd * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hd, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hd * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hd, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hd * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * hd, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] =
          y[i] + hd * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + hd, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] =
          y[i] + hd * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + hd, ynew, k7);
    for (std::size_t i = 0; i < n; ++i)
      yerr[i] = hd * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                      e7 * k7[i]);

    double err = error_norm(y, ynew, yerr);
    if (err <= 1.0) {
      t += hd;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      ++res.steps_accepted;
      if (observer && !observer(t, y, k1)) {
        res.stopped_by_observer = true;
        break;
      }
      double fac = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, 5.0);
      h = hs * fac;
    } else {
      ++res.steps_rejected;
      double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      h = hs * fac;
    }
    if (opts.max_step > 0) h = std::min(h, opts.max_step);
  }

  res.t_end = t;
  res.y_end = std::move(y);
  return res;
}

}  // namespace sto
