#include "hoferlab/core/ode.hpp"

#include <algorithm>
#include <cmath>

namespace hoferlab::core {

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double err_norm(const Vec& err, const Vec& x, const Vec& xn, const OdeOptions& o) {
  double s = 0.0;
  const auto n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double sc = o.atol + o.rtol * std::max(std::abs(x(i)), std::abs(xn(i)));
    double r = err(i) / sc;
    s += r * r;
  }
  return n ? std::sqrt(s / n) : 0.0;
}

}  // namespace

Vec integrate(const OdeRhs& f, double t0, double t1, const Vec& x0, const OdeOptions& opt,
              OdeSolution* dense, const OdeObserver& observer) {
  if (dense) {
    dense->t.assign(1, t0);
    dense->x.assign(1, x0);
  }
  if (t1 == t0) return x0;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const Eigen::Index n = x0.size();

  Vec x = x0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), xn(n), err(n);
  double t = t0;
  f(t, x, k1);

  double h = opt.initial_step;
  if (h <= 0.0) {
    double d0 = x.norm(), d1 = k1.norm();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-4 * span : 0.01 * d0 / d1;
    h = std::min(h, span);
    h = std::max(h, 1e-12 * span);
  }
  const double hmax = opt.max_step > 0 ? opt.max_step : span;
  double err_prev = 1e-4;
  long steps = 0;

  while (dir * (t1 - t) > 0) {
    if (++steps > opt.max_steps) throw IntegrationError("step limit exceeded", t);
    h = std::min(h, hmax);
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;
    y = x + hs * a21 * k1;
    f(t + c2 * hs, y, k2);
    y = x + hs * (a31 * k1 + a32 * k2);
    f(t + c3 * hs, y, k3);
    y = x + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * hs, y, k4);
    y = x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * hs, y, k5);
    y = x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + hs, y, k6);
    xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double tn = last ? t1 : t + hs;
    f(tn, xn, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = err_norm(err, x, xn, opt);
    if (!std::isfinite(en)) {
      h *= 0.25;
      if (h < 1e-14 * span) throw IntegrationError("non-finite state", t);
      if (dense) ++dense->rejected;
      continue;
    }
    if (en <= 1.0) {
      if (observer && !observer(tn, xn)) {
        // shrink towards the boundary so the reported time is sharp
        if (h < 1e-9 * span) throw IntegrationError("integration aborted by observer", t);
        h *= 0.5;
        continue;
      }
      t = tn;
      x = xn;
      k1 = k7;  // FSAL
      if (dense) {
        dense->t.push_back(t);
        dense->x.push_back(x);
      }
      double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(en, 1e-4);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      if (dense) ++dense->rejected;
      if (h < 1e-14 * span) throw IntegrationError("step size underflow", t);
    }
  }
  return x;
}

}  // namespace hoferlab::core
