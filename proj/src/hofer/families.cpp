#include "hoferlab/hofer/families.hpp"

#include "hoferlab/core/bump.hpp"

#include <algorithm>
#include <cmath>

namespace hoferlab::hofer {

using core::Hamiltonian;

Hamiltonian sphere_height(std::function<double(double)> w, std::function<double(double)> dw) {
  auto d = core::PhaseDomain::sphere();
  if (!w) {
    Vec g(2);
    g << 0.0, 1.0;
    return Hamiltonian(d, [](double, const Vec& x) { return x(1); },
                       [g](double, const Vec&) { return g; })
        .with_autonomous()
        .with_zonal([](double, double) { return 1.0; });
  }
  Hamiltonian h(d, [w](double t, const Vec& x) { return w(t) * x(1); },
                [w](double t, const Vec&) {
                  Vec g(2);
                  g << 0.0, w(t);
                  return g;
                });
  if (dw) h = h.with_time_derivative([dw](double t, const Vec& x) { return dw(t) * x(1); });
  return h.with_zonal([w](double t, double) { return w(t); });
}

Vec TwoBumpFamily::c1() const { return (Vec(2) << -1.0, 0.0).finished(); }
Vec TwoBumpFamily::c2() const { return (Vec(2) << 1.0, 0.0).finished(); }
double TwoBumpFamily::w1(double t) const { return 1.0 + 0.5 * std::tanh((switch_time - t) / width); }
double TwoBumpFamily::w2(double t) const { return 1.0 - 0.5 * std::tanh((switch_time - t) / width); }

Hamiltonian TwoBumpFamily::hamiltonian() const {
  auto b1 = core::peak_bump(c1(), R, 1.0), b2 = core::peak_bump(c2(), R, 1.0);
  const double sw = switch_time, wd = width;
  auto s = [sw, wd](double t) { return std::tanh((sw - t) / wd); };
  auto ds = [sw, wd](double t) {
    double th = std::tanh((sw - t) / wd);
    return -(1.0 - th * th) / wd;
  };
  return core::time_weighted(b1, [s](double t) { return 1.0 + 0.5 * s(t); },
                             [ds](double t) { return 0.5 * ds(t); }) +
         core::time_weighted(b2, [s](double t) { return 1.0 - 0.5 * s(t); },
                             [ds](double t) { return -0.5 * ds(t); });
}

double PlateauFamily::s(double t) const {
  return core::ramp(t, plateau_a - ramp, plateau_a) * (1.0 - core::ramp(t, plateau_b, plateau_b + ramp));
}

Hamiltonian PlateauFamily::hamiltonian() const {
  Vec c1(2), c2(2);
  c1 << -1.0, 0.0;
  c2 << 1.0, 0.0;
  auto peak = core::peak_bump(c1, R, 1.0);
  auto flat = core::plateau_bump(c1, 0.5 * R, R, 1.0);
  auto well = core::peak_bump(c2, R, 1.0);
  const PlateauFamily f = *this;
  auto s = [f](double t) { return f.s(t); };
  auto ds = [f](double t) {
    return core::ramp_d(t, f.plateau_a - f.ramp, f.plateau_a) *
               (1.0 - core::ramp(t, f.plateau_b, f.plateau_b + f.ramp)) -
           core::ramp(t, f.plateau_a - f.ramp, f.plateau_a) *
               core::ramp_d(t, f.plateau_b, f.plateau_b + f.ramp);
  };
  return core::time_weighted(peak, [s](double t) { return 1.0 - s(t); },
                             [ds](double t) { return -ds(t); }) +
         core::time_weighted(flat, s, ds) - well;
}

core::Hamiltonian saturated_well(double s1, double s2, double slope, Vec center) {
  if (!(0.0 < s1 && s1 < s2)) throw ConfigurationError("saturated_well needs 0 < s1 < s2");
  const double w = s2 - s1;
  // q(u) = u - u^3 + u^4/2: q'(0) = 1, q''(0) = q'(1) = q''(1) = 0
  auto g = [=](double s) {
    if (s <= s1) return slope * s;
    double u = std::min((s - s1) / w, 1.0);
    return slope * (s1 + w * (u - u * u * u + 0.5 * u * u * u * u));
  };
  auto dg = [=](double s) {
    if (s <= s1) return slope;
    double u = std::min((s - s1) / w, 1.0);
    return slope * (1.0 - 3 * u * u + 2 * u * u * u);
  };
  auto d = core::PhaseDomain::euclidean(static_cast<int>(center.size()));
  return core::Hamiltonian(
             d, [=](double, const Vec& x) { return g((x - center).squaredNorm()); },
             [=](double, const Vec& x) { return Vec(2.0 * dg((x - center).squaredNorm()) * (x - center)); })
      .with_autonomous(true);
}

core::Hamiltonian gaussian_well(double C, double r0, Vec center) {
  auto d = core::PhaseDomain::euclidean(static_cast<int>(center.size()));
  const double k = 1.0 / (r0 * r0);
  return core::Hamiltonian(
             d, [=](double, const Vec& x) { return C * (1.0 - std::exp(-k * (x - center).squaredNorm())); },
             [=](double, const Vec& x) {
               return Vec(2.0 * C * k * std::exp(-k * (x - center).squaredNorm()) * (x - center));
             })
      .with_autonomous(true);
}

}  // namespace hoferlab::hofer
