#include "hoferlab/core/bump.hpp"

#include <cmath>

namespace hoferlab::core {

double smoothstep(double u) {
  if (u <= 0) return 0.0;
  if (u >= 1) return 1.0;
  return u * u * u * (10 + u * (-15 + 6 * u));
}

double smoothstep_d(double u) {
  if (u <= 0 || u >= 1) return 0.0;
  return 30 * u * u * (1 - u) * (1 - u);
}

double smoothstep_dd(double u) {
  if (u <= 0 || u >= 1) return 0.0;
  return 60 * u * (1 - u) * (1 - 2 * u);
}

double smoothstep_integral(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 0.5 + (u - 1.0);
  return u * u * u * u * (2.5 + u * (-3.0 + u));
}

double Plateau::operator()(double r) const { return 1.0 - smoothstep((r - r_in) / (r_out - r_in)); }

double Plateau::d(double r) const { return -smoothstep_d((r - r_in) / (r_out - r_in)) / (r_out - r_in); }

double ramp(double t, double a, double b) { return smoothstep((t - a) / (b - a)); }
double ramp_d(double t, double a, double b) { return smoothstep_d((t - a) / (b - a)) / (b - a); }

Hamiltonian plateau_bump(const Vec& center, double r_in, double r_out, double height) {
  if (!(r_out > r_in && r_in >= 0)) throw ConfigurationError("plateau bump needs 0 <= r_in < r_out");
  Plateau p{r_in, r_out};
  const int n = static_cast<int>(center.size());
  Hamiltonian H(
      PhaseDomain::euclidean(n),
      [=](double, const Vec& x) { return height * p((x - center).norm()); },
      [=](double, const Vec& x) {
        Vec d = x - center;
        double r = d.norm();
        if (r <= r_in || r >= r_out || r == 0.0) return Vec(Vec::Zero(n));
        return Vec(height * p.d(r) / r * d);
      });
  return H.with_support({center, r_out, 0.0}).with_autonomous(true);
}

double peak_profile(double r, double R) {
  double s = 1.0 - (r * r) / (R * R);
  return s > 0 ? s * s * s : 0.0;
}

double peak_profile_d(double r, double R) {
  double s = 1.0 - (r * r) / (R * R);
  return s > 0 ? -6.0 * r / (R * R) * s * s : 0.0;
}

Hamiltonian peak_bump(const Vec& center, double R, double height) {
  const int n = static_cast<int>(center.size());
  Hamiltonian H(
      PhaseDomain::euclidean(n),
      [=](double, const Vec& x) { return height * peak_profile((x - center).norm(), R); },
      [=](double, const Vec& x) {
        Vec d = x - center;
        double s = 1.0 - d.squaredNorm() / (R * R);
        if (s <= 0) return Vec(Vec::Zero(n));
        return Vec(-6.0 * height / (R * R) * s * s * d);
      });
  return H.with_support({center, R, 0.0}).with_autonomous(true);
}

}  // namespace hoferlab::core
