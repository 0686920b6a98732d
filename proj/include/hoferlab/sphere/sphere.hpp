#pragma once

#include "hoferlab/core/isotopy.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hoferlab::sphere {

// h on [-1, 1] with its first two derivatives; H = h(z) on the sphere.
struct ProfileFunction {
  std::function<double(double)> h, dh, d2h;
  std::string name;

  static ProfileFunction quadratic(double K);           // K z^2 / 2
  static ProfileFunction affine(double slope, double c = 0.0);

  double operator()(double z) const { return h(z); }
  // Sampled sign of h'' on `samples` points: +1 convex, -1 concave, 0 neither
  // (or a vanishing sample).
  int convexity(int samples = 2049) const;
  // h'(+-1) away from 2 pi Z (rotation hypothesis) and from 2 pi (Z + 1/2)
  // (Calabi hypothesis), by more than tol.
  bool boundary_slopes_off_integers(double tol = 1e-9) const;
  bool boundary_slopes_off_half_integers(double tol = 1e-9) const;
  core::Hamiltonian hamiltonian() const;  // autonomous, zonal
};

// (theta + t h'(z) mod 2 pi, z); exact.
Vec rotation_map(const ProfileFunction& h, double t, const Vec& x);

struct FixSet {
  bool all = false;            // h' constant in 2 pi Z: every point is fixed
  std::vector<double> levels;  // sorted, both poles included
  std::vector<int> k;          // the integer of each interior level (poles: 0)
  std::vector<double> interior() const;
};

// Parallels where h'(z) in 2 pi Z (Brent on sign changes of a 2048-cell grid)
// plus the poles.
FixSet fix_set(const ProfileFunction& h, int cells = 2048);

// Signed area swept by the arc under the isotopy on [t0, t1]: the integral of
// dtheta ^ dz (d_u Phi, d_t Phi) over the (u, t) square, Phi(u, t) = phi_t(arc(u)).
struct SweptArea {
  double signed_area = 0.0;
  double area = 0.0;  // absolute value
};
using Arc = std::function<Vec(double)>;
SweptArea swept_area(const core::Hamiltonian& H, core::IsotopyPtr phi, const Arc& arc, double t0,
                     double t1, int order = 16, int u_panels = 8, int t_panels = 8);
// Rotation isotopy of h(z): uses the exact map and field.
SweptArea swept_area(const ProfileFunction& h, const Arc& arc, double t0, double t1, int order = 16,
                     int u_panels = 8, int t_panels = 8);
// theta = theta0, z from -1 to 1.
Arc meridian(double theta0 = 0.0);

// Area of the round unit sphere from the spherical parametrization
// (polar angle), independent of the (theta, z) area form.
double sphere_area_by_quadrature(int order = 16, int panels = 4);

// H_t on the sphere minus a cap around `puncture`; cap = {1 - <x, p> < cap_size}
// in the unit-vector embedding (z > 1 - cap_size at the north pole).
struct CalabiInput {
  core::Hamiltonian H;
  Vec puncture;  // (theta, z); default north pole
  double cap_size = 1e-3;
  double support_tol = 1e-10;
};

struct CalabiReport {
  double value = 0.0;
  double cap_sup = 0.0;  // sup |H| sampled on the cap
  double scale = 0.0;    // sup |H| sampled on the sphere
};

// int over [0, 1] x S^2 of H_t dtheta dz; refuses if H is not supported away
// from the cap.
CalabiReport calabi(const CalabiInput& in, int order = 16, int z_panels = 16, int theta_nodes = 128,
                    int t_panels = 4);

// Radial bump around `center` (theta, z): f(d) = height * (1 - smoothstep(d / radius))
// in the chordal distance d, with f = 0 for d >= radius.
core::Hamiltonian sphere_bump(const Vec& center, double radius, double height,
                              std::function<double(double)> time_profile = nullptr);
// Its exact integral over the sphere, 2 pi int f(sqrt(2 - 2w)) dw.
double sphere_bump_integral(double radius, double height);

Vec embed(const Vec& x);  // (theta, z) -> unit vector in R^3

struct Correction {
  double zbar = 0.0;
  double rho = 0.0;  // slope of the affine correction
  int k = 0;         // at a pole: the integer nearest h'(zbar) / 2 pi
  double gap = 0.0;  // int_{-1}^{1} (h - h_zbar) dz
};

// h_zbar(z) = h(zbar) + rho (z - zbar): rho = h'(zbar) inside, the nearest
// 2 pi k to h'(zbar) at a pole.
Correction profile_correction(const ProfileFunction& h, double zbar);

struct CofH {
  double value = 0.0;  // max(0, raw)
  double raw = 0.0;    // -4 pi + inf |gap|
  Correction best;
  std::vector<Correction> candidates;
};

// c(h) over the candidates Z u {-1, 1}; refuses when h'(+-1) is in 2 pi (Z + 1/2).
CofH c_of_h(const ProfileFunction& h);

enum class Verdict { certified, inconclusive };
const char* to_string(Verdict v);

struct Certificate {
  Verdict verdict = Verdict::inconclusive;
  double upper = 4 * kPi;  // A
  double lower = 0.0;      // c(h) / 2
  double c = 0.0;
  int convexity = 0;
  bool slopes_off_integers = false;
  bool slopes_off_half_integers = false;
  std::vector<std::string> reasons;  // why not certified
};

// Refuses when a boundary slope lies in 2 pi Z or 2 pi (Z + 1/2).
Certificate no_stable_geodesic_certificate(const ProfileFunction& h);

// Smallest K in [lo, hi] with c(family(K)) / 2 > 4 pi, bracketed by bisection
// to relative width rel. Needs the predicate false at lo and true at hi.
struct Threshold {
  double lo = 0.0, hi = 0.0;
  int iterations = 0;
  double estimate() const { return 0.5 * (lo + hi); }
};
Threshold certificate_threshold(const std::function<ProfileFunction(double)>& family, double lo,
                                double hi, double rel = 1e-3);

// Number of fixed parallels strictly between the levels of p and P.
int sharp_count(const ProfileFunction& h, const Vec& p, const Vec& P);

}  // namespace hoferlab::sphere
