#include "hoferlab/sphere/sphere.hpp"

#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/core/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hoferlab::sphere {

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// distance from s to the lattice step * (Z + offset)
double lattice_distance(double s, double step, double offset) {
  double q = s / step - offset;
  return std::abs(q - std::round(q)) * step;
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

}  // namespace

// ---------------------------------------------------------------- profiles

ProfileFunction ProfileFunction::quadratic(double K) {
  return {[K](double z) { return 0.5 * K * z * z; }, [K](double z) { return K * z; },
          [K](double) { return K; }, "K z^2/2, K=" + num(K)};
}

ProfileFunction ProfileFunction::affine(double slope, double c) {
  return {[slope, c](double z) { return slope * z + c; }, [slope](double) { return slope; },
          [](double) { return 0.0; }, "affine, slope=" + num(slope)};
}

int ProfileFunction::convexity(int samples) const {
  bool pos = true, neg = true;
  for (int i = 0; i < samples; ++i) {
    double z = -1.0 + 2.0 * i / (samples - 1);
    double s = d2h(z);
    pos = pos && s > 0.0;
    neg = neg && s < 0.0;
  }
  return pos ? 1 : neg ? -1 : 0;
}

bool ProfileFunction::boundary_slopes_off_integers(double tol) const {
  return lattice_distance(dh(-1.0), kTwoPi, 0.0) > tol && lattice_distance(dh(1.0), kTwoPi, 0.0) > tol;
}

bool ProfileFunction::boundary_slopes_off_half_integers(double tol) const {
  return lattice_distance(dh(-1.0), kTwoPi, 0.5) > tol && lattice_distance(dh(1.0), kTwoPi, 0.5) > tol;
}

core::Hamiltonian ProfileFunction::hamiltonian() const {
  auto f = h;
  auto g = dh;
  return core::Hamiltonian(core::PhaseDomain::sphere(), [f](double, const Vec& x) { return f(x(1)); },
                           [g](double, const Vec& x) { return v2(0.0, g(x(1))); })
      .with_autonomous()
      .with_zonal([g](double, double z) { return g(z); });
}

Vec rotation_map(const ProfileFunction& h, double t, const Vec& x) {
  Vec y = x;
  y(0) = std::fmod(x(0) + t * h.dh(x(1)), kTwoPi);
  if (y(0) < 0) y(0) += kTwoPi;
  return y;
}

// ---------------------------------------------------------------- fixed parallels

std::vector<double> FixSet::interior() const {
  std::vector<double> v;
  for (double z : levels)
    if (z > -1.0 && z < 1.0) v.push_back(z);
  return v;
}

FixSet fix_set(const ProfileFunction& h, int cells) {
  FixSet fs;
  std::vector<double> z(cells + 1), d(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    z[i] = -1.0 + 2.0 * i / cells;
    d[i] = h.dh(z[i]);
  }
  const double lo = *std::min_element(d.begin(), d.end());
  const double hi = *std::max_element(d.begin(), d.end());
  const double scale = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (hi - lo <= 1e-12 * scale && lattice_distance(lo, kTwoPi, 0.0) <= 1e-12 * scale) {
    fs.all = true;
    fs.levels = {-1.0, 1.0};
    fs.k = {0, 0};
    return fs;
  }
  std::vector<std::pair<double, int>> roots;
  for (int k = int(std::ceil(lo / kTwoPi)); k <= int(std::floor(hi / kTwoPi)); ++k) {
    auto g = [&](double s) { return h.dh(s) - kTwoPi * k; };
    for (int i = 0; i < cells; ++i) {
      double a = d[i] - kTwoPi * k, b = d[i + 1] - kTwoPi * k;
      // exact zeros at nodes are taken at the left end of their cell only
      if (a == 0.0) {
        if (i > 0) roots.push_back({z[i], k});
      } else if (a * b < 0.0) {
        roots.push_back({core::brent_root(g, z[i], z[i + 1]), k});
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  fs.levels.push_back(-1.0);
  fs.k.push_back(0);
  for (auto& [r, k] : roots) {
    if (r <= -1.0 || r >= 1.0) continue;
    fs.levels.push_back(r);
    fs.k.push_back(k);
  }
  fs.levels.push_back(1.0);
  fs.k.push_back(0);
  return fs;
}

// ---------------------------------------------------------------- swept area

Arc meridian(double theta0) {
  return [theta0](double u) { return v2(theta0, -1.0 + 2.0 * u); };
}

namespace {

SweptArea sweep(const std::function<Vec(double, const Vec&)>& map,
                const std::function<Vec(double, const Vec&)>& field, const Arc& arc, double t0, double t1,
                int order, int u_panels, int t_panels) {
  SweptArea out;
  if (t0 == t1) return out;
  const auto& g = core::gauss_legendre(order);
  std::vector<double> us, uw, ts, tw;
  auto nodes = [&](double a, double b, int panels, std::vector<double>& x, std::vector<double>& w) {
    const double hp = (b - a) / panels;
    for (int p = 0; p < panels; ++p)
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        x.push_back(a + hp * (p + 0.5 * (g.x[i] + 1.0)));
        w.push_back(0.5 * hp * g.w[i]);
      }
  };
  nodes(0.0, 1.0, u_panels, us, uw);
  nodes(t0, t1, t_panels, ts, tw);
  std::vector<double> row(us.size(), 0.0);
  core::parallel_for(us.size(), [&](std::size_t i) {
    const double u = us[i];
    const double hu = 1e-6 * std::min(u, 1.0 - u);
    const Vec a = arc(u), ap = arc(u + hu), am = arc(u - hu);
    double acc = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      Vec x = map(ts[j], a);
      Vec du = (map(ts[j], ap) - map(ts[j], am)) / (2 * hu);
      du(0) = std::remainder(du(0) * 2 * hu, kTwoPi) / (2 * hu);  // unwrap theta
      Vec dt = field(ts[j], x);
      acc += tw[j] * (du(0) * dt(1) - du(1) * dt(0));
    }
    row[i] = uw[i] * acc;
  });
  for (double r : row) out.signed_area += r;
  out.area = std::abs(out.signed_area);
  return out;
}

}  // namespace

SweptArea swept_area(const core::Hamiltonian& H, core::IsotopyPtr phi, const Arc& arc, double t0,
                     double t1, int order, int u_panels, int t_panels) {
  if (!H.domain().is_sphere()) throw ConfigurationError("swept_area works on the sphere");
  return sweep([phi](double t, const Vec& x) { return phi->forward(t, x); },
               [H](double t, const Vec& x) {
                 Vec v(2);
                 core::vector_field(H, t, x, v);
                 return v;
               },
               arc, t0, t1, order, u_panels, t_panels);
}

SweptArea swept_area(const ProfileFunction& h, const Arc& arc, double t0, double t1, int order,
                     int u_panels, int t_panels) {
  auto dh = h.dh;
  return sweep([h](double t, const Vec& x) { return rotation_map(h, t, x); },
               [dh](double, const Vec& x) { return v2(dh(x(1)), 0.0); }, arc, t0, t1, order, u_panels,
               t_panels);
}

double sphere_area_by_quadrature(int order, int panels) {
  // |d_theta r x d_phi r| = sin(phi) for r = (sin phi cos theta, sin phi sin theta, cos phi)
  double inner = core::gauss_integrate([](double phi) { return std::sin(phi); }, 0.0, kPi, order, panels);
  return core::gauss_integrate([inner](double) { return inner; }, 0.0, kTwoPi, order, 1);
}

// ---------------------------------------------------------------- Calabi

Vec embed(const Vec& x) {
  const double s = std::sqrt(std::max(0.0, 1.0 - x(1) * x(1)));
  Vec e(3);
  e << s * std::cos(x(0)), s * std::sin(x(0)), x(1);
  return e;
}

namespace {

Vec from_embedded(const Vec& e) {
  Vec n = e / e.norm();
  return v2(std::atan2(n(1), n(0)) + (n(1) < 0 ? kTwoPi : 0.0), std::clamp(n(2), -1.0, 1.0));
}

}  // namespace

core::Hamiltonian sphere_bump(const Vec& center, double radius, double height,
                              std::function<double(double)> time_profile) {
  const Vec c = embed(center);
  auto f = [c, radius, height](const Vec& x) {
    double d = (embed(x) - c).norm();
    return d >= radius ? 0.0 : height * (1.0 - core::smoothstep(d / radius));
  };
  core::Hamiltonian H(core::PhaseDomain::sphere(), [f, time_profile](double t, const Vec& x) {
    return (time_profile ? time_profile(t) : 1.0) * f(x);
  });
  return time_profile ? H : H.with_autonomous();
}

double sphere_bump_integral(double radius, double height) {
  // w = 1 - d^2 / 2 turns the zonal integral into 2 pi int_0^r f(d) d dd
  return kTwoPi * core::gauss_integrate(
                      [&](double d) { return height * (1.0 - core::smoothstep(d / radius)) * d; }, 0.0, radius, 16, 4);
}

CalabiReport calabi(const CalabiInput& in, int order, int z_panels, int theta_nodes, int t_panels) {
  if (!in.H.domain().is_sphere()) throw ConfigurationError("calabi works on the sphere");
  const Vec p = in.puncture.size() == 2 ? in.puncture : v2(0.0, 1.0);
  const Vec pe = embed(p);
  const double gmax = std::acos(1.0 - in.cap_size);

  // support certificate: rings in the cap at a few times
  Vec e1 = std::abs(pe(2)) < 0.9 ? Vec(Eigen::Vector3d(0, 0, 1)) : Vec(Eigen::Vector3d(1, 0, 0));
  e1 = (e1 - e1.dot(pe) * pe).normalized();
  Vec e2 = Eigen::Vector3d(pe(0), pe(1), pe(2)).cross(Eigen::Vector3d(e1(0), e1(1), e1(2)));
  CalabiReport rep;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double f : {0.0, 0.5, 0.999}) {
      for (int k = 0; k < 16; ++k) {
        double a = kTwoPi * k / 16;
        Vec e = std::cos(f * gmax) * pe + std::sin(f * gmax) * (std::cos(a) * e1 + std::sin(a) * e2);
        rep.cap_sup = std::max(rep.cap_sup, std::abs(in.H.value(t, from_embedded(e))));
      }
    }
    for (int i = 0; i <= 32; ++i)
      for (int k = 0; k < 32; ++k)
        rep.scale = std::max(rep.scale, std::abs(in.H.value(t, v2(kTwoPi * k / 32, -1.0 + i / 16.0))));
  }
  if (rep.cap_sup > in.support_tol * std::max(1.0, rep.scale))
    throw Refusal("H is not supported away from the puncture cap (sup on the cap " + num(rep.cap_sup) + ")");

  // trapezoid in theta (periodic), Gauss panels in z and t
  const auto& g = core::gauss_legendre(order);
  std::vector<double> zs, zw;
  for (int q = 0; q < z_panels; ++q)
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      double hp = 2.0 / z_panels;
      zs.push_back(-1.0 + hp * (q + 0.5 * (g.x[i] + 1.0)));
      zw.push_back(0.5 * hp * g.w[i]);
    }
  std::vector<double> ts, tw;
  for (int q = 0; q < t_panels; ++q)
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      double hp = 1.0 / t_panels;
      ts.push_back(hp * (q + 0.5 * (g.x[i] + 1.0)));
      tw.push_back(0.5 * hp * g.w[i]);
    }
  std::vector<double> acc(ts.size(), 0.0);
  const double dth = kTwoPi / theta_nodes;
  core::parallel_for(ts.size(), [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      double r = 0.0;
      for (int k = 0; k < theta_nodes; ++k) r += in.H.value(ts[j], v2(k * dth, zs[i]));
      s += zw[i] * r * dth;
    }
    acc[j] = tw[j] * s;
  });
  for (double a : acc) rep.value += a;
  return rep;
}

// ---------------------------------------------------------------- c(h) and the certificate

Correction profile_correction(const ProfileFunction& h, double zbar) {
  if (zbar < -1.0 || zbar > 1.0) throw ConfigurationError("zbar must lie in [-1, 1]");
  Correction c;
  c.zbar = zbar;
  const double s = h.dh(zbar);
  if (zbar == -1.0 || zbar == 1.0) {
    c.k = int(std::lround(s / kTwoPi));
    c.rho = kTwoPi * c.k;
  } else {
    c.rho = s;
  }
  const double h0 = h.h(zbar), rho = c.rho;
  c.gap = core::gauss_integrate([&](double z) { return h.h(z) - h0 - rho * (z - zbar); }, -1.0, 1.0, 16, 16);
  return c;
}

CofH c_of_h(const ProfileFunction& h) {
  if (!h.boundary_slopes_off_half_integers())
    throw Refusal("h'(+-1) lies in 2 pi (Z + 1/2); c(h) is not defined (h'(-1)=" + num(h.dh(-1.0)) +
                  ", h'(1)=" + num(h.dh(1.0)) + ")");
  CofH out;
  FixSet fs = fix_set(h);
  std::vector<double> cand = fs.levels;
  if (fs.all) cand.push_back(0.0);
  double best = std::numeric_limits<double>::infinity();
  for (double z : cand) {
    Correction c = profile_correction(h, z);
    out.candidates.push_back(c);
    if (std::abs(c.gap) < best) best = std::abs(c.gap), out.best = c;
  }
  out.raw = -4 * kPi + best;
  out.value = std::max(0.0, out.raw);
  return out;
}

const char* to_string(Verdict v) { return v == Verdict::certified ? "CERTIFIED" : "INCONCLUSIVE"; }

Certificate no_stable_geodesic_certificate(const ProfileFunction& h) {
  Certificate cert;
  cert.slopes_off_integers = h.boundary_slopes_off_integers();
  cert.slopes_off_half_integers = h.boundary_slopes_off_half_integers();
  if (!cert.slopes_off_integers || !cert.slopes_off_half_integers)
    throw Refusal("boundary slopes h'(-1)=" + num(h.dh(-1.0)) + ", h'(1)=" + num(h.dh(1.0)) +
                  " must avoid 2 pi Z and 2 pi (Z + 1/2)");
  auto c = c_of_h(h);
  cert.c = c.value;
  cert.lower = 0.5 * c.value;
  cert.convexity = h.convexity();
  if (cert.convexity == 0) cert.reasons.push_back("h is neither strictly convex nor strictly concave");
  if (!(cert.lower > cert.upper)) cert.reasons.push_back("c(h)/2 = " + num(cert.lower) + " does not exceed 4 pi");
  cert.verdict = cert.reasons.empty() ? Verdict::certified : Verdict::inconclusive;
  return cert;
}

Threshold certificate_threshold(const std::function<ProfileFunction(double)>& family, double lo, double hi,
                                double rel) {
  auto above = [&](double K) { return 0.5 * c_of_h(family(K)).value > 4 * kPi; };
  if (above(lo) || !above(hi)) throw Refusal("the threshold is not bracketed by [" + num(lo) + ", " + num(hi) + "]");
  Threshold th{lo, hi, 0};
  while (th.hi - th.lo > rel * th.lo && th.iterations < 200) {
    double m = 0.5 * (th.lo + th.hi);
    (above(m) ? th.hi : th.lo) = m;
    ++th.iterations;
  }
  return th;
}

int sharp_count(const ProfileFunction& h, const Vec& p, const Vec& P) {
  FixSet fs = fix_set(h);
  if (fs.all) throw Refusal("every point is fixed; the count is not defined");
  const double a = std::min(p(1), P(1)), b = std::max(p(1), P(1));
  int n = 0;
  for (double z : fs.levels)
    if (z > a && z < b) ++n;
  return n;
}

}  // namespace hoferlab::sphere
