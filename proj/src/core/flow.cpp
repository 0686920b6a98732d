#include "hoferlab/core/flow.hpp"

#include "hoferlab/core/quadrature.hpp"
#include "hoferlab/core/structures.hpp"

#include <algorithm>
#include <cmath>

namespace hoferlab::core {

void vector_field(const Hamiltonian& H, double t, const Vec& x, Vec& out) {
  Vec g = H.gradient(t, x);
  out.resize(g.size());
  for (Eigen::Index i = 0; i + 1 < g.size(); i += 2) {
    out(i) = g(i + 1);
    out(i + 1) = -g(i);
  }
}

Vec symplectic_gradient(const Hamiltonian& H, double t, const Vec& x) {
  H.domain().check(x);
  if (H.domain().is_sphere() && std::abs(x(1)) >= 1.0)
    throw ChartError("symplectic gradient requested at a pole of the (theta, z) chart");
  Vec out;
  vector_field(H, t, x, out);
  return out;
}

double poisson_bracket(const Hamiltonian& F, const Hamiltonian& G, double t, const Vec& x) {
  F.domain().check(x);
  if (F.domain().is_sphere() && std::abs(x(1)) >= 1.0)
    throw ChartError("Poisson bracket requested at a pole of the (theta, z) chart");
  return F.gradient(t, x).dot(apply_J(G.gradient(t, x)));
}

namespace {

// theta advance of a zonal flow: integral of dh_s(z)/dz over [t0, t1].
double zonal_advance(const Hamiltonian& H, double z, double t0, double t1) {
  const auto& dh = H.zonal();
  if (H.autonomous()) return (t1 - t0) * dh(t0, z);
  int panels = std::max(1, static_cast<int>(std::ceil(8 * std::abs(t1 - t0))));
  return gauss_integrate([&](double s) { return dh(s, z); }, t0, t1, 20, panels);
}

bool fixed_by_support(const Hamiltonian& H, const Vec& x) {
  if (H.is_zero()) return true;
  const auto& s = H.support();
  return s && !H.domain().is_sphere() && !s->contains(x);
}

Vec integrate_chart(const Hamiltonian& H, const Vec& x0, double t0, double t1, double tol,
                    OdeSolution* dense) {
  const PhaseDomain& d = H.domain();
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  OdeRhs rhs = [&H](double t, const Vec& x, Vec& dx) { vector_field(H, t, x, dx); };
  OdeObserver obs;
  if (d.is_sphere()) {
    const double cap = 1.0 - d.pole_cap();
    const bool regular = H.pole_regular();
    obs = [cap, regular](double, const Vec& x) {
      double az = std::abs(x(1));
      if (az > 1.0 + 1e-9) return false;
      if (az > cap && !regular) return false;
      return true;
    };
  }
  return integrate(rhs, t0, t1, x0, opt, dense, obs);
}

}  // namespace

Vec flow_map(const Hamiltonian& H, const Vec& x0, double t0, double t1, double tol) {
  const PhaseDomain& d = H.domain();
  d.check(x0);
  if (t0 == t1 || fixed_by_support(H, x0)) return x0;
  if (d.is_sphere() && H.zonal()) {
    Vec y = x0;
    y(0) += zonal_advance(H, x0(1), t0, t1);
    return y;
  }
  if (d.is_sphere() && !H.pole_regular() && std::abs(x0(1)) > 1.0 - d.pole_cap())
    throw IntegrationError("trajectory starts inside a pole cap of a non-zonal field", t0);
  try {
    return integrate_chart(H, x0, t0, t1, tol, nullptr);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("flow left the chart: ") + e.what(), e.last_valid_time());
  }
}

std::pair<Vec, Mat> flow_map_jacobian(const Hamiltonian& H, const Vec& x0, double t0, double t1,
                                      double tol) {
  const PhaseDomain& d = H.domain();
  if (d.is_sphere()) throw ConfigurationError("flow_map_jacobian is implemented on R^2n");
  d.check(x0);
  const Eigen::Index n = x0.size();
  if (t0 == t1 || fixed_by_support(H, x0)) return {x0, Mat::Identity(n, n)};
  Vec s0(n + n * n);
  s0.head(n) = x0;
  Eigen::Map<Mat>(s0.data() + n, n, n).setIdentity();
  OdeOptions o;
  o.rtol = o.atol = tol;
  OdeRhs f = [&H, n](double t, const Vec& s, Vec& ds) {
    Vec x = s.head(n), v(n);
    vector_field(H, t, x, v);
    // d(X_H) by a fourth-order difference of the field. Shear flows turn
    // Hessian errors into square-root growth, so second order is not enough.
    Mat DX(n, n);
    Vec vp(n), vm(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 2e-6 * std::max(1.0, std::abs(x(j)));
      Vec d[2];
      for (int k = 1; k <= 2; ++k) {
        Vec xp = x, xm = x;
        xp(j) += k * h;
        xm(j) -= k * h;
        vector_field(H, t, xp, vp);
        vector_field(H, t, xm, vm);
        d[k - 1] = (vp - vm) / (2 * k * h);
      }
      DX.col(j) = (4.0 * d[0] - d[1]) / 3.0;
    }
    ds.resize(s.size());
    ds.head(n) = v;
    Eigen::Map<Mat>(ds.data() + n, n, n) = DX * Eigen::Map<const Mat>(s.data() + n, n, n);
  };
  Vec s1 = integrate(f, t0, t1, s0, o);
  return {s1.head(n), Eigen::Map<const Mat>(s1.data() + n, n, n)};
}

Trajectory flow(const Hamiltonian& H, const Vec& x0, double t0, double t1, double tol) {
  const PhaseDomain& d = H.domain();
  d.check(x0);
  Trajectory tr;
  if (t0 == t1 || fixed_by_support(H, x0)) {
    tr.t = {t0, t1};
    tr.x = {x0, x0};
    if (t0 == t1) {
      tr.t.pop_back();
      tr.x.pop_back();
    }
    return tr;
  }
  if (d.is_sphere() && H.zonal()) {
    const int m = 64;
    for (int i = 0; i <= m; ++i) {
      double t = t0 + (t1 - t0) * i / m;
      Vec y = x0;
      y(0) += zonal_advance(H, x0(1), t0, t);
      tr.t.push_back(t);
      tr.x.push_back(d.normalize(y));
    }
    return tr;
  }
  if (d.is_sphere() && !H.pole_regular() && std::abs(x0(1)) > 1.0 - d.pole_cap())
    throw IntegrationError("trajectory starts inside a pole cap of a non-zonal field", t0);
  OdeSolution sol;
  try {
    integrate_chart(H, x0, t0, t1, tol, &sol);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("flow left the chart: ") + e.what(), e.last_valid_time());
  }
  tr.t = std::move(sol.t);
  tr.x.reserve(sol.x.size());
  for (auto& x : sol.x) tr.x.push_back(d.normalize(x));
  return tr;
}

}  // namespace hoferlab::core
