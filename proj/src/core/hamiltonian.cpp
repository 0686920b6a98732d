#include "hoferlab/core/hamiltonian.hpp"

#include <cmath>
#include <limits>

namespace hoferlab::core {

double fd_step(double scale) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(scale));
}

Hamiltonian::Hamiltonian() : Hamiltonian(zero(PhaseDomain::euclidean(2))) {}

Hamiltonian::Hamiltonian(PhaseDomain domain, ValueFn value, GradFn gradient) {
  if (!value) throw ConfigurationError("Hamiltonian needs a value function");
  auto p = std::make_shared<Impl>();
  p->domain = domain;
  p->value = std::move(value);
  p->grad = std::move(gradient);
  impl_ = std::move(p);
}

Hamiltonian Hamiltonian::zero(const PhaseDomain& d) {
  auto p = std::make_shared<Impl>();
  p->domain = d;
  p->value = [](double, const Vec&) { return 0.0; };
  int n = d.dimension();
  p->grad = [n](double, const Vec&) { return Vec(Vec::Zero(n)); };
  p->dt = [](double, const Vec&) { return 0.0; };
  p->zero = true;
  p->autonomous = true;
  p->pole_regular = true;
  p->zonal = [](double, double) { return 0.0; };
  return Hamiltonian(std::shared_ptr<const Impl>(p));
}

Hamiltonian Hamiltonian::constant(const PhaseDomain& d, double c) {
  auto h = zero(d);
  return h.modified([c](Impl& p) {
    p.value = [c](double, const Vec&) { return c; };
    p.zero = false;
  });
}

Hamiltonian Hamiltonian::modified(const std::function<void(Impl&)>& f) const {
  auto p = std::make_shared<Impl>(*impl_);
  f(*p);
  return Hamiltonian(std::shared_ptr<const Impl>(p));
}

double Hamiltonian::value(double t, const Vec& x) const {
  const auto& s = impl_->support;
  if (s && !s->contains(x)) return s->outside_value;
  return impl_->value(t, x);
}

Vec Hamiltonian::fd_gradient(double t, const Vec& x) const {
  Vec g(x.size());
  Vec y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = fd_step(x(i));
    y(i) = x(i) + h;
    double fp = value(t, y);
    y(i) = x(i) - h;
    double fm = value(t, y);
    y(i) = x(i);
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

Vec Hamiltonian::gradient(double t, const Vec& x) const {
  const auto& s = impl_->support;
  if (s && !s->contains(x)) return Vec::Zero(x.size());
  if (impl_->grad) return impl_->grad(t, x);
  return fd_gradient(t, x);
}

double Hamiltonian::time_derivative(double t, const Vec& x) const {
  if (impl_->autonomous) return 0.0;
  const auto& s = impl_->support;
  if (s && !s->contains(x)) return 0.0;
  if (impl_->dt) return impl_->dt(t, x);
  double h = fd_step(1.0);
  return (value(t + h, x) - value(t - h, x)) / (2 * h);
}

Mat Hamiltonian::hessian(double t, const Vec& x, double h) const {
  const Eigen::Index n = x.size();
  Mat H(n, n);
  Vec y = x;
  const double f0 = value(t, x);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x(i) + h;
    double fp = value(t, y);
    y(i) = x(i) - h;
    double fm = value(t, y);
    y(i) = x(i);
    H(i, i) = (fp - 2 * f0 + fm) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si = -1; si <= 1; si += 2)
        for (int sj = -1; sj <= 1; sj += 2) {
          y(i) = x(i) + si * h;
          y(j) = x(j) + sj * h;
          acc += si * sj * value(t, y);
        }
      y(i) = x(i);
      y(j) = x(j);
      H(i, j) = H(j, i) = acc / (4 * h * h);
    }
  }
  return 0.5 * (H + H.transpose());
}

Hamiltonian Hamiltonian::with_gradient(GradFn g) const {
  return modified([&](Impl& p) { p.grad = std::move(g); });
}
Hamiltonian Hamiltonian::with_time_derivative(ValueFn dt) const {
  return modified([&](Impl& p) { p.dt = std::move(dt); });
}
Hamiltonian Hamiltonian::with_support(SupportBall s) const {
  return modified([&](Impl& p) { p.support = std::move(s); });
}
Hamiltonian Hamiltonian::with_autonomous(bool a) const {
  return modified([&](Impl& p) { p.autonomous = a; });
}
Hamiltonian Hamiltonian::with_pole_regular(bool r) const {
  return modified([&](Impl& p) { p.pole_regular = r; });
}
Hamiltonian Hamiltonian::with_zonal(ZonalFn dh) const {
  if (!domain().is_sphere()) throw DomainError("zonal Hamiltonians live on the sphere");
  return modified([&](Impl& p) {
    p.zonal = std::move(dh);
    p.pole_regular = true;
  });
}

namespace {

std::optional<SupportBall> merged(const Hamiltonian& a, const Hamiltonian& b, double ca, double cb) {
  const auto& sa = a.support();
  const auto& sb = b.support();
  if (!sa || !sb) return std::nullopt;
  // smallest ball around the midpoint containing both
  Vec c = 0.5 * (sa->center + sb->center);
  double r = std::max((sa->center - c).norm() + sa->radius, (sb->center - c).norm() + sb->radius);
  return SupportBall{c, r, ca * sa->outside_value + cb * sb->outside_value};
}

}  // namespace

Hamiltonian operator+(const Hamiltonian& a, const Hamiltonian& b) {
  if (!(a.domain() == b.domain())) throw DomainError("sum of Hamiltonians on different domains");
  if (b.is_zero()) return a;
  if (a.is_zero()) return b;
  Hamiltonian r(
      a.domain(), [a, b](double t, const Vec& x) { return a.value(t, x) + b.value(t, x); },
      [a, b](double t, const Vec& x) { return Vec(a.gradient(t, x) + b.gradient(t, x)); });
  r = r.with_time_derivative(
      [a, b](double t, const Vec& x) { return a.time_derivative(t, x) + b.time_derivative(t, x); });
  if (auto s = merged(a, b, 1, 1)) r = r.with_support(*s);
  if (a.zonal() && b.zonal()) {
    auto za = a.zonal(), zb = b.zonal();
    r = r.with_zonal([za, zb](double t, double z) { return za(t, z) + zb(t, z); });
  }
  return r.with_autonomous(a.autonomous() && b.autonomous())
      .with_pole_regular(a.pole_regular() && b.pole_regular());
}

Hamiltonian operator*(double c, const Hamiltonian& h) {
  if (h.is_zero()) return h;
  if (c == 0.0) return Hamiltonian::zero(h.domain());
  Hamiltonian r(
      h.domain(), [h, c](double t, const Vec& x) { return c * h.value(t, x); },
      [h, c](double t, const Vec& x) { return Vec(c * h.gradient(t, x)); });
  r = r.with_time_derivative([h, c](double t, const Vec& x) { return c * h.time_derivative(t, x); });
  if (const auto& s = h.support()) r = r.with_support({s->center, s->radius, c * s->outside_value});
  if (auto z = h.zonal()) r = r.with_zonal([z, c](double t, double zz) { return c * z(t, zz); });
  return r.with_autonomous(h.autonomous()).with_pole_regular(h.pole_regular());
}

Hamiltonian operator-(const Hamiltonian& a) { return (-1.0) * a; }
Hamiltonian operator-(const Hamiltonian& a, const Hamiltonian& b) { return a + (-1.0) * b; }

Hamiltonian time_weighted(const Hamiltonian& h, std::function<double(double)> w,
                          std::function<double(double)> dw) {
  Hamiltonian r(
      h.domain(), [h, w](double t, const Vec& x) {
        double c = w(t);
        return c == 0.0 ? 0.0 : c * h.value(t, x);
      },
      [h, w](double t, const Vec& x) {
        double c = w(t);
        return c == 0.0 ? Vec(Vec::Zero(x.size())) : Vec(c * h.gradient(t, x));
      });
  if (dw)
    r = r.with_time_derivative([h, w, dw](double t, const Vec& x) {
      return dw(t) * h.value(t, x) + w(t) * h.time_derivative(t, x);
    });
  if (const auto& s = h.support()) {
    if (s->outside_value == 0.0) r = r.with_support(*s);
  }
  if (auto z = h.zonal()) r = r.with_zonal([z, w](double t, double zz) { return w(t) * z(t, zz); });
  return r.with_pole_regular(h.pole_regular());
}

Hamiltonian reparametrized(const Hamiltonian& h, std::function<double(double)> beta,
                           std::function<double(double)> dbeta) {
  Hamiltonian r(
      h.domain(), [h, beta, dbeta](double t, const Vec& x) { return dbeta(t) * h.value(beta(t), x); },
      [h, beta, dbeta](double t, const Vec& x) { return Vec(dbeta(t) * h.gradient(beta(t), x)); });
  if (const auto& s = h.support()) {
    if (s->outside_value == 0.0) r = r.with_support(*s);
  }
  if (auto z = h.zonal())
    r = r.with_zonal([z, beta, dbeta](double t, double zz) { return dbeta(t) * z(beta(t), zz); });
  return r.with_pole_regular(h.pole_regular());
}

}  // namespace hoferlab::core
