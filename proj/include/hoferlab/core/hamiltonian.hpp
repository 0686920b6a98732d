#pragma once

#include "hoferlab/core/domain.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace hoferlab::core {

// Outside the ball the function is the constant `outside_value` (so its
// vector field vanishes and its flow fixes every point there).
struct SupportBall {
  Vec center;
  double radius = 0.0;
  double outside_value = 0.0;
  bool contains(const Vec& x) const { return (x - center).norm() < radius; }
};

// A scalar field H(t, x) on a phase domain, with analytic or
// finite-difference derivatives. Cheap to copy; immutable.
class Hamiltonian {
 public:
  using ValueFn = std::function<double(double, const Vec&)>;
  using GradFn = std::function<Vec(double, const Vec&)>;
  // d/dz of h_t(z) for zonal sphere Hamiltonians H = h_t(z).
  using ZonalFn = std::function<double(double, double)>;

  Hamiltonian();  // the zero function on R^2
  Hamiltonian(PhaseDomain domain, ValueFn value, GradFn gradient = nullptr);

  static Hamiltonian zero(const PhaseDomain& d);
  static Hamiltonian constant(const PhaseDomain& d, double c);

  double value(double t, const Vec& x) const;
  double operator()(double t, const Vec& x) const { return value(t, x); }
  Vec gradient(double t, const Vec& x) const;
  Vec fd_gradient(double t, const Vec& x) const;
  // dH/dt, analytic when supplied.
  double time_derivative(double t, const Vec& x) const;
  // Central second differences with step h (per coordinate), symmetrized.
  Mat hessian(double t, const Vec& x, double h) const;

  const PhaseDomain& domain() const { return impl_->domain; }
  bool has_analytic_gradient() const { return static_cast<bool>(impl_->grad); }
  bool is_zero() const { return impl_->zero; }
  bool autonomous() const { return impl_->autonomous; }
  bool pole_regular() const { return impl_->pole_regular; }
  const std::optional<SupportBall>& support() const { return impl_->support; }
  const ZonalFn& zonal() const { return impl_->zonal; }

  Hamiltonian with_gradient(GradFn g) const;
  Hamiltonian with_time_derivative(ValueFn dt) const;
  Hamiltonian with_support(SupportBall s) const;
  Hamiltonian with_autonomous(bool a = true) const;
  // Marks a sphere Hamiltonian whose chart field stays bounded at the poles
  // with vanishing z-velocity there, so chart integration may enter the caps.
  Hamiltonian with_pole_regular(bool r = true) const;
  Hamiltonian with_zonal(ZonalFn dh) const;

 private:
  struct Impl {
    PhaseDomain domain;
    ValueFn value;
    GradFn grad;
    ValueFn dt;
    std::optional<SupportBall> support;
    ZonalFn zonal;
    bool zero = false;
    bool autonomous = false;
    bool pole_regular = false;
  };
  explicit Hamiltonian(std::shared_ptr<const Impl> p) : impl_(std::move(p)) {}
  Hamiltonian modified(const std::function<void(Impl&)>& f) const;

  std::shared_ptr<const Impl> impl_;
};

Hamiltonian operator+(const Hamiltonian& a, const Hamiltonian& b);
Hamiltonian operator-(const Hamiltonian& a);
Hamiltonian operator-(const Hamiltonian& a, const Hamiltonian& b);
Hamiltonian operator*(double c, const Hamiltonian& h);
// t -> w(t) H(t, x). With dw empty the time derivative falls back to
// finite differences.
Hamiltonian time_weighted(const Hamiltonian& h, std::function<double(double)> w,
                          std::function<double(double)> dw);
// Generator of the reparametrized path t -> phi_{beta(t)}: beta'(t) H(beta(t), x).
Hamiltonian reparametrized(const Hamiltonian& h, std::function<double(double)> beta,
                           std::function<double(double)> dbeta);

// Finite-difference step (machine epsilon)^{1/3} * scale.
double fd_step(double scale);

}  // namespace hoferlab::core
