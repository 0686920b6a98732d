#include "hoferlab/core/isotopy.hpp"

#include <cmath>

namespace hoferlab::core {

namespace {

class IdentityIsotopy : public Isotopy {
 public:
  explicit IdentityIsotopy(PhaseDomain d) : d_(d) {}
  const PhaseDomain& domain() const override { return d_; }
  Vec forward(double, const Vec& x) const override { return x; }
  Vec inverse(double, const Vec& x) const override { return x; }
  Hamiltonian generator() const override { return Hamiltonian::zero(d_); }
  bool trivial_at(double) const override { return true; }

 private:
  PhaseDomain d_;
};

class FlowIsotopy : public Isotopy {
 public:
  FlowIsotopy(Hamiltonian H, double tol) : H_(std::move(H)), tol_(tol) {}
  const PhaseDomain& domain() const override { return H_.domain(); }
  Vec forward(double t, const Vec& x) const override { return flow_map(H_, x, 0.0, t, tol_); }
  Vec inverse(double t, const Vec& x) const override { return flow_map(H_, x, t, 0.0, tol_); }
  Hamiltonian generator() const override { return H_; }
  bool trivial_at(double t) const override { return t == 0.0 || H_.is_zero(); }

 private:
  Hamiltonian H_;
  double tol_;
};

class CommutingFamily : public Isotopy {
 public:
  CommutingFamily(std::vector<Hamiltonian> K, std::vector<ScalarFn> s, std::vector<ScalarFn> ds,
                  double tol)
      : K_(std::move(K)), s_(std::move(s)), ds_(std::move(ds)), tol_(tol) {
    if (K_.empty() || K_.size() != s_.size() || K_.size() != ds_.size())
      throw ConfigurationError("commuting family needs matching K, sigma, sigma' lists");
    gen_ = time_weighted(K_[0], ds_[0], nullptr);
    for (std::size_t j = 1; j < K_.size(); ++j) gen_ = gen_ + time_weighted(K_[j], ds_[j], nullptr);
  }
  const PhaseDomain& domain() const override { return K_[0].domain(); }
  Vec forward(double t, const Vec& x) const override { return apply(t, x, 1.0); }
  Vec inverse(double t, const Vec& x) const override { return apply(t, x, -1.0); }
  Hamiltonian generator() const override { return gen_; }
  bool trivial_at(double t) const override {
    for (const auto& s : s_)
      if (s(t) != 0.0) return false;
    return true;
  }

 private:
  Vec apply(double t, const Vec& x, double sign) const {
    Vec y = x;
    for (std::size_t j = 0; j < K_.size(); ++j) {
      double s = s_[j](t);
      if (s != 0.0) y = flow_map(K_[j], y, 0.0, sign * s, tol_);
    }
    return y;
  }
  std::vector<Hamiltonian> K_;
  std::vector<ScalarFn> s_, ds_;
  Hamiltonian gen_;
  double tol_;
};

class Composed : public Isotopy {
 public:
  Composed(IsotopyPtr o, IsotopyPtr i) : o_(std::move(o)), i_(std::move(i)) {}
  const PhaseDomain& domain() const override { return i_->domain(); }
  Vec forward(double t, const Vec& x) const override { return o_->forward(t, i_->forward(t, x)); }
  Vec inverse(double t, const Vec& x) const override { return i_->inverse(t, o_->inverse(t, x)); }
  Hamiltonian generator() const override {
    return compose_hamiltonians(o_->generator(), i_->generator(), o_);
  }
  bool trivial_at(double t) const override { return o_->trivial_at(t) && i_->trivial_at(t); }

 private:
  IsotopyPtr o_, i_;
};

class Conjugated : public Isotopy {
 public:
  Conjugated(Hamiltonian S, IsotopyPtr phi, double tol) : S_(std::move(S)), phi_(std::move(phi)), tol_(tol) {}
  const PhaseDomain& domain() const override { return phi_->domain(); }
  Vec forward(double t, const Vec& x) const override { return psi(phi_->forward(t, psi_inv(x))); }
  Vec inverse(double t, const Vec& x) const override { return psi(phi_->inverse(t, psi_inv(x))); }
  Hamiltonian generator() const override {
    Hamiltonian H = phi_->generator();
    auto self = *this;
    return Hamiltonian(H.domain(), [H, self](double t, const Vec& x) { return H.value(t, self.psi_inv(x)); });
  }

 private:
  Vec psi(const Vec& x) const { return flow_map(S_, x, 0.0, 1.0, tol_); }
  Vec psi_inv(const Vec& x) const { return flow_map(S_, x, 1.0, 0.0, tol_); }
  Hamiltonian S_;
  IsotopyPtr phi_;
  double tol_;
};

}  // namespace

IsotopyPtr identity_isotopy(const PhaseDomain& d) { return std::make_shared<IdentityIsotopy>(d); }

IsotopyPtr flow_isotopy(const Hamiltonian& H, double tol) {
  return std::make_shared<FlowIsotopy>(H, tol);
}

IsotopyPtr autonomous_family(const Hamiltonian& K, ScalarFn sigma, ScalarFn dsigma, double tol) {
  return commuting_family({K}, {std::move(sigma)}, {std::move(dsigma)}, tol);
}

IsotopyPtr commuting_family(std::vector<Hamiltonian> K, std::vector<ScalarFn> sigma,
                            std::vector<ScalarFn> dsigma, double tol) {
  for (auto& k : K) k = k.with_autonomous(true);
  return std::make_shared<CommutingFamily>(std::move(K), std::move(sigma), std::move(dsigma), tol);
}

IsotopyPtr compose(IsotopyPtr outer, IsotopyPtr inner) {
  return std::make_shared<Composed>(std::move(outer), std::move(inner));
}

IsotopyPtr conjugate_by_flow(const Hamiltonian& S, IsotopyPtr phi, double tol) {
  return std::make_shared<Conjugated>(S.with_autonomous(true), std::move(phi), tol);
}

Hamiltonian compose_hamiltonians(const Hamiltonian& Hpsi, const Hamiltonian& Hphi, IsotopyPtr psi) {
  if (Hpsi.is_zero()) return Hphi;
  if (Hphi.is_zero()) return Hpsi;
  return Hamiltonian(Hphi.domain(), [Hpsi, Hphi, psi](double t, const Vec& x) {
    Vec y = psi->trivial_at(t) ? x : psi->inverse(t, x);
    return Hpsi.value(t, x) + Hphi.value(t, y);
  });
}

TimeOneFamily::TimeOneFamily(Hamiltonian A, double tol) : A_(std::move(A)), tol_(tol) {}

bool TimeOneFamily::outside(const Vec& x) const {
  const auto& s = A_.support();
  return s && !s->contains(x);
}

Vec TimeOneFamily::forward(double t, const Vec& x) const {
  if (outside(x)) return x;
  OdeOptions o;
  o.rtol = o.atol = tol_;
  OdeRhs f = [this, t](double, const Vec& y, Vec& dy) { vector_field(A_, t, y, dy); };
  return integrate(f, 0.0, 1.0, x, o);
}

Vec TimeOneFamily::inverse(double t, const Vec& x) const { return generator_and_inverse(t, x).second; }

std::pair<double, Vec> TimeOneFamily::generator_and_inverse(double t, const Vec& x) const {
  if (outside(x)) return {0.0, x};
  const Eigen::Index n = x.size();
  Vec s0(n + 1);
  s0.head(n) = x;
  s0(n) = 0.0;
  OdeOptions o;
  o.rtol = o.atol = tol_;
  Vec y(n), dy(n);
  OdeRhs f = [&, t](double, const Vec& s, Vec& ds) {
    y = s.head(n);
    vector_field(A_, t, y, dy);
    ds.resize(n + 1);
    ds.head(n) = -dy;
    ds(n) = A_.time_derivative(t, y);
  };
  Vec e = integrate(f, 0.0, 1.0, s0, o);
  return {e(n), Vec(e.head(n))};
}

Hamiltonian TimeOneFamily::generator() const {
  auto self = std::make_shared<TimeOneFamily>(*this);
  Hamiltonian F(A_.domain(), [self](double t, const Vec& x) { return self->generator_and_inverse(t, x).first; });
  if (const auto& s = A_.support()) F = F.with_support({s->center, s->radius, 0.0});
  return F;
}

Hamiltonian TimeOneFamily::composite_with(const Hamiltonian& H) const {
  auto self = std::make_shared<TimeOneFamily>(*this);
  return Hamiltonian(H.domain(), [self, H](double t, const Vec& x) {
    auto [F, y] = self->generator_and_inverse(t, x);
    return F + H.value(t, y);
  });
}

}  // namespace hoferlab::core
