#pragma once

#include "hoferlab/core/flow.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace hoferlab::core {

// A Hamiltonian isotopy t -> Psi_t with evaluable maps, inverses and
// generating Hamiltonian (d/dt Psi_t = X_{H_t} o Psi_t).
class Isotopy {
 public:
  virtual ~Isotopy() = default;
  virtual const PhaseDomain& domain() const = 0;
  virtual Vec forward(double t, const Vec& x) const = 0;
  virtual Vec inverse(double t, const Vec& x) const = 0;
  virtual Hamiltonian generator() const = 0;
  // True when Psi_t is the identity for this t (lets callers skip work).
  virtual bool trivial_at(double) const { return false; }
};

using IsotopyPtr = std::shared_ptr<const Isotopy>;
using ScalarFn = std::function<double(double)>;

IsotopyPtr identity_isotopy(const PhaseDomain& d);

// phi_t = flow of H from time 0 to t.
IsotopyPtr flow_isotopy(const Hamiltonian& H, double tol = 1e-10);

// Psi_t = phi^K_{sigma(t)} for an autonomous K; generator sigma'(t) K.
IsotopyPtr autonomous_family(const Hamiltonian& K, ScalarFn sigma, ScalarFn dsigma,
                             double tol = 1e-11);

// Product of autonomous families whose K_j Poisson-commute (disjoint
// supports in practice); generator sum_j sigma_j' K_j.
IsotopyPtr commuting_family(std::vector<Hamiltonian> K, std::vector<ScalarFn> sigma,
                            std::vector<ScalarFn> dsigma, double tol = 1e-11);

// t -> outer_t o inner_t, generated by H_outer + H_inner o outer_t^{-1}.
IsotopyPtr compose(IsotopyPtr outer, IsotopyPtr inner);

// psi o phi_t o psi^{-1} with psi the time-1 flow of an autonomous S.
IsotopyPtr conjugate_by_flow(const Hamiltonian& S, IsotopyPtr phi, double tol = 1e-11);

// t, x -> H_Psi(t, x) + H_phi(t, Psi_t^{-1}(x)).
Hamiltonian compose_hamiltonians(const Hamiltonian& Hpsi, const Hamiltonian& Hphi,
                                 IsotopyPtr psi);

// psi_t = time-one map of the autonomous flow of A_t (t frozen). The
// generator is F_t = int_0^1 (dA_t/dt) o Phi^{-s}_{A_t} ds, obtained together
// with psi_t^{-1} from one backward solve with an accumulator.
class TimeOneFamily : public Isotopy {
 public:
  TimeOneFamily(Hamiltonian A, double tol = 1e-12);
  const PhaseDomain& domain() const override { return A_.domain(); }
  Vec forward(double t, const Vec& x) const override;
  Vec inverse(double t, const Vec& x) const override;
  Hamiltonian generator() const override;
  // (F_t(x), psi_t^{-1}(x))
  std::pair<double, Vec> generator_and_inverse(double t, const Vec& x) const;
  // F_t + H o psi_t^{-1}, sharing the backward solve.
  Hamiltonian composite_with(const Hamiltonian& H) const;
  const Hamiltonian& family() const { return A_; }

 private:
  bool outside(const Vec& x) const;
  Hamiltonian A_;
  double tol_;
};

}  // namespace hoferlab::core
