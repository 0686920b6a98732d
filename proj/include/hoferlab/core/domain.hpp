#pragma once

#include "hoferlab/core/types.hpp"

namespace hoferlab::core {

enum class DomainKind { Euclidean, Sphere };

// Phase space: R^{2n} with the standard form, or S^2 in the (theta, z)
// chart with area form dtheta ^ dz (total area 4 pi).
class PhaseDomain {
 public:
  PhaseDomain() : PhaseDomain(DomainKind::Euclidean, 2) {}

  static PhaseDomain euclidean(int dim);
  static PhaseDomain sphere(double pole_cap = 1e-6);

  DomainKind kind() const { return kind_; }
  bool is_sphere() const { return kind_ == DomainKind::Sphere; }
  int dimension() const { return dim_; }

  // Width of the polar caps z > 1 - cap where chart integration needs care.
  double pole_cap() const { return pole_cap_; }

  bool contains(const Vec& x) const;
  // Throws DomainError if x is not a point of the domain.
  void check(const Vec& x) const;
  // Sphere: wraps theta into [0, 2pi). Euclidean: identity.
  Vec normalize(const Vec& x) const;
  bool at_pole(const Vec& x, double tol = 0.0) const;

  // Total area of the sphere; not defined for R^{2n}.
  double total_area() const;

  bool operator==(const PhaseDomain& o) const { return kind_ == o.kind_ && dim_ == o.dim_; }

 private:
  PhaseDomain(DomainKind k, int d, double cap = 1e-6) : kind_(k), dim_(d), pole_cap_(cap) {}
  DomainKind kind_;
  int dim_;
  double pole_cap_;
};

// Local chart u -> point around `base` that is symplectic at u = 0:
// translation in R^{2n} and in the sphere interior, and
// (a, b) -> (atan2(+-b, a), +-sqrt(1 - a^2 - b^2)) at the poles, oriented so
// that dtheta ^ dz pulls back to da ^ db at the pole.
Vec chart_point(const PhaseDomain& d, const Vec& base, const Vec& u);

}  // namespace hoferlab::core
