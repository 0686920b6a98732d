#include "hoferlab/core/domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hoferlab::core {

PhaseDomain PhaseDomain::euclidean(int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw DomainError("Euclidean phase space needs even dimension >= 2, got " + std::to_string(dim));
  return PhaseDomain(DomainKind::Euclidean, dim);
}

PhaseDomain PhaseDomain::sphere(double pole_cap) {
  if (!(pole_cap >= 0.0 && pole_cap < 1.0)) throw DomainError("pole cap must lie in [0, 1)");
  return PhaseDomain(DomainKind::Sphere, 2, pole_cap);
}

bool PhaseDomain::contains(const Vec& x) const {
  if (x.size() != dim_) return false;
  if (!x.allFinite()) return false;
  if (kind_ == DomainKind::Sphere) return std::abs(x(1)) <= 1.0 + 1e-12;
  return true;
}

void PhaseDomain::check(const Vec& x) const {
  if (x.size() != dim_)
    throw DomainError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                      std::to_string(dim_));
  if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
  if (kind_ == DomainKind::Sphere && std::abs(x(1)) > 1.0 + 1e-12)
    throw DomainError("sphere point with |z| > 1");
}

Vec PhaseDomain::normalize(const Vec& x) const {
  if (kind_ != DomainKind::Sphere) return x;
  Vec y = x;
  y(0) = std::fmod(y(0), kTwoPi);
  if (y(0) < 0) y(0) += kTwoPi;
  if (y(0) >= kTwoPi) y(0) = 0.0;
  y(1) = std::clamp(y(1), -1.0, 1.0);
  return y;
}

bool PhaseDomain::at_pole(const Vec& x, double tol) const {
  return kind_ == DomainKind::Sphere && std::abs(x(1)) >= 1.0 - tol;
}

double PhaseDomain::total_area() const {
  if (kind_ != DomainKind::Sphere) throw DomainError("R^2n has infinite area");
  return 4.0 * kPi;
}

Vec chart_point(const PhaseDomain& d, const Vec& base, const Vec& u) {
  if (!d.is_sphere() || std::abs(base(1)) < 1.0) return base + u;
  const double r2 = u.squaredNorm();
  if (r2 > 1.0) throw ChartError("pole chart offset outside the unit disc");
  Vec x(2);
  if (base(1) > 0) {
    x(0) = std::atan2(u(1), u(0));
    x(1) = std::sqrt(1.0 - r2);
  } else {
    x(0) = std::atan2(-u(1), u(0));
    x(1) = -std::sqrt(1.0 - r2);
  }
  if (r2 == 0.0) x(0) = base(0);
  return d.normalize(x);
}

}  // namespace hoferlab::core
