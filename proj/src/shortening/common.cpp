#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <algorithm>
#include <cmath>

namespace hoferlab::shortening {

double Pulse::value(double t) const {
  if (t <= a - r || t >= b + r) return 0.0;
  if (t < a) return r > 0 ? core::smoothstep((t - (a - r)) / r) : 1.0;
  if (t <= b) return 1.0;
  return r > 0 ? 1.0 - core::smoothstep((t - b) / r) : 1.0;
}

double Pulse::integral(double t) const {
  if (t <= a - r) return 0.0;
  if (t <= a) return r > 0 ? r * core::smoothstep_integral((t - (a - r)) / r) : 0.0;
  if (t <= b) return 0.5 * r + (t - a);
  if (t <= b + r) {
    double u = (t - b) / r;
    return 0.5 * r + (b - a) + r * (u - core::smoothstep_integral(u));
  }
  return total();
}

const char* to_string(PlanKind k) {
  switch (k) {
    case PlanKind::no_fixed_max: return "NoFixedMax";
    case PlanKind::no_fixed_min: return "NoFixedMin";
    case PlanKind::sikorav: return "Sikorav";
    case PlanKind::scrubbing: return "Scrubbing";
    case PlanKind::annulus: return "AnnulusPositivity";
  }
  return "?";
}

double endpoint_discrepancy(const core::Hamiltonian& old_H, const core::Hamiltonian& new_H,
                            const std::vector<Vec>& cloud, double tol,
                            const std::vector<double>& breaks) {
  std::vector<double> knots{0.0};
  for (double b : breaks)
    if (b > 0.0 && b < 1.0) knots.push_back(b);
  knots.push_back(1.0);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const auto& d = old_H.domain();
  std::vector<double> err(cloud.size(), 0.0);
  core::parallel_for(cloud.size(), [&](std::size_t i) {
    Vec a = cloud[i], b = cloud[i];
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      a = core::flow_map(old_H, a, knots[k], knots[k + 1], tol);
      b = core::flow_map(new_H, b, knots[k], knots[k + 1], tol);
    }
    Vec diff = b - a;
    if (d.is_sphere()) diff(0) = std::remainder(diff(0), kTwoPi);
    err[i] = diff.norm();
  });
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

}  // namespace hoferlab::shortening
