#include "hoferlab/hofer/path.hpp"

#include "hoferlab/core/parallel.hpp"

#include <algorithm>

namespace hoferlab::hofer {

void IsotopyPath::track() {
  trajectories.assign(cloud.size(), {});
  const auto& ts = grid.t;
  core::parallel_for(cloud.size(), [&](std::size_t i) {
    core::Trajectory tr;
    Vec x = cloud[i];
    tr.t.push_back(ts.front());
    tr.x.push_back(x);
    for (std::size_t k = 1; k < ts.size(); ++k) {
      x = core::flow_map(H, x, ts[k - 1], ts[k], tol);
      tr.t.push_back(ts[k]);
      tr.x.push_back(domain().normalize(x));
    }
    trajectories[i] = std::move(tr);
  });
}

std::vector<double> IsotopyPath::speed_profile() const {
  std::vector<double> s(grid.t.size(), 0.0);
  Vec v;
  for (const auto& tr : trajectories)
    for (std::size_t k = 0; k < tr.size(); ++k) {
      core::vector_field(H, tr.t[k], tr.x[k], v);
      s[k] = std::max(s[k], v.norm());
    }
  return s;
}

bool IsotopyPath::regular(double floor) const {
  if (trajectories.empty()) return false;
  auto s = speed_profile();
  return std::all_of(s.begin(), s.end(), [&](double v) { return v > floor; });
}

std::vector<double> IsotopyPath::weights() const {
  return quadrature == TimeQuadrature::simpson ? grid.w : grid.trapezoid_weights();
}

LengthReport hofer_length(const IsotopyPath& path) {
  LengthReport r;
  r.t = path.grid.t;
  r.totvar.assign(r.t.size(), 0.0);
  core::parallel_for(r.t.size(), [&](std::size_t k) {
    r.totvar[k] = total_variation(path.H, r.t[k], path.sampling).value();
  });
  auto w = path.weights();
  for (std::size_t k = 0; k < w.size(); ++k) r.length += w[k] * r.totvar[k];
  return r;
}

}  // namespace hoferlab::hofer
