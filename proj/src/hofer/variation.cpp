#include "hoferlab/hofer/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hoferlab::hofer {

FirstVariationReport first_variation(const IsotopyPath& path, const core::Hamiltonian& G,
                                     bool assume_continuity, double tol_ext) {
  return first_variation(path, path_extrema(path, tol_ext), G, assume_continuity);
}

FirstVariationReport first_variation(const IsotopyPath& path,
                                     const std::vector<SliceExtrema>& slices,
                                     const core::Hamiltonian& G, bool assume_continuity) {
  const SampleGrid& g = path.sampling.primary();
  double end_val = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec x = g.node(i);
    end_val = std::max({end_val, std::abs(G.value(0.0, x)), std::abs(G.value(1.0, x))});
    scale = std::max(scale, std::abs(G.value(0.5, x)));
  }
  if (end_val > 1e-9 * std::max(1.0, scale))
    throw ConfigurationError("tangent field must vanish at t = 0 and t = 1");

  FirstVariationReport r;
  r.forced = assume_continuity;
  r.certified = true;
  for (const auto& s : slices) {
    auto check = [&](const ExtremumSet& e, const char* name) {
      std::ostringstream m;
      if (!is_singleton(g, e) || e.refined.empty()) {
        m << name << " at t=" << s.t << " is not a single point (" << e.nodes.size() << " nodes)";
      } else if (!nondegenerate(path.H, s.t, e.refined.front(), s.range)) {
        m << name << " at t=" << s.t << " is degenerate";
      } else {
        return;
      }
      r.certified = false;
      if (r.diagnostics.size() < 8) r.diagnostics.push_back(m.str());
    };
    check(s.minset, "minset");
    check(s.maxset, "maxset");
  }
  if (!r.certified && !assume_continuity) {
    std::string msg = "continuity hypothesis not certified (need unique nondegenerate extrema): ";
    msg += r.diagnostics.empty() ? "" : r.diagnostics.front();
    throw Refusal(msg);
  }

  auto eval_points = [&](const ExtremumSet& e) {
    if (!e.refined.empty() && is_singleton(g, e)) return e.refined;
    std::vector<Vec> p = e.points;
    p.insert(p.end(), e.refined.begin(), e.refined.end());
    return p;
  };
  for (const auto& s : slices) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const Vec& x : eval_points(s.maxset)) hi = std::max(hi, G.time_derivative(s.t, x));
    for (const Vec& x : eval_points(s.minset)) lo = std::min(lo, G.time_derivative(s.t, x));
    r.t.push_back(s.t);
    r.integrand.push_back(hi - lo);
  }
  auto w = path.weights();
  for (std::size_t k = 0; k < w.size(); ++k) r.value += w[k] * r.integrand[k];
  return r;
}

}  // namespace hoferlab::hofer
