#include "hoferlab/core/bump.hpp"
#include "hoferlab/hofer/extrema.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hoferlab::shortening {

namespace {

const hofer::ExtremumSet& pick(const hofer::SliceExtrema& s, double sign) {
  return sign > 0 ? s.maxset : s.minset;
}

std::vector<Vec> set_points(const hofer::ExtremumSet& e) {
  std::vector<Vec> v = e.points;
  v.insert(v.end(), e.refined.begin(), e.refined.end());
  return v;
}

double distance(const core::PhaseDomain& d, const Vec& a, const Vec& b) {
  Vec diff = a - b;
  if (d.is_sphere()) diff(0) = std::remainder(diff(0), kTwoPi);
  return diff.norm();
}

std::vector<Vec> rings(const core::PhaseDomain& d, const Vec& c, const std::vector<double>& radii,
                       int angles) {
  std::vector<Vec> out{c};
  for (std::size_t q = 0; q < radii.size(); ++q)
    for (int k = 0; k < angles; ++k) {
      const double r = radii[q];
      double a = kTwoPi * (k + 0.5 * q) / angles;
      Vec x = c;
      x(0) += r * std::cos(a);
      x(1) += r * std::sin(a);
      for (Eigen::Index i = 2; i + 1 < x.size(); i += 2) {
        x(i) += 0.5 * r * std::cos(a + i);
        x(i + 1) += 0.5 * r * std::sin(a + i);
      }
      if (d.is_sphere()) x(1) = std::clamp(x(1), -1.0, 1.0);
      out.push_back(x);
    }
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

ShorteningResult shorten_no_fixed(const hofer::IsotopyPath& path, const std::vector<double>& times,
                                  double nu, double delta_bump, double eps,
                                  const NoFixedOptions& opt, double sign) {
  const char* what = sign > 0 ? "maximum" : "minimum";
  if (times.size() < 2) throw ConfigurationError("need at least two times t_0 < t_1");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] < 0.0 || times[j] > 1.0) throw ConfigurationError("times must lie in [0, 1]");
    if (j && times[j] <= times[j - 1]) throw ConfigurationError("times must increase");
  }
  if (!(delta_bump > 0.0 && nu > delta_bump)) throw ConfigurationError("need 0 < delta_bump < nu");
  if (!(eps > 0.0)) throw ConfigurationError("eps must be positive");
  const auto& d = path.domain();
  const auto& grid = path.sampling.primary();
  const core::Hamiltonian& H = path.H;

  std::vector<hofer::SliceExtrema> slices;
  for (double t : times) slices.push_back(hofer::extremum_sets(H, t, path.sampling, opt.tol_ext));
  auto fx = hofer::fixed_extrema(path, slices, times.front(), times.back());
  if (sign > 0 ? fx.has_max() : fx.has_min()) {
    const Vec& x = sign > 0 ? fx.fixed_maxima.front() : fx.fixed_minima.front();
    std::ostringstream o;
    o << "a fixed " << what << " persists at the chosen times (e.g. x = " << x.transpose() << ")";
    throw Refusal(o.str());
  }

  // one representative per cluster of the extremum set at t_0
  const auto& E0 = pick(slices[0], sign);
  std::vector<Vec> reps;
  for (const auto& cl : hofer::clusters(grid, E0.nodes)) {
    Vec rep;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : E0.refined) {
      double dmin = std::numeric_limits<double>::infinity();
      for (auto n : cl) dmin = std::min(dmin, distance(d, r, grid.node(n)));
      if (dmin <= 1.5 * grid.spacing() && dmin < best) best = dmin, rep = r;
    }
    if (rep.size() == 0) {
      double v = -std::numeric_limits<double>::infinity();
      for (auto n : cl) {
        double h = sign * H.value(times[0], grid.node(n));
        if (h > v) v = h, rep = grid.node(n);
      }
    }
    for (auto n : cl)
      if (distance(d, rep, grid.node(n)) > delta_bump)
        throw Refusal("the " + std::string(what) + " set at t_0 is wider than the bump core (delta_bump=" +
                      fmt(delta_bump) + ")");
    reps.push_back(rep);
  }
  if (reps.empty()) throw Refusal("empty extremum set at t_0");
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t k = i + 1; k < reps.size(); ++k)
      if (distance(d, reps[i], reps[k]) <= 2 * nu)
        throw Refusal("bump supports around the t_0 extrema overlap; decrease nu");

  // covering: each representative is undone at a time whose extremum set is 2 nu away
  std::vector<int> assigned(reps.size(), -1);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = 1; j < times.size() && assigned[i] < 0; ++j) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& y : set_points(pick(slices[j], sign))) dmin = std::min(dmin, distance(d, reps[i], y));
      if (dmin > 2 * nu) assigned[i] = static_cast<int>(j);
    }
    if (assigned[i] < 0)
      throw Refusal("no t_j (j >= 1) has its " + std::string(what) + " set 2 nu away from the t_0 " + what +
                    " near (" + fmt(reps[i](0)) + ", " + fmt(reps[i](1)) + "); decrease nu");
  }

  auto window_pulse = [&](std::size_t j, double e) {
    return Pulse{times[j] - e, times[j] + e, opt.ramp_fraction * e};
  };
  std::vector<std::size_t> used{0};
  for (int a : assigned)
    if (std::find(used.begin(), used.end(), std::size_t(a)) == used.end()) used.push_back(a);
  std::sort(used.begin(), used.end());

  auto violation = [&](double e) -> std::string {
    for (std::size_t k = 0; k < used.size(); ++k) {
      Pulse P = window_pulse(used[k], e);
      if (P.a - P.r < 0.0 || P.b + P.r > 1.0) return "window around t_" + std::to_string(used[k]) + " leaves [0, 1]";
      if (k && window_pulse(used[k - 1], e).b + P.r >= P.a - P.r) return "time windows overlap";
    }
    const int m = std::max(2, opt.window_samples);
    for (std::size_t j : used) {
      for (int q = 0; q < m; ++q) {
        double t = times[j] - e + 2 * e * q / (m - 1);
        auto s = hofer::extremum_sets(H, t, path.sampling, opt.tol_ext);
        for (const auto& y : set_points(pick(s, sign))) {
          if (j == 0) {
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& r : reps) dmin = std::min(dmin, distance(d, r, y));
            if (dmin > delta_bump) return "at t=" + fmt(t) + " the " + what + " set leaves the bump core";
          } else {
            for (std::size_t i = 0; i < reps.size(); ++i)
              if (assigned[i] == int(j) && distance(d, reps[i], y) <= nu)
                return "at t=" + fmt(t) + " the " + what + " set enters a bump being undone";
          }
        }
      }
    }
    return {};
  };
  std::string why = violation(eps);
  if (!why.empty()) {
    double e = eps;
    for (int it = 0; it < 40 && !violation(e).empty(); ++it) e *= 0.5;
    if (!violation(e).empty()) e = 0.0;
    throw EpsilonRefusal("eps=" + fmt(eps) + " is too large (" + why + "); largest admissible by halving: " + fmt(e), e);
  }

  // K_j and the loop Psi_t = prod_j phi^{K_j}_{sigma_j(t)}
  ShorteningResult res;
  res.plan.kind = sign > 0 ? PlanKind::no_fixed_max : PlanKind::no_fixed_min;
  res.plan.epsilon = eps;
  res.plan.times = times;
  std::vector<core::Hamiltonian> Ks;
  std::vector<core::ScalarFn> sig, dsig;
  std::vector<double> breaks;
  Pulse P0 = window_pulse(0, eps);
  for (double b : {P0.a - P0.r, P0.a, P0.b, P0.b + P0.r}) breaks.push_back(b);
  for (std::size_t j = 1; j < times.size(); ++j) {
    core::Hamiltonian K;
    bool any = false;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      if (assigned[i] != int(j)) continue;
      auto b = core::plateau_bump(reps[i], delta_bump, nu, -sign * opt.depth);
      K = any ? K + b : b;
      any = true;
      res.plan.bumps.push_back({reps[i], delta_bump, nu, -sign * opt.depth, int(j)});
    }
    if (!any) continue;
    Pulse Pj = window_pulse(j, eps);
    for (double b : {Pj.a - Pj.r, Pj.a, Pj.b, Pj.b + Pj.r}) breaks.push_back(b);
    Ks.push_back(K);
    sig.push_back([P0, Pj](double t) { return P0.integral(t) - Pj.integral(t); });
    dsig.push_back([P0, Pj](double t) { return P0.value(t) - Pj.value(t); });
  }
  auto Psi = core::commuting_family(Ks, sig, dsig);
  core::Hamiltonian Hn = core::compose_hamiltonians(Psi->generator(), H, Psi);
  res.plan.provenance.push_back("fixed_extrema over the times: no fixed " + std::string(what));

  hofer::IsotopyPath old_path = path;
  old_path.grid = core::TimeGrid::with_breakpoints(opt.time_base, breaks);
  old_path.trajectories.clear();
  hofer::IsotopyPath new_path = old_path;
  new_path.H = Hn;
  auto Lo = hofer::hofer_length(old_path);
  auto Ln = hofer::hofer_length(new_path);
  res.original_length = Lo.length;
  res.new_length = Ln.length;
  res.margin = Lo.length - Ln.length;
  res.t = Lo.t;
  res.old_totvar = Lo.totvar;
  res.new_totvar = Ln.totvar;

  std::vector<Vec> cloud = opt.cloud;
  cloud.insert(cloud.end(), path.cloud.begin(), path.cloud.end());
  for (const auto& r : reps) {
    auto ring = rings(d, r, {0.5 * delta_bump, 0.5 * (delta_bump + nu), 0.95 * nu, 1.5 * nu}, 8);
    cloud.insert(cloud.end(), ring.begin(), ring.end());
  }
  res.endpoint_tolerance = opt.endpoint_tol;
  res.endpoint_discrepancy = endpoint_discrepancy(H, Hn, cloud, std::min(path.tol, 1e-9), breaks);
  res.path = new_path;
  res.path.cloud = cloud;

  const double r = opt.ramp_fraction * eps;
  res.metrics["depth"] = opt.depth;
  res.metrics["eps"] = eps;
  res.metrics["expected_margin"] = 2 * opt.depth * eps;
  res.metrics["expected_margin_with_ramps"] = opt.depth * (2 * eps + r);
  res.metrics["bumps"] = double(res.plan.bumps.size());
  return res;
}

}  // namespace

ShorteningResult shorten_no_fixed_max(const hofer::IsotopyPath& path, const std::vector<double>& times,
                                      double nu, double delta_bump, double eps,
                                      const NoFixedOptions& opt) {
  return shorten_no_fixed(path, times, nu, delta_bump, eps, opt, 1.0);
}

ShorteningResult shorten_no_fixed_min(const hofer::IsotopyPath& path, const std::vector<double>& times,
                                      double nu, double delta_bump, double eps,
                                      const NoFixedOptions& opt) {
  return shorten_no_fixed(path, times, nu, delta_bump, eps, opt, -1.0);
}

}  // namespace hoferlab::shortening
