#include "hoferlab/hofer/extrema.hpp"

#include "hoferlab/core/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <unordered_set>

namespace hoferlab::hofer {

using core::Hamiltonian;

namespace {

void add_node(ExtremumSet& e, const SampleGrid& g, std::size_t n) {
  if (std::find(e.nodes.begin(), e.nodes.end(), n) != e.nodes.end()) return;
  e.nodes.push_back(n);
  e.points.push_back(g.node(n));
}

}  // namespace

SliceExtrema extremum_sets(const Hamiltonian& H, double t, const Sampling& s, double tol_ext) {
  SliceScan sc = scan_slice(H, t, s);
  const SampleGrid& g = s.primary();
  const auto& v = sc.values.front();
  SliceExtrema out;
  out.t = t;
  out.range = sc.sup - sc.inf;
  const double slack = tol_ext * out.range;
  out.minset.t = out.maxset.t = t;
  out.minset.level = sc.inf;
  out.maxset.level = sc.sup;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (v[i] - sc.inf <= slack) add_node(out.minset, g, i);
    if (sc.sup - v[i] <= slack) add_node(out.maxset, g, i);
  }
  for (const auto& o : sc.minima)
    if (o.value - sc.inf <= slack && g.covers(o.x)) {
      out.minset.refined.push_back(o.x);
      add_node(out.minset, g, g.nearest(o.x));
    }
  for (const auto& o : sc.maxima)
    if (sc.sup - o.value <= slack && g.covers(o.x)) {
      out.maxset.refined.push_back(o.x);
      add_node(out.maxset, g, g.nearest(o.x));
    }
  return out;
}

std::vector<SliceExtrema> path_extrema(const IsotopyPath& path, double tol_ext) {
  std::vector<SliceExtrema> out(path.grid.t.size());
  core::parallel_for(out.size(), [&](std::size_t k) {
    out[k] = extremum_sets(path.H, path.grid.t[k], path.sampling, tol_ext);
  });
  return out;
}

std::vector<std::vector<std::size_t>> clusters(const SampleGrid& g,
                                               const std::vector<std::size_t>& nodes) {
  std::unordered_set<std::size_t> left(nodes.begin(), nodes.end());
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> nb;
  for (std::size_t seed : nodes) {
    if (!left.count(seed)) continue;
    std::vector<std::size_t> comp;
    std::queue<std::size_t> q;
    q.push(seed);
    left.erase(seed);
    while (!q.empty()) {
      std::size_t i = q.front();
      q.pop();
      comp.push_back(i);
      g.neighbors(i, nb);
      for (std::size_t j : nb)
        if (left.erase(j)) q.push(j);
    }
    out.push_back(std::move(comp));
  }
  return out;
}

bool is_singleton(const SampleGrid& g, const ExtremumSet& e) {
  auto cl = clusters(g, e.nodes);
  if (cl.size() != 1) return false;
  const auto& c = cl.front();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if (g.cell_distance(c[i], c[j]) > 2) return false;
  return true;
}

namespace {

// Members of some set that lie within one cell of every set.
std::vector<std::size_t> intersect_dilated(const SampleGrid& g,
                                           const std::vector<const ExtremumSet*>& sets) {
  if (sets.empty()) return {};
  std::vector<char> keep(g.size(), 1), mask(g.size()), member(g.size(), 0);
  std::vector<std::size_t> nb;
  for (const ExtremumSet* e : sets) {
    for (std::size_t n : e->nodes) member[n] = 1;
    std::fill(mask.begin(), mask.end(), 0);
    for (std::size_t n : e->nodes) {
      mask[n] = 1;
      g.neighbors(n, nb);
      for (std::size_t j : nb) mask[j] = 1;
    }
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && mask[i];
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i] && member[i]) out.push_back(i);
  return out;
}

}  // namespace

FixedExtremaReport fixed_extrema(const IsotopyPath& path, const std::vector<SliceExtrema>& slices,
                                 double a, double b) {
  const SampleGrid& g = path.sampling.primary();
  std::vector<const ExtremumSet*> mins, maxs;
  for (const auto& s : slices)
    if (s.t >= a - 1e-12 && s.t <= b + 1e-12) {
      mins.push_back(&s.minset);
      maxs.push_back(&s.maxset);
    }
  FixedExtremaReport r;
  r.a = a;
  r.b = b;
  r.min_nodes = intersect_dilated(g, mins);
  r.max_nodes = intersect_dilated(g, maxs);
  for (std::size_t n : r.min_nodes) r.fixed_minima.push_back(g.node(n));
  for (std::size_t n : r.max_nodes) r.fixed_maxima.push_back(g.node(n));
  return r;
}

FixedExtremaReport fixed_extrema(const IsotopyPath& path, double tol_ext) {
  return fixed_extrema(path, path_extrema(path, tol_ext));
}

std::vector<std::pair<double, double>> WindowSpec::windows() const {
  std::vector<std::pair<double, double>> w;
  if (!breaks.empty()) {
    std::vector<double> b = breaks;
    std::sort(b.begin(), b.end());
    if (b.front() > 0.0) b.insert(b.begin(), 0.0);
    if (b.back() < 1.0) b.push_back(1.0);
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      if (b[i + 1] > b[i]) w.emplace_back(b[i], b[i + 1]);
    return w;
  }
  if (count < 1) throw ConfigurationError("window count must be positive");
  for (int i = 0; i < count; ++i) w.emplace_back(double(i) / count, double(i + 1) / count);
  return w;
}

GeodesicReport geodesic_check(const IsotopyPath& path, const std::vector<SliceExtrema>& slices,
                              const WindowSpec& spec) {
  GeodesicReport r;
  r.pass = true;
  for (auto [a, b] : spec.windows()) {
    r.windows.push_back(fixed_extrema(path, slices, a, b));
    r.pass = r.pass && r.windows.back().pass();
  }
  return r;
}

GeodesicReport geodesic_check(const IsotopyPath& path, const WindowSpec& spec, double tol_ext) {
  return geodesic_check(path, path_extrema(path, tol_ext), spec);
}

FixedExtremaReport lcritical_check(const IsotopyPath& path, double tol_ext) {
  return fixed_extrema(path, tol_ext);
}

SmoothPointReport smooth_point_necessary_check(const IsotopyPath& path,
                                               const std::vector<SliceExtrema>& slices,
                                               double threshold) {
  const SampleGrid& g = path.sampling.primary();
  SmoothPointReport r;
  r.threshold = threshold;
  auto w = path.grid.trapezoid_weights();
  double total = 0.0, bad = 0.0;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    bool ok = is_singleton(g, slices[k].minset) && is_singleton(g, slices[k].maxset);
    r.t.push_back(slices[k].t);
    r.singleton.push_back(ok);
    total += w[k];
    if (!ok) bad += w[k];
  }
  r.exceptional_fraction = total > 0 ? bad / total : 1.0;
  r.pass = r.exceptional_fraction < threshold;
  return r;
}

SmoothPointReport smooth_point_necessary_check(const IsotopyPath& path, double tol_ext,
                                               double threshold) {
  return smooth_point_necessary_check(path, path_extrema(path, tol_ext), threshold);
}

Mat chart_hessian(const Hamiltonian& H, double t, const Vec& x, double h) {
  const auto& d = H.domain();
  const Eigen::Index n = x.size();
  std::function<double(const Vec&)> f;
  if (d.is_sphere()) {
    // tangent-plane chart through the embedded point, projected radially
    const double r = std::sqrt(std::max(0.0, 1.0 - x(1) * x(1)));
    Eigen::Vector3d p(r * std::cos(x(0)), r * std::sin(x(0)), x(1));
    Eigen::Vector3d a = std::abs(p.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    Eigen::Vector3d e1 = a.cross(p).normalized(), e2 = p.cross(e1);
    f = [&, p, e1, e2](const Vec& u) {
      Eigen::Vector3d q = (p + u(0) * e1 + u(1) * e2).normalized();
      Vec y(2);
      y << std::atan2(q.y(), q.x()), q.z();
      return H.value(t, d.normalize(y));
    };
  } else {
    f = [&](const Vec& u) { return H.value(t, x + u); };
  }
  Mat Hs(n, n);
  Vec u = Vec::Zero(n);
  const double f0 = f(u);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = h;
    Hs(i, i) = (f(e) - 2 * f0 + f(-e)) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Vec g = Vec::Zero(n);
      g(j) = h;
      Hs(i, j) = Hs(j, i) = (f(e + g) - f(e - g) - f(g - e) + f(-e - g)) / (4 * h * h);
    }
  }
  return Hs;
}

bool nondegenerate(const Hamiltonian& H, double t, const Vec& x, double scale, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(chart_hessian(H, t, x));
  const auto& ev = es.eigenvalues();
  double mn = ev.cwiseAbs().minCoeff(), mx = ev.cwiseAbs().maxCoeff();
  return mn > rel_tol * std::max(mx, scale);
}

}  // namespace hoferlab::hofer
