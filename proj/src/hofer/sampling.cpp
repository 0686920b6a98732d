#include "hoferlab/hofer/sampling.hpp"

#include "hoferlab/core/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hoferlab::hofer {

using core::Hamiltonian;

SampleGrid SampleGrid::box(Vec lo, Vec hi, std::vector<int> n) {
  if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != n.size() || n.empty())
    throw ConfigurationError("box grid: bounds and point counts disagree in dimension");
  SampleGrid g;
  g.lo_ = std::move(lo);
  g.hi_ = std::move(hi);
  g.n_ = std::move(n);
  g.size_ = 1;
  for (int k : g.n_) {
    if (k < 1) throw ConfigurationError("box grid: each axis needs at least one point");
    g.size_ *= static_cast<std::size_t>(k);
  }
  return g;
}

SampleGrid SampleGrid::square(double hw, int n, const Vec& c) {
  Vec lo = c.array() - hw, hi = c.array() + hw;
  return box(lo, hi, std::vector<int>(c.size(), n));
}

SampleGrid SampleGrid::sphere(int n_theta, int n_z) {
  if (n_theta < 3 || n_z < 3) throw ConfigurationError("sphere grid needs n_theta >= 3 and n_z >= 3");
  SampleGrid g;
  g.sphere_ = true;
  g.n_theta_ = n_theta;
  g.n_z_ = n_z;
  g.lo_ = Vec(2);
  g.hi_ = Vec(2);
  g.lo_ << 0.0, -1.0;
  g.hi_ << kTwoPi, 1.0;
  g.size_ = 2 + static_cast<std::size_t>(n_theta) * (n_z - 2);
  return g;
}

std::vector<int> SampleGrid::index(std::size_t i) const {
  if (sphere_) {
    if (i == 0) return {0, 0};
    if (i == size_ - 1) return {n_z_ - 1, 0};
    std::size_t k = i - 1;
    return {1 + static_cast<int>(k / n_theta_), static_cast<int>(k % n_theta_)};
  }
  std::vector<int> idx(n_.size());
  for (std::size_t a = 0; a < n_.size(); ++a) {
    idx[a] = static_cast<int>(i % n_[a]);
    i /= n_[a];
  }
  return idx;
}

Vec SampleGrid::node(std::size_t i) const {
  auto idx = index(i);
  if (sphere_) {
    Vec x(2);
    x(0) = kTwoPi * idx[1] / n_theta_;
    x(1) = idx[0] == 0 ? -1.0 : (idx[0] == n_z_ - 1 ? 1.0 : -1.0 + 2.0 * idx[0] / (n_z_ - 1));
    return x;
  }
  Vec x(n_.size());
  for (std::size_t a = 0; a < n_.size(); ++a)
    x(a) = n_[a] == 1 ? 0.5 * (lo_(a) + hi_(a)) : lo_(a) + (hi_(a) - lo_(a)) * idx[a] / (n_[a] - 1);
  return x;
}

void SampleGrid::neighbors(std::size_t i, std::vector<std::size_t>& out) const {
  out.clear();
  if (sphere_) {
    auto rc = index(i);
    auto at = [&](int row, int col) -> std::size_t {
      if (row == 0) return 0;
      if (row == n_z_ - 1) return size_ - 1;
      col = ((col % n_theta_) + n_theta_) % n_theta_;
      return 1 + static_cast<std::size_t>(row - 1) * n_theta_ + col;
    };
    if (rc[0] == 0 || rc[0] == n_z_ - 1) {
      int row = rc[0] == 0 ? 1 : n_z_ - 2;
      for (int c = 0; c < n_theta_; ++c) out.push_back(at(row, c));
      return;
    }
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (!dr && !dc) continue;
        std::size_t j = at(rc[0] + dr, rc[1] + dc);
        if (j != i && std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
      }
    return;
  }
  auto idx = index(i);
  const std::size_t d = n_.size();
  std::vector<int> off(d, -1);
  for (;;) {
    bool zero = true, valid = true;
    std::size_t j = 0, stride = 1;
    for (std::size_t a = 0; a < d; ++a) {
      int v = idx[a] + off[a];
      if (off[a]) zero = false;
      if (v < 0 || v >= n_[a]) valid = false;
      j += static_cast<std::size_t>(v) * stride;
      stride *= n_[a];
    }
    if (valid && !zero) out.push_back(j);
    std::size_t a = 0;
    while (a < d && off[a] == 1) off[a++] = -1;
    if (a == d) break;
    ++off[a];
  }
}

int SampleGrid::cell_distance(std::size_t i, std::size_t j) const {
  auto a = index(i), b = index(j);
  if (sphere_) {
    int dr = std::abs(a[0] - b[0]);
    bool pole = a[0] == 0 || a[0] == n_z_ - 1 || b[0] == 0 || b[0] == n_z_ - 1;
    if (pole) return dr;
    int dc = std::abs(a[1] - b[1]);
    dc = std::min(dc, n_theta_ - dc);
    return std::max(dr, dc);
  }
  int m = 0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

std::size_t SampleGrid::nearest(const Vec& x) const {
  if (sphere_) {
    double fr = (x(1) + 1.0) / 2.0 * (n_z_ - 1);
    int row = std::clamp(static_cast<int>(std::lround(fr)), 0, n_z_ - 1);
    if (row == 0) return 0;
    if (row == n_z_ - 1) return size_ - 1;
    double th = std::fmod(x(0), kTwoPi);
    if (th < 0) th += kTwoPi;
    int col = static_cast<int>(std::lround(th / kTwoPi * n_theta_)) % n_theta_;
    return 1 + static_cast<std::size_t>(row - 1) * n_theta_ + col;
  }
  std::size_t j = 0, stride = 1;
  for (std::size_t a = 0; a < n_.size(); ++a) {
    int k = 0;
    if (n_[a] > 1) {
      double f = (x(a) - lo_(a)) / (hi_(a) - lo_(a)) * (n_[a] - 1);
      k = std::clamp(static_cast<int>(std::lround(f)), 0, n_[a] - 1);
    }
    j += static_cast<std::size_t>(k) * stride;
    stride *= n_[a];
  }
  return j;
}

bool SampleGrid::covers(const Vec& x) const {
  if (sphere_) return true;
  for (Eigen::Index a = 0; a < x.size(); ++a)
    if (x(a) < lo_(a) - 1e-12 || x(a) > hi_(a) + 1e-12) return false;
  return true;
}

double SampleGrid::spacing() const {
  if (sphere_) return std::max(kTwoPi / n_theta_, 2.0 / (n_z_ - 1));
  double h = 0;
  for (std::size_t a = 0; a < n_.size(); ++a)
    if (n_[a] > 1) h = std::max(h, (hi_(a) - lo_(a)) / (n_[a] - 1));
  return h;
}

SampleGrid SampleGrid::refined(int f) const {
  if (sphere_) return sphere(n_theta_ * f, (n_z_ - 1) * f + 1);
  std::vector<int> n = n_;
  for (int& k : n) k = k > 1 ? (k - 1) * f + 1 : 1;
  return box(lo_, hi_, n);
}

Sampling Sampling::refined(int factor) const {
  Sampling s = *this;
  for (auto& g : s.grids) g = g.refined(factor);
  return s;
}

const SampleGrid& Sampling::primary() const {
  if (grids.empty()) throw ConfigurationError("sampling has no grid");
  return grids.front();
}

namespace {

struct NodeRef {
  std::size_t grid, node;
  double value;
};

Optimum refine_from(const Hamiltonian& H, double t, const SampleGrid& g, const Vec& x0, double sign,
                    const Sampling& s) {
  core::NelderMeadOptions o;
  o.initial_step = 0.5 * g.spacing();
  o.xtol = s.refine_xtol;
  o.ftol = 1e-16;
  o.max_evaluations = s.refine_evaluations;
  o.lower = g.lower();
  o.upper = g.upper();
  if (g.is_sphere()) {
    (*o.lower)(0) = -1e9;
    (*o.upper)(0) = 1e9;
  }
  auto r = core::nelder_mead([&](const Vec& x) { return sign * H.value(t, x); }, x0, o);
  Vec x = H.domain().normalize(r.x);
  return {x, sign * r.f};
}

}  // namespace

SliceScan scan_slice(const Hamiltonian& H, double t, const Sampling& s) {
  if (s.grids.empty()) throw ConfigurationError("total variation over an empty grid");
  SliceScan out;
  out.t = t;
  out.values.resize(s.grids.size());
  std::vector<NodeRef> locmax, locmin;
  std::vector<std::size_t> nb;
  bool first = true;
  for (std::size_t gi = 0; gi < s.grids.size(); ++gi) {
    const auto& g = s.grids[gi];
    if (g.size() == 0) throw ConfigurationError("total variation over an empty grid");
    auto& v = out.values[gi];
    v.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = H.value(t, g.node(i));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (first || v[i] > out.sup) {
        out.sup = v[i];
        out.argsup = g.node(i);
      }
      if (first || v[i] < out.inf) {
        out.inf = v[i];
        out.arginf = g.node(i);
      }
      first = false;
      g.neighbors(i, nb);
      bool is_max = true, is_min = true;
      for (std::size_t j : nb) {
        if (v[j] > v[i]) is_max = false;
        if (v[j] < v[i]) is_min = false;
      }
      if (is_max) locmax.push_back({gi, i, v[i]});
      if (is_min) locmin.push_back({gi, i, v[i]});
    }
  }
  if (!s.refine) return out;
  auto pick = [&](std::vector<NodeRef>& c, bool want_max) {
    std::sort(c.begin(), c.end(), [&](const NodeRef& a, const NodeRef& b) {
      return want_max ? a.value > b.value : a.value < b.value;
    });
    // skip near-duplicates (adjacent plateau nodes)
    std::vector<NodeRef> chosen;
    for (const auto& r : c) {
      if (static_cast<int>(chosen.size()) >= s.starts) break;
      bool dup = false;
      for (const auto& q : chosen)
        if (q.grid == r.grid && s.grids[q.grid].cell_distance(q.node, r.node) <= 1) dup = true;
      if (!dup) chosen.push_back(r);
    }
    return chosen;
  };
  for (const auto& r : pick(locmax, true)) {
    const auto& g = s.grids[r.grid];
    Optimum o = refine_from(H, t, g, g.node(r.node), -1.0, s);
    out.maxima.push_back(o);
    if (o.value > out.sup) {
      out.sup = o.value;
      out.argsup = o.x;
    }
  }
  for (const auto& r : pick(locmin, false)) {
    const auto& g = s.grids[r.grid];
    Optimum o = refine_from(H, t, g, g.node(r.node), 1.0, s);
    out.minima.push_back(o);
    if (o.value < out.inf) {
      out.inf = o.value;
      out.arginf = o.x;
    }
  }
  return out;
}

TotVarResult total_variation(const Hamiltonian& H, double t, const Sampling& s) {
  SliceScan sc = scan_slice(H, t, s);
  return {sc.sup, sc.inf, sc.argsup, sc.arginf};
}

}  // namespace hoferlab::hofer
