#include "hoferlab/core/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace hoferlab::core {

void legendre_values(int n, double x, std::vector<double>& p) {
  p.resize(n + 1);
  p[0] = 1.0;
  if (n >= 1) p[1] = x;
  for (int k = 1; k < n; ++k) p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
}

const GaussRule& gauss_legendre(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      legendre_values(n, x, p);
      dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
      double dx = p[n] / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre_values(n, x, p);
    dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order,
                       int panels) {
  const GaussRule& g = gauss_legendre(order);
  double h = (b - a) / panels, s = 0.0;
  for (int k = 0; k < panels; ++k) {
    double lo = a + k * h, mid = lo + 0.5 * h;
    for (int i = 0; i < order; ++i) s += g.w[i] * f(mid + 0.5 * h * g.x[i]);
  }
  return 0.5 * h * s;
}

std::vector<double> simpson_weights(int m, double a, double b) {
  if (m < 2 || m % 2) throw ConfigurationError("Simpson rule needs an even number of intervals");
  std::vector<double> w(m + 1);
  double h = (b - a) / m;
  for (int i = 0; i <= m; ++i) w[i] = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& v : w) v *= h / 3.0;
  return w;
}

TimeGrid TimeGrid::uniform(int intervals, double a, double b) {
  if (intervals % 2) ++intervals;
  TimeGrid g;
  g.t.resize(intervals + 1);
  for (int i = 0; i <= intervals; ++i) g.t[i] = a + (b - a) * i / intervals;
  g.t.back() = b;
  g.w = simpson_weights(intervals, a, b);
  return g;
}

TimeGrid TimeGrid::with_breakpoints(int base, std::vector<double> breaks, double a, double b,
                                    int min_per_piece) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::vector<double> bp;
  for (double x : breaks)
    if (x >= a && x <= b) bp.push_back(x);
  std::sort(bp.begin(), bp.end());
  std::vector<double> uniq;
  for (double x : bp)
    if (uniq.empty() || x - uniq.back() > 1e-12 * (b - a)) uniq.push_back(x);
  if (uniq.back() != b) uniq.back() = b;
  TimeGrid g;
  g.t.push_back(a);
  g.w.push_back(0.0);
  const double h = (b - a) / base;
  for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
    double lo = uniq[k], hi = uniq[k + 1];
    int m = std::max(min_per_piece, static_cast<int>(std::ceil((hi - lo) / h)));
    if (m % 2) ++m;
    auto w = simpson_weights(m, lo, hi);
    g.w.back() += w[0];
    for (int i = 1; i <= m; ++i) {
      g.t.push_back(i == m ? hi : lo + (hi - lo) * i / m);
      g.w.push_back(w[i]);
    }
  }
  return g;
}

std::vector<double> TimeGrid::trapezoid_weights() const {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    double h = t[i + 1] - t[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

double TimeGrid::integrate(const std::vector<double>& values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += w[i] * values[i];
  return s;
}

}  // namespace hoferlab::core
