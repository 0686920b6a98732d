#include "hoferlab/core/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hoferlab::core {

Min1D golden_minimize(const std::function<double(double)>& f, double a, double b, double xtol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  double fx = f(x);
  if (fc < fx) return {c, fc};
  if (fd < fx) return {d, fd};
  return {x, fx};
}

double brent_root(const std::function<double(double)>& f, double a, double b, double xtol) {
  double fa = f(a), fb = f(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0)) throw Error("brent_root: no sign change on bracket");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < 200; ++it) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    double tol = 2 * 1e-16 * std::abs(b) + 0.5 * xtol;
    double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2 * m * s;
        q = 1 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2 * m * qq * (qq - r) - (b - a) * (r - 1));
        q = (qq - 1) * (r - 1) * (s - 1);
      }
      if (p > 0)
        q = -q;
      else
        p = -p;
      if (2 * p < std::min(3 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

MinND nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, const NelderMeadOptions& o) {
  const Eigen::Index n = x0.size();
  int evals = 0;
  auto clamp = [&](Vec x) {
    if (o.lower) x = x.cwiseMax(*o.lower);
    if (o.upper) x = x.cwiseMin(*o.upper);
    return x;
  };
  auto F = [&](const Vec& x) {
    ++evals;
    return f(x);
  };
  std::vector<Vec> s(n + 1, clamp(x0));
  std::vector<double> fs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i + 1](i) += o.initial_step;
    s[i + 1] = clamp(s[i + 1]);
    if ((s[i + 1] - s[0]).norm() == 0) {
      s[i + 1](i) -= 2 * o.initial_step;
      s[i + 1] = clamp(s[i + 1]);
    }
  }
  for (Eigen::Index i = 0; i <= n; ++i) fs[i] = F(s[i]);
  std::vector<int> idx(n + 1);
  while (evals < o.max_evaluations) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Vec> s2;
    std::vector<double> f2;
    for (int i : idx) {
      s2.push_back(s[i]);
      f2.push_back(fs[i]);
    }
    s.swap(s2);
    fs.swap(f2);
    double size = 0;
    for (Eigen::Index i = 1; i <= n; ++i) size = std::max(size, (s[i] - s[0]).cwiseAbs().maxCoeff());
    if (size <= o.xtol && std::abs(fs[n] - fs[0]) <= o.ftol * (1 + std::abs(fs[0]))) break;
    if (size <= o.xtol * 1e-3) break;
    Vec c = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) c += s[i];
    c /= static_cast<double>(n);
    Vec xr = clamp(c + (c - s[n]));
    double fr = F(xr);
    if (fr < fs[0]) {
      Vec xe = clamp(c + 2.0 * (c - s[n]));
      double fe = F(xe);
      if (fe < fr) {
        s[n] = xe;
        fs[n] = fe;
      } else {
        s[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      s[n] = xr;
      fs[n] = fr;
    } else {
      bool outside = fr < fs[n];
      Vec xc = outside ? Vec(clamp(c + 0.5 * (xr - c))) : Vec(clamp(c + 0.5 * (s[n] - c)));
      double fc = F(xc);
      if (fc < std::min(fr, fs[n])) {
        s[n] = xc;
        fs[n] = fc;
      } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          s[i] = clamp(s[0] + 0.5 * (s[i] - s[0]));
          fs[i] = F(s[i]);
        }
      }
    }
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i <= n; ++i)
    if (fs[i] < fs[best]) best = i;
  return {s[best], fs[best], evals};
}

}  // namespace hoferlab::core
