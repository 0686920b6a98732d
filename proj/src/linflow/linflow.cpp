#include "hoferlab/linflow/linflow.hpp"

#include "hoferlab/core/ode.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/core/structures.hpp"
#include "hoferlab/hofer/extrema.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace hoferlab::linflow {

HessianPath HessianPath::constant(const Mat& B0, bool minimum) {
  return {[B0](double) { return B0; }, static_cast<int>(B0.rows()), minimum};
}

HessianPath HessianPath::scalar(double c, int dim) {
  return constant(c * Mat::Identity(dim, dim), c >= 0);
}

HessianPath HessianPath::scaled(double lambda) const {
  auto f = B;
  return {[f, lambda](double t) { return Mat(lambda * f(t)); }, dim, minimum};
}

double HessianPath::asymmetry(int samples) const {
  double m = 0.0;
  for (int k = 0; k <= samples; ++k) {
    Mat b = B(double(k) / samples);
    m = std::max(m, (b - b.transpose()).norm() / std::max(1.0, b.norm()));
  }
  return m;
}

HessianPath random_positive_path(std::mt19937& rng, double scale, double floor) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::array<double, 9> c;
  for (double& v : c) v = U(rng);
  auto prof = [c, scale, floor](double t, int o) {
    double s = 1.0 + 0.6 * c[o] * std::sin(2 * kPi * t + 3 * c[o + 1]) + 0.3 * c[o + 2] * std::cos(4 * kPi * t);
    return std::max(floor, scale * s);
  };
  return {[prof, c](double t) {
            double th = 2.0 * c[6] + 1.5 * c[7] * t + c[8] * std::sin(2 * kPi * t);
            Mat R = core::rotation2(th), D = Mat::Zero(2, 2);
            D(0, 0) = prof(t, 0);
            D(1, 1) = prof(t, 3);
            return Mat(R * D * R.transpose());
          },
          2, true};
}

double symplectic_defect(const Mat& L) {
  Mat J = core::standard_J(static_cast<int>(L.rows()));
  return (L.transpose() * J * L - J).norm();
}

namespace {

Vec flatten(const Mat& L) { return Eigen::Map<const Vec>(L.data(), L.size()); }

Mat unflatten(const Vec& v, Eigen::Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

}  // namespace

Mat propagate(const HessianPath& B, const Mat& L0, double t0, double t1,
              const FundamentalOptions& opt) {
  if (t1 == t0) return L0;
  const Eigen::Index n = L0.rows();
  const Mat J = core::standard_J(static_cast<int>(n));
  if (opt.method == Integrator::implicit_midpoint) {
    int steps = std::max(1, static_cast<int>(std::ceil(opt.midpoint_steps * std::abs(t1 - t0))));
    double h = (t1 - t0) / steps;
    Mat L = L0, I = Mat::Identity(n, n);
    for (int k = 0; k < steps; ++k) {
      Mat A = -J * B(t0 + (k + 0.5) * h);
      L = (I - 0.5 * h * A).partialPivLu().solve((I + 0.5 * h * A) * L);
    }
    return L;
  }
  core::OdeOptions o;
  o.rtol = o.atol = opt.tol;
  auto rhs = [&](double t, const Vec& x, Vec& dx) {
    Mat L = unflatten(x, n);
    dx = flatten(-J * B(t) * L);
  };
  return unflatten(core::integrate(rhs, t0, t1, flatten(L0), o), n);
}

Monodromy fundamental_solution(const HessianPath& B, double tprime, const FundamentalOptions& opt) {
  if (!(tprime > 0.0) || tprime > 1.0 + 1e-12)
    throw ConfigurationError("fundamental solution needs t' in (0, 1]");
  Monodromy m;
  Mat L = Mat::Identity(B.dim, B.dim);
  m.t.push_back(0.0);
  m.L.push_back(L);
  int k = std::max(1, opt.samples);
  for (int i = 1; i <= k; ++i) {
    double t = tprime * i / k;
    L = propagate(B, L, m.t.back(), t, opt);
    m.t.push_back(t);
    m.L.push_back(L);
    m.symplectic_defect = std::max(m.symplectic_defect, symplectic_defect(L));
  }
  return m;
}

Mat stationary_subspace(const std::vector<Mat>& Ls, double tol) {
  if (Ls.empty()) return Mat();
  const Eigen::Index n = Ls.front().rows();
  Mat stack(n * Ls.size(), n);
  for (std::size_t k = 0; k < Ls.size(); ++k) stack.block(k * n, 0, n, n) = Ls[k] - Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(stack, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * std::sqrt(double(Ls.size()))) ++r;
  return svd.matrixV().rightCols(n - r);
}

namespace {

// Orthonormal complement of the columns of S in R^n.
Mat complement(const Mat& S, Eigen::Index n) {
  if (S.cols() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(n - S.cols());
}

struct Sigma {
  double min = 0.0;
  Vec x;
  int mult = 0;
  double det = 0.0;
};

Sigma analyze(const Mat& L, const Mat& Q, double tol_mult) {
  Sigma s;
  const Eigen::Index n = L.rows();
  if (Q.cols() == 0) {
    s.min = std::numeric_limits<double>::infinity();
    return s;
  }
  Mat M = (L - Mat::Identity(n, n)) * Q;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  s.min = sv(sv.size() - 1);
  s.x = (Q * svd.matrixV().col(sv.size() - 1)).normalized();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol_mult) ++s.mult;
  s.det = (Q.transpose() * M).determinant();
  return s;
}

// Generic scan over a parameter s in (a, b]: M(s) = L(s) - I restricted to the
// complement Q. Candidates are grid local minima of sigma_min (golden refined)
// and sign changes of det (Brent refined).
std::vector<Closure> scan_parameter(const std::function<Mat(double)>& L_at,
                                    const std::vector<double>& s, const std::vector<Mat>& Ls,
                                    const Mat& Q, const ClosureOptions& opt) {
  std::vector<Closure> out;
  if (Q.cols() == 0) return out;
  const std::size_t N = s.size();
  std::vector<Sigma> sg(N);
  for (std::size_t k = 0; k < N; ++k) sg[k] = analyze(Ls[k], Q, opt.tol_mult);
  std::vector<double> cand;
  const double span = s.back() - s.front();
  auto sig = [&](double u) { return analyze(L_at(u), Q, opt.tol_mult).min; };
  for (std::size_t k = 1; k < N; ++k) {
    bool left = sg[k].min <= sg[k - 1].min;
    bool right = k + 1 == N || sg[k].min <= sg[k + 1].min;
    if (left && right) {
      double hi = k + 1 == N ? s[k] : s[k + 1];
      auto m = core::golden_minimize(sig, s[k - 1], hi, 1e-13 * std::max(1.0, span));
      // golden section misses an endpoint minimum at the top of the range
      if (k + 1 == N && sig(s[k]) <= m.f) m = {s[k], sig(s[k])};
      cand.push_back(m.x);
    }
    if (sg[k - 1].det * sg[k].det < 0.0) {
      auto d = [&](double u) { return analyze(L_at(u), Q, opt.tol_mult).det; };
      cand.push_back(core::brent_root(d, s[k - 1], s[k], 1e-15 * std::max(1.0, span)));
    }
  }
  std::sort(cand.begin(), cand.end());
  for (double u : cand) {
    if (!out.empty() && std::abs(u - out.back().t) < 1e-7 * std::max(1.0, span)) continue;
    Mat L = L_at(u);
    Sigma a = analyze(L, Q, opt.tol_mult);
    if (a.min > opt.tol_eig) continue;
    Closure c;
    c.t = u;
    c.x = a.x;
    c.residual = (L * a.x - a.x).norm();
    c.multiplicity = std::max(1, a.mult);
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<Closure> find_closures(const HessianPath& B, double t_max, const ClosureOptions& opt) {
  if (t_max > 1.0 + 1e-12 || t_max <= 0.0) throw ConfigurationError("closure scan needs t_max in (0, 1]");
  FundamentalOptions fo;
  fo.tol = opt.tol;
  fo.samples = opt.scan;
  Monodromy m = fundamental_solution(B, t_max, fo);
  Mat S = stationary_subspace(m.L);
  Mat Q = complement(S, B.dim);
  auto L_at = [&](double u) {
    std::size_t k = std::min<std::size_t>(m.t.size() - 1,
                                          static_cast<std::size_t>(std::lround(u / t_max * opt.scan)));
    return propagate(B, m.L[k], m.t[k], u, fo);
  };
  std::vector<double> s(m.t.begin() + 1, m.t.end());
  std::vector<Mat> Ls(m.L.begin() + 1, m.L.end());
  return scan_parameter(L_at, s, Ls, Q, opt);
}

std::optional<Closure> closed_trajectory_in_time(const HessianPath& B, double t_max,
                                                 const ClosureOptions& opt) {
  for (const auto& c : find_closures(B, t_max, opt))
    if (c.t < t_max * (1.0 - 1e-9)) return c;
  return std::nullopt;
}

Vec LambdaConjugate::alpha_at(double u) const {
  const std::size_t n = t.size();
  double h = t[1] - t[0];
  std::size_t k = std::min<std::size_t>(n - 2, static_cast<std::size_t>(std::max(0.0, u / h)));
  double s = (u - t[k]) / h;
  Mat J = core::standard_J(static_cast<int>(x.size()));
  Vec d0 = -J * (lambda * B(t[k])) * alpha[k], d1 = -J * (lambda * B(t[k + 1])) * alpha[k + 1];
  double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
  double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
  return h00 * alpha[k] + h10 * h * d0 + h01 * alpha[k + 1] + h11 * h * d1;
}

Vec LambdaConjugate::alpha_dot_at(double u) const {
  Mat J = core::standard_J(static_cast<int>(x.size()));
  return -J * (lambda * B(u)) * alpha_at(u);
}

std::optional<LambdaConjugate> lambda_conjugate(const HessianPath& B, const ClosureOptions& opt,
                                                int samples) {
  if (B.dim != 2) throw ConfigurationError("lambda_conjugate is defined for dimension 2");
  FundamentalOptions fo;
  fo.tol = opt.tol;
  fo.samples = 64;
  Mat S = stationary_subspace(fundamental_solution(B, 1.0, fo).L);
  Mat Q = complement(S, B.dim);
  fo.samples = 0;
  std::vector<double> s(opt.scan);
  std::vector<Mat> Ls(opt.scan);
  for (int k = 0; k < opt.scan; ++k) s[k] = (k + 1.0) / (opt.scan + 1.0);
  core::parallel_for(s.size(), [&](std::size_t k) {
    Ls[k] = fundamental_solution(B.scaled(s[k]), 1.0, fo).final();
  });
  auto L_at = [&](double u) { return fundamental_solution(B.scaled(u), 1.0, fo).final(); };
  auto cl = scan_parameter(L_at, s, Ls, Q, opt);
  if (cl.empty()) return std::nullopt;
  LambdaConjugate r;
  r.lambda = cl.front().t;
  r.x = cl.front().x;
  r.residual = cl.front().residual;
  r.B = B;
  HessianPath lb = B.scaled(r.lambda);
  Mat L = Mat::Identity(2, 2);
  for (int k = 0; k <= samples; ++k) {
    double t = double(k) / samples;
    if (k) L = propagate(lb, L, r.t.back(), t, fo);
    r.t.push_back(t);
    r.alpha.push_back(L * r.x);
  }
  return r;
}

double rotation_number_2d(const HessianPath& B, double tprime, int rays, int steps) {
  if (B.dim != 2) throw ConfigurationError("rotation number needs dimension 2");
  for (int k = 0; k <= 64; ++k) {
    Mat b = B(tprime * k / 64);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (b + b.transpose()));
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, b.norm()))
      throw Refusal("rotation number needs B_t positive semidefinite (indefinite at t=" +
                    std::to_string(tprime * k / 64) + ")");
  }
  FundamentalOptions fo;
  fo.samples = steps;
  Monodromy m = fundamental_solution(B, tprime, fo);
  double best = 0.0;
  for (int r = 0; r < rays; ++r) {
    double a = kPi * r / rays;
    Vec v(2);
    v << std::cos(a), std::sin(a);
    double total = 0.0, prev = a;
    for (std::size_t k = 1; k < m.L.size(); ++k) {
      Vec w = m.L[k] * v;
      double ang = std::atan2(w(1), w(0));
      double d = ang - prev;
      while (d > kPi) d -= 2 * kPi;
      while (d < -kPi) d += 2 * kPi;
      total += d;
      prev = ang;
    }
    best = std::max(best, -total);  // clockwise positive
  }
  return best;
}

HessianPath hessian_path_at(const hofer::IsotopyPath& path, const Vec& point, double h) {
  core::Hamiltonian H = path.H;
  const auto& d = H.domain();
  Vec base = point;
  if (d.is_sphere() && std::abs(base(1)) > 1.0 - 1e-7) base(1) = base(1) > 0 ? 1.0 : -1.0;
  const int n = static_cast<int>(point.size());
  // symplectic chart: translation in R^2n, (theta, z) away from the poles,
  // the area-preserving pole charts at the poles
  auto f = [H, d, base](double t, const Vec& u) { return H.value(t, core::chart_point(d, base, u)); };
  return {[f, n, h](double t) {
            Mat Hs(n, n);
            Vec z = Vec::Zero(n);
            const double f0 = f(t, z);
            for (int i = 0; i < n; ++i) {
              Vec e = Vec::Zero(n);
              e(i) = h;
              Hs(i, i) = (f(t, e) - 2 * f0 + f(t, -e)) / (h * h);
              for (int j = i + 1; j < n; ++j) {
                Vec g = Vec::Zero(n);
                g(j) = h;
                Hs(i, j) = Hs(j, i) = (f(t, e + g) - f(t, e - g) - f(t, g - e) + f(t, -e - g)) / (4 * h * h);
              }
            }
            return Hs;
          },
          n, true};
}

StabilityReport stability_necessary_check(const hofer::IsotopyPath& path, double tol_ext,
                                          const ClosureOptions& opt) {
  auto slices = hofer::path_extrema(path, tol_ext);
  auto fx = hofer::fixed_extrema(path, slices);
  const auto& g = path.sampling.primary();
  StabilityReport r;
  auto handle = [&](const std::vector<std::size_t>& nodes, bool is_min) {
    for (const auto& cl : hofer::clusters(g, nodes)) {
      int extent = 0;
      for (std::size_t a : cl)
        for (std::size_t b : cl) extent = std::max(extent, g.cell_distance(a, b));
      if (extent > 2)
        throw Refusal(std::string("fixed ") + (is_min ? "minima" : "maxima") +
                      " are not isolated (cluster of " + std::to_string(cl.size()) + " grid cells)");
      // refine to the optimum at t = 0 near the cluster
      Vec x0 = g.node(cl.front());
      Vec best = x0;
      double bd = std::numeric_limits<double>::infinity();
      const auto& set = is_min ? slices.front().minset : slices.front().maxset;
      for (const Vec& p : set.refined) {
        double dd = (p - x0).norm();
        if (dd < bd && g.cell_distance(g.nearest(p), cl.front()) <= 2) {
          bd = dd;
          best = p;
        }
      }
      ExtremumEvidence e;
      e.is_minimum = is_min;
      e.point = best;
      HessianPath B = hessian_path_at(path, best);
      B.minimum = is_min;
      e.closure = closed_trajectory_in_time(B, 1.0, opt);
      r.evidence.push_back(e);
    }
  };
  handle(fx.min_nodes, true);
  handle(fx.max_nodes, false);
  bool min_ok = false, max_ok = false;
  for (const auto& e : r.evidence) {
    if (e.closure) continue;
    (e.is_minimum ? min_ok : max_ok) = true;
  }
  r.pass = min_ok && max_ok;
  return r;
}

}  // namespace hoferlab::linflow
