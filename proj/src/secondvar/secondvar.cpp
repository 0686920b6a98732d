#include "hoferlab/secondvar/secondvar.hpp"

#include "hoferlab/core/hamiltonian.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/core/quadrature.hpp"
#include "hoferlab/core/structures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace hoferlab::secondvar {

using linflow::HessianPath;

namespace {

// Basis values and derivatives (for T = 1, i.e. on [0, 1]) at Gauss nodes,
// shared across t' since only the derivative scale changes with T.
struct Table {
  std::vector<double> s, w;  // nodes and weights on [0, 1]
  Mat V, D;                   // nq x N
};

double basis_value(Basis b, int k, double s, const std::vector<double>& p) {
  if (b == Basis::sine) return std::sin(k * kPi * s);
  return p[k + 1] - p[k - 1];
}

double basis_derivative(Basis b, int k, double s, const std::vector<double>& p) {
  if (b == Basis::sine) return k * kPi * std::cos(k * kPi * s);
  return (2 * k + 1) * p[k] * 2.0;
}

const Table& table(Basis b, int N) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<Table>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{static_cast<int>(b), N}];
  if (slot) return *slot;
  auto tab = std::make_unique<Table>();
  const auto& g = core::gauss_legendre(2 * N + 24);
  const std::size_t nq = g.x.size();
  tab->V.resize(nq, N);
  tab->D.resize(nq, N);
  std::vector<double> p;
  for (std::size_t q = 0; q < nq; ++q) {
    double s = 0.5 * (g.x[q] + 1.0);
    tab->s.push_back(s);
    tab->w.push_back(0.5 * g.w[q]);
    core::legendre_values(N + 1, g.x[q], p);
    for (int k = 1; k <= N; ++k) {
      tab->V(q, k - 1) = basis_value(b, k, s, p);
      tab->D(q, k - 1) = basis_derivative(b, k, s, p);
    }
  }
  slot = std::move(tab);
  return *slot;
}

Mat checked_inverse(const Mat& B, double t, double* cond) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (B + B.transpose()));
  const auto& ev = es.eigenvalues();
  double mn = ev.cwiseAbs().minCoeff(), mx = ev.cwiseAbs().maxCoeff();
  if (mn <= 1e-12 * std::max(1.0, mx))
    throw Refusal("B_t is singular at t=" + std::to_string(t) +
                  ": the metric of the quadratic form needs the inverse Hessian");
  if (cond) *cond = std::max(*cond, mx / mn);
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

TangentLoop TangentLoop::from_coefficients(Basis b, Mat coeffs, double T) {
  TangentLoop g;
  g.kind_ = b == Basis::legendre ? Kind::legendre : Kind::sine;
  g.dim_ = static_cast<int>(coeffs.rows());
  g.T_ = T;
  g.coeffs_ = std::move(coeffs);
  return g;
}

TangentLoop TangentLoop::from_samples(std::vector<Vec> samples, double T) {
  if (samples.size() < 2) throw ConfigurationError("sampled loop needs at least two samples");
  TangentLoop g;
  g.kind_ = Kind::samples;
  g.dim_ = static_cast<int>(samples.front().size());
  g.T_ = T;
  g.samples_ = std::move(samples);
  return g;
}

TangentLoop TangentLoop::analytic(std::function<Vec(double)> f, std::function<Vec(double)> df,
                                  int dim, double T) {
  TangentLoop g;
  g.kind_ = Kind::analytic;
  g.dim_ = dim;
  g.T_ = T;
  g.f_ = std::move(f);
  g.df_ = std::move(df);
  return g;
}

TangentLoop TangentLoop::zero(int dim, double T) {
  return analytic([dim](double) { return Vec(Vec::Zero(dim)); },
                  [dim](double) { return Vec(Vec::Zero(dim)); }, dim, T);
}

Vec TangentLoop::value(double t) const {
  switch (kind_) {
    case Kind::analytic:
      return f_(t);
    case Kind::samples: {
      const std::size_t m = samples_.size() - 1;
      double u = std::clamp(t / T_, 0.0, 1.0) * m;
      std::size_t k = std::min<std::size_t>(m - 1, static_cast<std::size_t>(u));
      double a = u - k;
      return (1 - a) * samples_[k] + a * samples_[k + 1];
    }
    default: {
      const int N = static_cast<int>(coeffs_.cols());
      Vec phi(N);
      std::vector<double> p;
      double s = t / T_;
      Basis b = kind_ == Kind::legendre ? Basis::legendre : Basis::sine;
      if (b == Basis::legendre) core::legendre_values(N + 1, 2 * s - 1, p);
      for (int k = 1; k <= N; ++k) phi(k - 1) = basis_value(b, k, s, p);
      return coeffs_ * phi;
    }
  }
}

Vec TangentLoop::derivative(double t) const {
  switch (kind_) {
    case Kind::analytic:
      if (df_) return df_(t);
      {
        double h = core::fd_step(T_);
        return (f_(t + h) - f_(t - h)) / (2 * h);
      }
    case Kind::samples: {
      const std::size_t m = samples_.size() - 1;
      double u = std::clamp(t / T_, 0.0, 1.0) * m;
      std::size_t k = std::min<std::size_t>(m - 1, static_cast<std::size_t>(u));
      return (samples_[k + 1] - samples_[k]) * (m / T_);
    }
    default: {
      const int N = static_cast<int>(coeffs_.cols());
      Vec dphi(N);
      std::vector<double> p;
      double s = t / T_;
      Basis b = kind_ == Kind::legendre ? Basis::legendre : Basis::sine;
      if (b == Basis::legendre) core::legendre_values(N + 1, 2 * s - 1, p);
      for (int k = 1; k <= N; ++k) dphi(k - 1) = basis_derivative(b, k, s, p) / T_;
      return coeffs_ * dphi;
    }
  }
}

double TangentLoop::end_gap() const { return std::max(value(0.0).norm(), value(T_).norm()); }

TangentLoop TangentLoop::reversed() const {
  TangentLoop self = *this;
  const double T = T_;
  return analytic([self, T](double t) { return self.value(T - t); },
                  [self, T](double t) { return Vec(-self.derivative(T - t)); }, dim_, T);
}

TangentLoop TangentLoop::scaled(double c) const {
  TangentLoop g = *this;
  g.coeffs_ *= c;
  for (auto& v : g.samples_) v *= c;
  if (kind_ == Kind::analytic) {
    auto f = f_, df = df_;
    g.f_ = [f, c](double t) { return Vec(c * f(t)); };
    if (df) g.df_ = [df, c](double t) { return Vec(c * df(t)); };
  }
  return g;
}

TangentLoop project(const TangentLoop& g, Basis b, int N) {
  const Table& tab = table(b, N);
  const double T = g.period();
  const std::size_t nq = tab.s.size();
  Mat rhs = Mat::Zero(N, g.dim());
  Mat mass = Mat::Zero(N, N);
  for (std::size_t q = 0; q < nq; ++q) {
    Vec phi = tab.V.row(q).transpose();
    rhs += tab.w[q] * phi * g.value(tab.s[q] * T).transpose();
    mass += tab.w[q] * phi * phi.transpose();
  }
  Mat C = mass.ldlt().solve(rhs).transpose();
  return TangentLoop::from_coefficients(b, C, T);
}

double loop_area(const TangentLoop& g, int panels) {
  const int dim = g.dim();
  Mat J = core::standard_J(dim);
  if (g.kind() == TangentLoop::Kind::samples) {
    // exact for the polygon
    double a = 0.0;
    const int m = 4096;
    for (int k = 0; k < m; ++k) {
      Vec x0 = g.value(g.period() * k / m), x1 = g.value(g.period() * (k + 1) / m);
      a += 0.5 * (J * x0).dot(x1 - x0);
    }
    return a;
  }
  return core::gauss_integrate(
      [&](double t) { return 0.5 * (J * g.value(t)).dot(g.derivative(t)); }, 0.0, g.period(), 20,
      panels);
}

QValue q_functional(const HessianPath& B, const TangentLoop& g, int sign, int panels) {
  Mat J = core::standard_J(g.dim());
  QValue r;
  const auto& rule = core::gauss_legendre(20);
  const double T = g.period(), h = T / panels;
  for (int p = 0; p < panels; ++p)
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      double t = (p + 0.5 * (rule.x[q] + 1.0)) * h, w = 0.5 * h * rule.w[q];
      Mat Bi = checked_inverse(B(t), t, &r.max_condition);
      Vec x = g.value(t), d = g.derivative(t);
      r.kinetic += w * d.dot(Bi * d);
      r.area_term += w * sign * (J * x).dot(d);
    }
  r.value = r.kinetic + r.area_term;
  return r;
}

double second_variation_contribution(const HessianPath& B, const TangentLoop& g, int sign,
                                     int panels) {
  QValue q = q_functional(B, g, sign, panels);
  return q.kinetic + sign * 2.0 * loop_area(g, panels);
}

QMatrices assemble(const HessianPath& B, double T, int sign, int N, Basis basis) {
  if (!(T > 0.0)) throw ConfigurationError("quadratic form needs t' > 0");
  const Table& tab = table(basis, N);
  const int d = B.dim;
  const int n = d * N;
  Mat J = core::standard_J(d);
  QMatrices m;
  m.Q = Mat::Zero(n, n);
  m.M = Mat::Zero(n, n);
  double binv = 0.0;
  const std::size_t nq = tab.s.size();
  // M = T * (V^T W V) per coordinate block
  Mat VW = tab.V.transpose() * Eigen::Map<const Vec>(tab.w.data(), nq).asDiagonal();
  Mat mass = T * (VW * tab.V);
  Mat VD = VW * tab.D;  // int phi_i phi_j' ds (T-independent)
  for (int a = 0; a < d; ++a) m.M.block(a * N, a * N, N, N) = mass;
  // area term: sign * int (J g) . g' dt = sign * sum_ab J_ab c_b^T VD c_a
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (J(a, b) != 0.0) {
        Mat blk = sign * J(a, b) * VD.transpose();  // rows: a (derivative), cols: b (value)
        m.Q.block(a * N, b * N, N, N) += 0.5 * blk;
        m.Q.block(b * N, a * N, N, N) += 0.5 * blk.transpose();
      }
  // kinetic: int (B^{-1} g') . g' dt = sum_q w_q T (1/T^2) D_q^T Binv D_q
  double cond = 0.0;
  for (std::size_t q = 0; q < nq; ++q) {
    double t = tab.s[q] * T;
    Mat Bi = checked_inverse(B(t), t, &cond);
    binv = std::max(binv, Bi.norm());
    Vec Dq = tab.D.row(q).transpose();
    Mat outer = (tab.w[q] / T) * Dq * Dq.transpose();
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m.Q.block(a * N, b * N, N, N) += Bi(a, b) * outer;
  }
  m.Q = 0.5 * (m.Q + m.Q.transpose());
  m.scale = std::pow(kPi / T, 2) * binv;
  return m;
}

double q_of_coefficients(const QMatrices& m, const Vec& c) { return c.dot(m.Q * c); }

namespace {

struct Spectrum {
  Vec values;
  Mat vectors;
};

Spectrum solve(const QMatrices& m, bool vectors) {
  Eigen::LLT<Mat> llt(m.M);
  Mat Linv = llt.matrixL().solve(Mat::Identity(m.M.rows(), m.M.cols()));
  Mat S = Linv * m.Q * Linv.transpose();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  Spectrum sp;
  sp.values = es.eigenvalues();
  if (vectors) sp.vectors = Linv.transpose() * es.eigenvectors();
  return sp;
}

void count(const Vec& ev, double tol, int& index, int& nullity, int& positive) {
  index = nullity = positive = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= tol)
      ++nullity;
    else if (ev(i) < 0)
      ++index;
    else
      ++positive;
  }
}

}  // namespace

QFormReport q_form_matrix(const HessianPath& B, double tprime, int sign, const QFormOptions& opt) {
  QMatrices m = assemble(B, tprime, sign, opt.N, opt.basis);
  Spectrum sp = solve(m, opt.vectors);
  QFormReport r;
  r.N = opt.N;
  r.basis = opt.basis;
  r.tprime = tprime;
  r.scale = m.scale;
  const double tol = opt.tol_null * m.scale;
  count(sp.values, tol, r.index, r.nullity, r.positive);
  r.eigenvalues.assign(sp.values.data(), sp.values.data() + sp.values.size());
  for (int i = 0; i < std::min<int>(5, sp.values.size()); ++i) r.smallest.push_back(sp.values(i));
  if (opt.vectors)
    for (Eigen::Index i = 0; i < sp.values.size(); ++i)
      if (std::abs(sp.values(i)) <= tol) {
        Vec c = sp.vectors.col(i);
        r.coefficient_vectors.push_back(c);
        Mat C = Eigen::Map<const Mat>(c.data(), opt.N, B.dim).transpose();
        r.null_vectors.push_back(TangentLoop::from_coefficients(opt.basis, C, tprime));
      }
  if (opt.check_refinement) {
    QFormOptions o2 = opt;
    o2.N = 2 * opt.N;
    o2.check_refinement = false;
    o2.vectors = false;
    QFormReport r2 = q_form_matrix(B, tprime, sign, o2);
    r.refined = true;
    r.refined_index = r2.index;
    r.refined_nullity = r2.nullity;
    r.refinement_agrees = r2.index == r.index && r2.nullity == r.nullity;
  }
  return r;
}

NullCheck nullspace_trajectory_check(const HessianPath& B, double T, const TangentLoop& g,
                                     int samples) {
  const int d = B.dim;
  Mat J = core::standard_J(d);
  std::vector<double> ts(samples);
  double sup = 0.0;
  for (int k = 0; k < samples; ++k) {
    ts[k] = T * k / (samples - 1);
    sup = std::max(sup, g.value(ts[k]).cwiseAbs().maxCoeff());
  }
  NullCheck r;
  r.c = Vec::Zero(d);
  if (sup == 0.0) return r;
  const double s = 1.0 / sup;
  // g' + B J g = B c in least squares over the samples
  Mat A(samples * d, d);
  Vec rhs(samples * d);
  std::vector<Mat> Bs(samples);
  for (int k = 0; k < samples; ++k) {
    Bs[k] = B(ts[k]);
    A.block(k * d, 0, d, d) = Bs[k];
    rhs.segment(k * d, d) = s * (g.derivative(ts[k]) + Bs[k] * J * g.value(ts[k]));
  }
  r.c = A.colPivHouseholderQr().solve(rhs);
  for (int k = 0; k < samples; ++k) {
    Vec res = s * g.derivative(ts[k]) - Bs[k] * (-J * (s * g.value(ts[k])) + r.c);
    r.residual = std::max(r.residual, res.norm());
  }
  return r;
}

ConjugateScan conjugate_values(const HessianPath& B, const ScanOptions& opt) {
  ConjugateScan r;
  const int n = opt.scan;
  r.t.resize(n);
  r.index.resize(n);
  r.nullity.resize(n);
  std::vector<Vec> ev(n);
  core::parallel_for(n, [&](std::size_t k) {
    double t = opt.t_max * (k + 1.0) / n;
    QMatrices m = assemble(B, t, opt.sign, opt.N, opt.basis);
    ev[k] = solve(m, false).values;
    int pos;
    r.t[k] = t;
    count(ev[k], opt.tol_null * m.scale, r.index[k], r.nullity[k], pos);
  });
  auto eig = [&](double t, int j) {
    QMatrices m = assemble(B, t, opt.sign, opt.N, opt.basis);
    return solve(m, false).values(j);
  };
  auto nullity_at = [&](double t, int& index) {
    QMatrices m = assemble(B, t, opt.sign, opt.N, opt.basis);
    int nl, pos;
    count(solve(m, false).values, opt.tol_null * m.scale, index, nl, pos);
    return nl;
  };
  int prev_index = 0, prev_null = 0;
  double prev_t = 0.0;
  for (int k = 0; k < n; ++k) {
    if (r.index[k] < prev_index) r.index_monotone = false;
    if (r.nullity[k] > 0 && prev_null == 0) {
      // conjugate value on the scan grid itself
      ConjugateValue c{r.t[k], r.nullity[k], r.index[k], r.index[k] + r.nullity[k]};
      r.values.push_back(c);
    } else if (r.index[k] > prev_index && prev_null == 0 && r.nullity[k] == 0) {
      // strict crossing inside (prev_t, t_k]: bisect on the first crossing eigenvalue
      int j = prev_index;
      double lo = prev_t, hi = r.t[k];
      double ts;
      if (lo == 0.0) {
        ts = hi;  // index already positive at the first scan point
      } else {
        ts = core::brent_root([&](double t) { return eig(t, j); }, lo, hi, 1e-14);
      }
      int idx;
      int nl = nullity_at(ts, idx);
      ConjugateValue c{ts, nl, prev_index, r.index[k]};
      if (nl != r.index[k] - prev_index) r.jumps_match_nullity = false;
      r.values.push_back(c);
    }
    if (r.nullity[k] > 0 && k + 1 < n && r.index[k + 1] - r.index[k] != r.nullity[k])
      r.jumps_match_nullity = false;
    prev_index = r.index[k];
    prev_null = r.nullity[k];
    prev_t = r.t[k];
  }
  return r;
}

}  // namespace hoferlab::secondvar
