#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/core/structures.hpp"
#include "hoferlab/hofer/extrema.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace hoferlab::shortening {

namespace {

double wrap01(double t) { return t - std::floor(t); }

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

// unit directions: a circle in dimension 2, a fixed pseudo-random set otherwise
std::vector<Vec> directions(int dim, int count) {
  std::vector<Vec> out;
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      Vec u(2);
      u << std::cos(kTwoPi * k / count), std::sin(kTwoPi * k / count);
      out.push_back(u);
    }
    return out;
  }
  std::mt19937 rng(7);
  std::normal_distribution<double> n;
  for (int k = 0; k < count; ++k) {
    Vec u(dim);
    for (int i = 0; i < dim; ++i) u(i) = n(rng);
    out.push_back(u.normalized());
  }
  return out;
}

std::vector<Vec> rings(const Vec& p, const std::vector<double>& radii, int angles) {
  std::vector<Vec> out{p};
  auto dirs = directions(static_cast<int>(p.size()), angles);
  for (std::size_t q = 0; q < radii.size(); ++q)
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      // stagger successive rings
      const Vec& u = dirs[(k + q) % dirs.size()];
      out.push_back(p + radii[q] * u);
    }
  return out;
}

double max_norm(const LoopFn& f, int samples = 512) {
  double m = 0.0;
  for (int k = 0; k <= samples; ++k) m = std::max(m, f(double(k) / samples).norm());
  return m;
}

}  // namespace

// ---------------------------------------------------------------- translation loop

Vec TranslationLoop::v(double t) const { return rho * (alpha(wrap01(t)) - alpha(0.0)); }
Vec TranslationLoop::v_dot(double t) const { return rho * alpha_dot(wrap01(t)); }

core::Hamiltonian TranslationLoop::family() const {
  if (!alpha || !alpha_dot) throw ConfigurationError("translation loop needs alpha and alpha'");
  if (!(delta > 0.0) || rho < 0.0) throw ConfigurationError("translation loop needs delta > 0, rho >= 0");
  Vec a0 = alpha(0.0);
  double amp = 0.0;
  for (int k = 0; k <= 256; ++k) amp = std::max(amp, (alpha(k / 256.0) - a0).norm());
  if (rho * amp > 0.4 * delta)
    throw Refusal("translation loop too large: rho max|alpha0| = " + fmt(rho * amp) + " > 0.4 delta");
  const core::Plateau chi{2.4 * delta, 2.95 * delta};
  const auto self = *this;
  const Vec pc = p;
  auto d = core::PhaseDomain::euclidean(static_cast<int>(p.size()));
  return core::Hamiltonian(
             d,
             [self, chi, pc](double t, const Vec& x) {
               Vec y = x - pc;
               return chi(y.norm()) * core::apply_J(self.v(t)).dot(y);
             },
             [self, chi, pc](double t, const Vec& x) {
               Vec y = x - pc;
               double r = y.norm();
               Vec Jv = core::apply_J(self.v(t));
               Vec g = chi(r) * Jv;
               if (r > 0) g += chi.d(r) * Jv.dot(y) / r * y;
               return g;
             })
      .with_time_derivative([self, chi, pc](double t, const Vec& x) {
        Vec y = x - pc;
        return chi(y.norm()) * core::apply_J(self.v_dot(t)).dot(y);
      })
      .with_support({pc, chi.r_out, 0.0});
}

core::TimeOneFamily TranslationLoop::isotopy(double tol) const { return core::TimeOneFamily(family(), tol); }

// ---------------------------------------------------------------- Lemma z

LemmaZReport verify_lemma_z(const TranslationLoop& loop, const LemmaZOptions& opt) {
  if (opt.n_t < 2 || opt.n_s < 1) throw ConfigurationError("lemma z grids too small");
  const auto psi = loop.isotopy(opt.tol);
  const double h = opt.h > 0 ? opt.h : 1.0 / (4.0 * opt.n_t);
  const int dim = static_cast<int>(loop.p.size());
  Vec e = Vec::Zero(dim);
  e(0) = 1.0;
  // fixed arc from the boundary of D(3 delta) to p
  const Vec start = loop.p + 3.0 * loop.delta * e;
  const Vec dbeta = loop.p - start;
  std::vector<double> z(opt.n_t), zg(opt.n_t);
  core::parallel_for(opt.n_t, [&](std::size_t k) {
    const double t = double(k) / opt.n_t;
    double acc = 0.0;
    for (int i = 0; i < opt.n_s; ++i) {
      Vec y = start + (i + 0.5) / opt.n_s * dbeta;
      Vec x = psi.inverse(t, y);
      Vec X = (psi.forward(t + h, x) - psi.forward(t - h, x)) / (2 * h);
      acc += core::omega0(X, dbeta);
    }
    z[k] = acc / opt.n_s;
    zg[k] = psi.generator_and_inverse(t, loop.p).first;
  });
  LemmaZReport r;
  for (int k = 0; k < opt.n_t; ++k) {
    r.flux += z[k] / opt.n_t;
    r.generator += zg[k] / opt.n_t;
  }
  r.area = core::gauss_integrate(
      [&](double t) {
        Vec w = loop.v(t);
        return 0.5 * core::omega0(w, loop.v_dot(t));
      },
      0.0, 1.0, 16, 32);
  const double err = std::abs(r.flux - r.area);
  r.residual = std::abs(r.area) > 1e-300 ? err / std::abs(r.area) : err;
  return r;
}

// ---------------------------------------------------------------- Lemma lambda

LemmaLambdaReport verify_lemma_lambda(const linflow::HessianPath& B, double lambda, LoopFn alpha,
                                      LoopFn alpha_dot, double rho, const LemmaLambdaOptions& opt) {
  if (B.dim != 2) throw ConfigurationError("verify_lemma_lambda is implemented in dimension 2");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigurationError("lambda must lie in (0, 1)");
  TranslationLoop loop{Vec::Zero(2), opt.delta, rho, alpha, alpha_dot};
  const auto psi = loop.isotopy(opt.tol);
  const Vec c = alpha(0.0);
  const int n = opt.n_t;
  const double dl = opt.delta;
  std::vector<double> mins(n), h0(n), ha(n), err(n);
  core::parallel_for(n, [&](std::size_t k) {
    const double t = double(k) / n;
    const Mat Bt = 0.5 * (B(t) + B(t).transpose());
    const Vec a = alpha(t), a0 = a - c, ad = alpha_dot(t);
    const double z = rho > 0 ? psi.generator_and_inverse(t, Vec::Zero(2)).first : 0.0;
    const Vec lin = rho * core::apply_J(ad);
    auto K = [&](const Vec& x) {
      Vec y = x - rho * a0;
      return z + lin.dot(x) + 0.5 * y.dot(Bt * y);
    };
    // brute-force grid on D(delta), then a local polish
    double best = std::numeric_limits<double>::infinity();
    Vec arg = Vec::Zero(2);
    const int g = std::max(3, opt.grid);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        Vec x(2);
        x << -dl + 2 * dl * i / (g - 1), -dl + 2 * dl * j / (g - 1);
        if (x.norm() > dl) continue;
        double v = K(x);
        if (v < best) best = v, arg = x;
      }
    core::NelderMeadOptions no;
    no.initial_step = 2 * dl / (g - 1);
    no.xtol = 1e-15;
    no.ftol = 0.0;
    no.max_evaluations = 4000;
    auto m = core::nelder_mead(K, arg, no);
    if (m.f < best) best = m.f, arg = m.x;
    mins[k] = best;
    h0[k] = 0.5 * a0.dot(Bt * a0);
    ha[k] = 0.5 * a.dot(Bt * a);
    // distance from the argmin set p(t) + ker B_t to p(t)
    Vec diff = arg - (rho * (1.0 - lambda) * a - rho * c);
    Eigen::SelfAdjointEigenSolver<Mat> es(Bt);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Vec proj = Vec::Zero(2);
    for (int q = 0; q < 2; ++q)
      if (std::abs(es.eigenvalues()(q)) > 1e-8 * top) {
        Vec u = es.eigenvectors().col(q);
        proj += u.dot(diff) * u;
      }
    err[k] = proj.norm();
  });
  LemmaLambdaReport r;
  double i0 = 0.0, ia = 0.0;
  for (int k = 0; k < n; ++k) {
    r.lhs += mins[k] / n;
    i0 += h0[k] / n;
    ia += ha[k] / n;
    r.minimizer_error = std::max(r.minimizer_error, err[k]);
  }
  const double f = (1.0 - lambda) * lambda * rho * rho;
  r.rhs_alpha0 = f * i0;
  r.rhs_alpha = f * ia;
  auto rel = [](double a, double b) { return std::abs(b) > 1e-300 ? std::abs(a - b) / std::abs(b) : std::abs(a - b); };
  r.residual_alpha0 = rel(r.lhs, r.rhs_alpha0);
  r.residual_alpha = rel(r.lhs, r.rhs_alpha);
  double amp = 0.0;
  for (int k = 0; k <= 256; ++k) amp = std::max(amp, (alpha(k / 256.0) - c).norm());
  r.minimizer_relative = rho * amp > 0 ? r.minimizer_error / (rho * amp) : r.minimizer_error;
  return r;
}

// ---------------------------------------------------------------- slowing down

double SlowedLoop::f(double s) const {
  const double a = tprime - eps, w = eps;
  if (s <= a || w <= 0.0) return std::min(s, tprime);
  if (s <= a + w) return a + (s - a) - (1.0 - kappa) * w * core::smoothstep_integral((s - a) / w);
  return a + w - 0.5 * (1.0 - kappa) * w + kappa * (s - a - w);
}

double SlowedLoop::df(double s) const {
  const double a = tprime - eps, w = eps;
  if (s <= a || w <= 0.0) return 1.0;
  if (s <= a + w) return 1.0 - (1.0 - kappa) * core::smoothstep((s - a) / w);
  return kappa;
}

SlowedLoop slowdown_loop(LoopFn alpha_bar, LoopFn alpha_bar_dot, double tprime, double eps) {
  if (!(tprime > 0.0 && tprime <= 1.0)) throw ConfigurationError("t' must lie in (0, 1]");
  if (!(eps > 0.0 && eps <= tprime)) throw ConfigurationError("need 0 < eps <= t'");
  SlowedLoop s;
  s.tprime = tprime;
  s.eps = eps;
  // f' = 1, a smoothstep down to kappa over a width eps, then kappa; f(1) = t'
  const double L = 1.0 - tprime + eps;
  s.kappa = (0.5 * eps) / (L - 0.5 * eps);
  s.alpha_bar = std::move(alpha_bar);
  s.alpha_bar_dot = std::move(alpha_bar_dot);
  return s;
}

// ---------------------------------------------------------------- Step 1

double annulus_margin(const core::Hamiltonian& H, const Vec& p, double r_in, double r_out,
                      const std::vector<double>& times, bool maximum, int radii, int angles) {
  const double s = maximum ? -1.0 : 1.0;
  auto dirs = directions(static_cast<int>(p.size()), angles);
  std::vector<double> m(times.size(), std::numeric_limits<double>::infinity());
  core::parallel_for(times.size(), [&](std::size_t k) {
    const double t = times[k];
    const double hp = H.value(t, p);
    for (int i = 0; i < radii; ++i) {
      double r = r_in + (r_out - r_in) * i / std::max(1, radii - 1);
      for (const auto& u : dirs) m[k] = std::min(m[k], s * (H.value(t, p + r * u) - hp));
    }
  });
  return times.empty() ? 0.0 : *std::min_element(m.begin(), m.end());
}

namespace {

// f = 1 on [delta/2, 4 delta], smoothstep on [delta/4, delta/2] and [4 delta, 5 delta]
core::Hamiltonian annulus_profile(const Vec& p, double delta) {
  auto d = core::PhaseDomain::euclidean(static_cast<int>(p.size()));
  const double a = 0.25 * delta, b = 0.5 * delta, c = 4 * delta, e = 5 * delta;
  auto g = [=](double r) { return core::smoothstep((r - a) / (b - a)) * (1.0 - core::smoothstep((r - c) / (e - c))); };
  auto dg = [=](double r) {
    return core::smoothstep_d((r - a) / (b - a)) / (b - a) * (1.0 - core::smoothstep((r - c) / (e - c))) -
           core::smoothstep((r - a) / (b - a)) * core::smoothstep_d((r - c) / (e - c)) / (e - c);
  };
  return core::Hamiltonian(
             d, [=](double, const Vec& x) { return g((x - p).norm()); },
             [=](double, const Vec& x) {
               Vec y = x - p;
               double r = y.norm();
               return r > 0 ? Vec(dg(r) / r * y) : Vec(Vec::Zero(y.size()));
             })
      .with_support({p, e, 0.0})
      .with_autonomous(true);
}

// the annulus profile restricted to a double sector around the line R k
core::Hamiltonian sector_profile(const Vec& p, double delta, const Vec& k, double half_angle) {
  auto ann = annulus_profile(p, delta);
  const Vec u = k.normalized();
  const double s0 = std::sin(half_angle), s1 = std::sin(2 * half_angle);
  auto d = ann.domain();
  return core::Hamiltonian(d, [=](double t, const Vec& x) {
           Vec y = x - p;
           double r = y.norm();
           if (r == 0.0) return 0.0;
           double c = std::abs(u.dot(y)) / r;
           double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
           return ann.value(t, x) * (1.0 - core::smoothstep((sn - s0) / (s1 - s0)));
         })
      .with_support({p, 5 * delta, 0.0})
      .with_autonomous(true);
}

struct Jet {
  double t;
  Vec kernel;
};

}  // namespace

ShorteningResult step1_annulus_positivity(const hofer::IsotopyPath& path, const Vec& p, double delta,
                                          double xi, double eps, const AnnulusOptions& opt) {
  const auto& d = path.domain();
  if (d.is_sphere()) throw ConfigurationError("annulus positivity is implemented on R^2n");
  if (!(delta > 0.0 && xi > 0.0 && 4 * xi < 1.0)) throw ConfigurationError("need delta > 0 and 0 < xi < 1/4");
  const double s = opt.maximum ? -1.0 : 1.0;
  const core::Hamiltonian H = path.H;
  const int N = std::max(8, opt.time_base);
  std::vector<double> times(N + 1);
  for (int k = 0; k <= N; ++k) times[k] = double(k) / N;

  // guards: H_t not identically zero, p critical for every t
  for (int k = 0; k <= 16; ++k) {
    double t = k / 16.0;
    auto tv = hofer::total_variation(H, t, path.sampling);
    if (tv.value() <= 1e-12) throw Refusal("H_t vanishes identically at t=" + fmt(t) + " (path not regular)");
    double g = H.gradient(t, p).norm();
    if (g > 1e-6 * std::max(1.0, tv.value() / delta))
      throw Refusal("p is not a critical point of H_t at t=" + fmt(t));
  }

  // a time where s H_t has a nondegenerate minimum at p
  double t0 = -1.0, best = 0.0;
  std::vector<Jet> jets;
  for (double t : times) {
    if (t < 2 * xi || t > 1 - 2 * xi) continue;
    Mat hs = s * hofer::chart_hessian(H, t, p);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hs + hs.transpose()));
    const auto& ev = es.eigenvalues();
    double top = ev.cwiseAbs().maxCoeff();
    if (top <= 0) continue;
    if (ev.minCoeff() > 1e-6 * top && ev.minCoeff() > best) best = ev.minCoeff(), t0 = t;
    if (p.size() == 2 && std::abs(ev(0)) <= 1e-6 * top && ev(1) > 0) jets.push_back({t, es.eigenvectors().col(0)});
  }

  ShorteningResult res;
  res.plan.kind = PlanKind::annulus;
  res.plan.p = p;
  res.plan.delta = delta;
  res.plan.xi = xi;
  res.plan.epsilon = eps;
  std::vector<double> breaks;

  // one application of beta(t) f: zero integral, min inside the window around tc
  auto stage = [&](const core::Hamiltonian& Hc, double tc, const core::Hamiltonian& f, double e_in) {
    std::vector<double> near;
    for (double t : times)
      if (std::abs(t - tc) <= 2 * xi) near.push_back(t);
    const double M = annulus_margin(Hc, p, 0.5 * delta, 4 * delta, near, opt.maximum, opt.radii, opt.angles);
    if (!(M > 0.0)) throw Refusal("H_t is not positive on the annulus near t0=" + fmt(tc) + "; decrease delta or xi");
    const double e = e_in > 0 ? e_in : 0.4 * M;
    if (e >= 0.5 * M) throw Refusal("eps=" + fmt(e) + " is not smaller than M/2=" + fmt(0.5 * M));
    Pulse W{tc - xi, tc + xi, 0.5 * xi};
    const double w = W.total();
    const double b = 0.9 * e / std::max(w, 1.0 - w);
    for (double q : {W.a - W.r, W.a, W.b, W.b + W.r}) breaks.push_back(q);
    auto sigma = [W, w, b, s](double t) { return s * b * (w * t - W.integral(t)); };
    auto beta = [W, w, b, s](double t) { return s * b * (w - W.value(t)); };
    auto Psi = core::autonomous_family(f, sigma, beta);
    res.metrics["M"] = M;
    res.metrics["eps"] = e;
    return core::compose_hamiltonians(Psi->generator(), Hc, Psi);
  };

  core::Hamiltonian Hn;
  if (t0 >= 0) {
    res.plan.provenance.push_back("nondegenerate jet at t0=" + fmt(t0));
    Hn = stage(H, t0, annulus_profile(p, delta), eps);
  } else {
    // two rank-1 jets with distinct kernels
    double bestang = 0.0;
    Jet j1{}, j2{};
    for (std::size_t i = 0; i < jets.size(); ++i)
      for (std::size_t k = i + 1; k < jets.size(); ++k) {
        if (std::abs(jets[i].t - jets[k].t) <= 5 * xi) continue;
        double ang = std::acos(std::min(1.0, std::abs(jets[i].kernel.dot(jets[k].kernel))));
        if (ang > bestang) bestang = ang, j1 = jets[i], j2 = jets[k];
      }
    if (bestang < 0.2)
      throw Refusal("H_t is degenerate at p for every sampled t and no two rank-1 jets with distinct kernels exist");
    res.plan.provenance.push_back("rank-1 jets at t=" + fmt(j1.t) + " and t=" + fmt(j2.t));
    // raise H_{t1} on a sector around its kernel, paid back near t2 where H is positive there
    const double half = std::min(0.15, 0.25 * bestang);
    auto fs = sector_profile(p, delta, j1.kernel, half);
    std::vector<double> near2;
    for (double t : times)
      if (std::abs(t - j2.t) <= 2 * xi) near2.push_back(t);
    // the sector margin of H near t2
    double msec = std::numeric_limits<double>::infinity();
    for (double t : near2)
      for (int i = 0; i < opt.radii; ++i) {
        double r = 0.5 * delta + 3.5 * delta * i / std::max(1, opt.radii - 1);
        for (double sg : {-1.0, 1.0})
          for (double da : {-2 * half, 0.0, 2 * half}) {
            Vec u = core::rotation2(da) * j1.kernel.normalized();
            msec = std::min(msec, s * (H.value(t, p + sg * r * u) - H.value(t, p)));
          }
      }
    if (!(msec > 0.0)) throw Refusal("H is not positive on the t1 kernel sector near t2");
    const double e1 = 0.4 * msec;
    Pulse P1{j1.t - 2 * xi, j1.t + 2 * xi, 0.5 * xi}, P2{j2.t - 2 * xi, j2.t + 2 * xi, 0.5 * xi};
    for (const Pulse& P : {P1, P2})
      if (P.a - P.r < 0 || P.b + P.r > 1) throw ConfigurationError("rank-1 windows leave [0, 1]; decrease xi");
    for (const Pulse& P : {P1, P2})
      for (double q : {P.a - P.r, P.a, P.b, P.b + P.r}) breaks.push_back(q);
    auto sigma = [P1, P2, e1, s](double t) { return s * e1 * (P1.integral(t) - P2.integral(t)); };
    auto beta = [P1, P2, e1, s](double t) { return s * e1 * (P1.value(t) - P2.value(t)); };
    auto Psi = core::autonomous_family(fs, sigma, beta);
    core::Hamiltonian HA = core::compose_hamiltonians(Psi->generator(), H, Psi);
    Hn = stage(HA, j1.t, annulus_profile(p, delta), eps);
  }

  // verification
  const double pos = annulus_margin(Hn, p, 0.5 * delta, 4 * delta, times, opt.maximum, opt.radii, opt.angles);
  res.metrics["positivity"] = pos;
  if (!(pos > 0.0)) throw Refusal("the deformed generator is not positive on the annulus (margin " + fmt(pos) + ")");

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
  res.metrics["length_delta"] = std::abs(res.margin);

  std::vector<Vec> cloud = opt.cloud;
  cloud.insert(cloud.end(), path.cloud.begin(), path.cloud.end());
  auto ring = rings(p, {0.3 * delta, delta, 2.5 * delta, 4.5 * delta}, 6);
  cloud.insert(cloud.end(), ring.begin(), ring.end());
  res.endpoint_tolerance = opt.endpoint_tol;
  res.endpoint_discrepancy = endpoint_discrepancy(H, Hn, cloud, 1e-9, breaks);
  res.path = new_path;
  res.path.cloud = cloud;
  return res;
}

// ---------------------------------------------------------------- scrubbing

linflow::LambdaConjugate scrubbing_witness(const hofer::IsotopyPath& path, const Vec& p, bool maximum) {
  if (p.size() != 2) throw ConfigurationError("lambda-conjugate witnesses are computed in dimension 2");
  linflow::HessianPath B = linflow::hessian_path_at(path, p);
  B.minimum = !maximum;
  auto w = linflow::lambda_conjugate(B);
  if (!w) throw Refusal("no lambda in (0, 1) closes a trajectory of the linearized flow at p: no scrubbing witness");
  return *w;
}

ShorteningResult scrubbing_motion(const hofer::IsotopyPath& path, const Vec& p, double delta,
                                  const linflow::LambdaConjugate& witness, const ScrubbingOptions& opt) {
  const auto& d = path.domain();
  if (d.is_sphere()) throw ConfigurationError("scrubbing is implemented on R^2n");
  if (!(delta > 0.0)) throw ConfigurationError("delta must be positive");
  if (!(witness.lambda > 0.0 && witness.lambda < 1.0)) throw Refusal("the witness lambda is not in (0, 1)");
  const double s = opt.maximum ? -1.0 : 1.0;
  const double lam = witness.lambda;
  const int N = std::max(8, opt.min_samples);
  std::vector<double> tk(N + 1);
  for (int k = 0; k <= N; ++k) tk[k] = double(k) / N;

  ShorteningResult res;
  res.plan.kind = PlanKind::scrubbing;
  res.plan.p = p;
  res.plan.delta = delta;
  res.plan.lambda = lam;
  res.plan.provenance.push_back("lambda-conjugate witness lambda=" + fmt(lam) + " residual=" + fmt(witness.residual));

  // Step 1 only when the annulus is not already positive
  core::Hamiltonian Hw = path.H;
  double m = annulus_margin(Hw, p, 0.5 * delta, 4 * delta, tk, opt.maximum);
  res.metrics["step1_applied"] = 0.0;
  if (!(m > 0.0)) {
    AnnulusOptions ao;
    ao.maximum = opt.maximum;
    ao.time_base = opt.time_base;
    auto r1 = step1_annulus_positivity(path, p, delta, opt.xi, opt.eps_step1, ao);
    Hw = r1.path.H;
    m = annulus_margin(Hw, p, 0.5 * delta, 4 * delta, tk, opt.maximum);
    res.metrics["step1_applied"] = 1.0;
  }
  res.metrics["annulus_margin"] = m;

  auto alpha = [w = witness](double t) { return w.alpha_at(std::clamp(t, 0.0, 1.0)); };
  auto alpha_dot = [w = witness](double t) { return w.alpha_dot_at(std::clamp(t, 0.0, 1.0)); };
  const double a_inf = max_norm(alpha), d_inf = max_norm(alpha_dot);
  const double rho_max = std::min(delta / (6 * a_inf), m / (12 * delta * d_inf));
  double rho = opt.rho;
  if (rho > 0) {
    std::vector<std::string> bad;
    if (rho * a_inf > delta / 6) bad.push_back("rho max|alpha| = " + fmt(rho * a_inf) + " > delta/6");
    if (!(4 * delta * rho * d_inf < m / 3)) bad.push_back("4 delta rho max|alpha'| = " + fmt(4 * delta * rho * d_inf) + " >= m/3");
    if (!bad.empty()) throw Refusal(ConfigurationError(bad).what());
  } else {
    rho = opt.safety * rho_max;
  }
  res.plan.rho = rho;
  res.metrics["rho"] = rho;
  res.metrics["rho_max"] = rho_max;

  // Steps 2 and 3: K_t = F_t + H_t o psi_t^{-1}
  TranslationLoop loop{p, delta, rho, alpha, alpha_dot};
  const core::TimeOneFamily psi = loop.isotopy(opt.tol);
  const core::Hamiltonian K = psi.composite_with(Hw);
  const Vec c = alpha(0.0);

  // Step 4 profile: the extremal value of K_t over D(4 delta)
  std::vector<double> eK(N + 1), eH(N + 1);
  auto polar = rings(p, {0.5 * delta, delta, 1.5 * delta, 2 * delta, 3 * delta, 4 * delta}, 16);
  core::parallel_for(N + 1, [&](std::size_t k) {
    const double t = tk[k];
    auto f = [&](const Vec& x) { return s * K.value(t, x); };
    Vec start = p + rho * (alpha(t) - c) - rho * lam * alpha(t);
    core::NelderMeadOptions no;
    no.initial_step = 0.05 * delta;
    no.xtol = 1e-13;
    no.ftol = 0.0;
    no.max_evaluations = 1500;
    auto best = core::nelder_mead(f, start, no);
    for (const auto& x : polar) {
      double v = f(x);
      if (v < best.f - 1e-12) {
        auto alt = core::nelder_mead(f, x, no);
        if (alt.f < best.f) best = alt;
      }
    }
    eK[k] = s * best.f;
    eH[k] = Hw.value(t, p);
  });
  double mean = 0.0, meanH = 0.0;
  for (int k = 0; k <= N; ++k) {
    double w = (k == 0 || k == N) ? 0.5 / N : 1.0 / N;
    mean += w * eK[k];
    meanH += w * eH[k];
  }
  // beta = mean - e(t), piecewise linear; sigma its exact integral
  std::vector<double> sig(N + 1, 0.0);
  for (int k = 0; k < N; ++k) sig[k + 1] = sig[k] + (mean - 0.5 * (eK[k] + eK[k + 1])) / N;
  auto seg = [N](double t) { return std::min(N - 1, std::max(0, static_cast<int>(std::floor(t * N)))); };
  auto beta = [=](double t) {
    int k = seg(t);
    double u = t * N - k;
    return mean - (eK[k] + (eK[k + 1] - eK[k]) * u);
  };
  auto sigma = [=](double t) {
    int k = seg(t);
    double tau = t - double(k) / N;
    return sig[k] + mean * tau - eK[k] * tau - (eK[k + 1] - eK[k]) * tau * tau * N * 0.5;
  };
  auto f = core::plateau_bump(p, 3.2 * delta, 3.8 * delta, 1.0);
  auto Psi = core::autonomous_family(f, sigma, beta);
  const core::Hamiltonian Hf = core::compose_hamiltonians(Psi->generator(), K, Psi);

  // Step 5: the other extrema must stay strictly beyond the new level
  {
    const auto& g = path.sampling.primary();
    for (int q = 0; q <= 8; ++q) {
      double t = q / 8.0;
      double other = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < g.size(); ++i) {
        Vec x = g.node(i);
        if ((x - p).norm() < 4 * delta) continue;
        other = std::min(other, s * Hw.value(t, x));
      }
      if (!(other > s * mean))
        throw Refusal("Step 5 needed at t=" + fmt(t) + ": another extremum reaches level " + fmt(s * other) +
                      "; overlapping discs are not handled");
    }
    res.diagnostics.push_back("step 5 not needed: no other extremum reaches the new level");
  }

  // lengths on a common grid and sampling
  hofer::IsotopyPath old_path = path;
  old_path.grid = core::TimeGrid::uniform(opt.time_base);
  old_path.trajectories.clear();
  old_path.sampling.grids.push_back(hofer::SampleGrid::square(4 * delta, opt.focus_points, p));
  hofer::IsotopyPath new_path = old_path;
  new_path.H = Hf;
  auto Lo = hofer::hofer_length(old_path);
  auto Ln = hofer::hofer_length(new_path);
  res.original_length = Lo.length;
  res.new_length = Ln.length;
  res.margin = Lo.length - Ln.length;
  res.t = Lo.t;
  res.old_totvar = Lo.totvar;
  res.new_totvar = Ln.totvar;

  // the opposite extremum of K equals that of H
  double maxdev = 0.0;
  for (int q = 0; q <= 4; ++q) {
    double t = q / 4.0;
    auto a = hofer::total_variation(K, t, old_path.sampling);
    auto b = hofer::total_variation(Hw, t, old_path.sampling);
    maxdev = std::max(maxdev, s > 0 ? std::abs(a.sup - b.sup) : std::abs(a.inf - b.inf));
  }
  res.metrics["opposite_extremum_deviation"] = maxdev;

  // Lemma lambda prediction
  double ia = 0.0, i0 = 0.0;
  for (int k = 0; k < N; ++k) {
    Mat B = witness.B(tk[k]);
    Vec a = alpha(tk[k]), a0 = a - c;
    ia += 0.5 * a.dot(B * a) / N;
    i0 += 0.5 * a0.dot(B * a0) / N;
  }
  const double fl = (1.0 - lam) * lam * rho * rho;
  res.metrics["integral_gain"] = s * (mean - meanH);
  res.metrics["formula_alpha"] = s * fl * ia;
  res.metrics["formula_alpha0"] = s * fl * i0;
  res.metrics["gain"] = res.margin;
  res.metrics["lambda"] = lam;

  std::vector<Vec> cloud = opt.cloud;
  cloud.insert(cloud.end(), path.cloud.begin(), path.cloud.end());
  if (cloud.empty()) cloud = rings(p, {0.5 * delta, 2 * delta, 3.5 * delta, 6 * delta}, 3);
  res.endpoint_tolerance = opt.endpoint_tol;
  res.endpoint_discrepancy = endpoint_discrepancy(path.H, Hf, cloud, 1e-9);
  res.path = new_path;
  res.path.cloud = cloud;
  return res;
}

}  // namespace hoferlab::shortening
