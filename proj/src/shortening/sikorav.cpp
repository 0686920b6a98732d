#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/parallel.hpp"
#include "hoferlab/core/structures.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace hoferlab::shortening {

Translation make_translation(const Vec& v, const Vec& center, double reach) {
  if (v.size() != center.size() || v.size() % 2) throw ConfigurationError("translation needs matching even dimensions");
  if (!(reach > 0.0)) throw ConfigurationError("translation reach must be positive");
  Translation tr;
  tr.v = v;
  tr.center = center;
  const Vec m = center + 0.5 * v;
  const double r_in = reach + 0.5 * v.norm();
  tr.radius = r_in;
  const core::Plateau chi{r_in, 1.25 * r_in};
  const Vec Jv = core::apply_J(v);
  auto d = core::PhaseDomain::euclidean(static_cast<int>(v.size()));
  tr.T = core::Hamiltonian(
             d, [=](double, const Vec& x) { return chi((x - m).norm()) * Jv.dot(x - m); },
             [=](double, const Vec& x) {
               Vec y = x - m;
               double r = y.norm();
               Vec g = chi(r) * Jv;
               if (r > 0) g += chi.d(r) * Jv.dot(y) / r * y;
               return g;
             })
             .with_support({m, chi.r_out, 0.0})
             .with_autonomous(true);
  // The linear part ranges over +-|v| r on the sphere of radius r.
  auto neg = [&](double r) { return -chi(r) * v.norm() * r; };
  tr.norm = -2.0 * core::golden_minimize(neg, r_in, chi.r_out, 1e-12).f;
  return tr;
}

namespace {

std::string where(double t, const Vec& x) {
  std::ostringstream o;
  o << "t=" << t << ", x=(" << x.transpose() << ")";
  return o.str();
}

}  // namespace

ShorteningResult sikorav_shorten(const hofer::IsotopyPath& path, double c, const Translation& tau,
                                 const SikoravOptions& opt) {
  const auto& d = path.domain();
  if (d.is_sphere()) throw ConfigurationError("the Sikorav construction is implemented on R^2n");
  if (!(c > 0.0)) throw ConfigurationError("c must be positive");
  const core::Hamiltonian H = path.H;
  const double tol = std::min(path.tol, 1e-10);

  if (!(tau.norm < 0.25 * c))
    throw Refusal("the translation norm " + std::to_string(tau.norm) + " is not below c/4 = " + std::to_string(0.25 * c));

  // level function: min over the grid times of H_t
  const bool autonomous = H.autonomous();
  std::vector<double> ts = path.grid.t;
  auto level = [H, ts, autonomous](const Vec& x) {
    if (autonomous) return H.value(0.0, x);
    double m = std::numeric_limits<double>::infinity();
    for (double t : ts) m = std::min(m, H.value(t, x));
    return m;
  };

  const hofer::SampleGrid fine = path.sampling.primary().refined(opt.refine);
  std::vector<double> lev(fine.size());
  core::parallel_for(fine.size(), [&](std::size_t i) { lev[i] = level(fine.node(i)); });
  std::vector<Vec> Z;
  for (std::size_t i = 0; i < fine.size(); ++i)
    if (lev[i] <= c) Z.push_back(fine.node(i));
  if (Z.empty()) throw Refusal("Z_c is empty on the sampling grid");
  for (const auto& x : Z)
    if (!fine.covers(x)) throw Refusal("Z_c reaches the sampling boundary");

  // normalization: min H_t = 0
  for (double t : {0.0, 0.5, 1.0}) {
    auto tv = hofer::total_variation(H, t, path.sampling);
    if (std::abs(tv.inf) > 1e-8 * std::max(1.0, tv.value()))
      throw ConfigurationError("H must be normalized with min H_t = 0 (inf " + std::to_string(tv.inf) + " at t=" +
                               std::to_string(t) + ")");
  }

  // disjunction on the cloud
  const std::size_t stride = std::max<std::size_t>(1, Z.size() / 2000);
  for (std::size_t i = 0; i < Z.size(); i += stride) {
    Vec y = core::flow_map(tau.T, Z[i], 0.0, 1.0, tol);
    if (level(y) <= c) throw Refusal("tau(Z_c) meets Z_c: " + where(1.0, Z[i]) + " maps into Z_c");
  }

  // max H_t > c/2 + max_Z H_t
  const int m = std::max(2, opt.check_times);
  for (int k = 0; k < m; ++k) {
    double t = double(k) / (m - 1);
    double zmax = -std::numeric_limits<double>::infinity();
    for (const auto& x : Z) zmax = std::max(zmax, H.value(t, x));
    auto tv = hofer::total_variation(H, t, path.sampling);
    if (!(tv.sup > 0.5 * c + zmax))
      throw Refusal("max H_t does not exceed c/2 + max over Z_c at t=" + std::to_string(t));
  }

  // F = f(level) on the collar Z_c - Z_{c/2}
  Vec zc = Vec::Zero(Z[0].size());
  for (const auto& x : Z) zc += x;
  zc /= double(Z.size());
  double zr = 0.0;
  for (const auto& x : Z) zr = std::max(zr, (x - zc).norm());
  zr += 2 * fine.spacing();
  const double h = 0.5 * c;
  core::Hamiltonian F(d, [level, h](double, const Vec& x) { return h * (1.0 - core::smoothstep((level(x) - h) / h)); });
  if (autonomous)
    F = F.with_gradient([H, h](double, const Vec& x) {
      return Vec(-core::smoothstep_d((H.value(0.0, x) - h) / h) * H.gradient(0.0, x));
    });
  F = F.with_support({zc, zr, 0.0}).with_autonomous(true);

  // beta_t generated by H o alpha_t + F; alpha_t preserves F, and H when H = f^{-1}-level
  auto alpha = core::flow_isotopy(-F, 1e-11);
  core::Hamiltonian Hb = autonomous ? (H + F).with_autonomous(true)
                                    : core::Hamiltonian(d, [H, F, alpha](double t, const Vec& x) {
                                        return H.value(t, alpha->forward(t, x)) + F.value(t, x);
                                      });
  auto tat = core::conjugate_by_flow(tau.T, alpha, 1e-11);
  core::Hamiltonian G = core::compose_hamiltonians(tat->generator(), Hb, tat);

  ShorteningResult res;
  res.plan.kind = PlanKind::sikorav;
  res.plan.c = c;
  res.plan.tau_norm = tau.norm;
  res.plan.provenance.push_back("caller certificate: ||tau|| = " + std::to_string(tau.norm));

  // min G_t >= c/2 and max G_t = max H_t on the refined grid
  const Vec mT = tau.T.support()->center;
  const double rT = tau.T.support()->radius;
  const double slack = opt.check_tol * std::max(1.0, c);
  double minG = std::numeric_limits<double>::infinity(), worst_max = 0.0, maxH_all = 0.0;
  for (int k = 0; k < m; ++k) {
    double t = double(k) / (m - 1);
    std::vector<double> g(fine.size()), hv(fine.size());
    core::parallel_for(fine.size(), [&](std::size_t i) {
      const Vec x = fine.node(i);
      hv[i] = H.value(t, x);
      // off the support of tau, tau alpha tau^{-1} = alpha preserves H + F, so G = H there
      g[i] = (x - mT).norm() < rT ? G.value(t, x) : hv[i];
    });
    auto gi = std::min_element(g.begin(), g.end()) - g.begin();
    double gmax = *std::max_element(g.begin(), g.end());
    double hmax = *std::max_element(hv.begin(), hv.end());
    if (g[gi] < 0.5 * c - slack) throw Refusal("min G_t < c/2 at " + where(t, fine.node(gi)));
    if (std::abs(gmax - hmax) > slack) throw Refusal("max G_t differs from max H_t at t=" + std::to_string(t));
    minG = std::min(minG, g[gi]);
    worst_max = std::max(worst_max, std::abs(gmax - hmax));
    maxH_all = std::max(maxH_all, hmax);
  }

  // phi = (tau^{-1} P_1 tau) o [tau^{-1}, beta_1^{-1}], P_u = (tau alpha_u tau^{-1}) beta_u
  const core::Hamiltonian T = tau.T;
  // beta_1 is memoized: sampling revisits the same nodes at every time
  struct Memo {
    std::mutex m;
    std::unordered_map<std::string, Vec> v;
  };
  auto memo = std::make_shared<Memo>();
  auto beta1 = [Hb, memo](const Vec& y) {
    std::string key(reinterpret_cast<const char*>(y.data()), sizeof(double) * y.size());
    {
      std::lock_guard<std::mutex> g(memo->m);
      auto it = memo->v.find(key);
      if (it != memo->v.end()) return it->second;
    }
    Vec r = core::flow_map(Hb, y, 0.0, 1.0, 1e-11);
    std::lock_guard<std::mutex> g(memo->m);
    if (memo->v.size() < 2000000) memo->v.emplace(std::move(key), r);
    return r;
  };
  // beta_1 shears hard across the collar, so GA gets the chain-rule gradient
  core::Hamiltonian GA = core::Hamiltonian(d, [T, beta1](double u, const Vec& x) {
                           Vec y = core::flow_map(T, x, 0.0, u, 1e-11);
                           return -T.value(u, x) + T.value(u, beta1(y));
                         }).with_gradient([T, Hb](double u, const Vec& x) {
    auto [y, Dt] = core::flow_map_jacobian(T, x, 0.0, u, 1e-11);
    auto [z, Db] = core::flow_map_jacobian(Hb, y, 0.0, 1.0, 1e-11);
    return Vec(-T.gradient(u, x) + Dt.transpose() * (Db.transpose() * T.gradient(u, z)));
  });
  core::Hamiltonian GB(d, [G, T](double u, const Vec& x) {
    return G.value(u, core::flow_map(T, x, 0.0, 1.0, 1e-11));
  });
  core::Hamiltonian Hn(d, [GA, GB](double t, const Vec& x) {
    if (t <= 0.5) {
      double w = 2.0 * core::smoothstep_d(2.0 * t);
      return w == 0.0 ? 0.0 : w * GA.value(core::smoothstep(2.0 * t), x);
    }
    double w = 2.0 * core::smoothstep_d(2.0 * t - 1.0);
    return w == 0.0 ? 0.0 : w * GB.value(core::smoothstep(2.0 * t - 1.0), x);
  });

  hofer::IsotopyPath old_path = path;
  old_path.grid = core::TimeGrid::with_breakpoints(opt.time_base, {0.5});
  old_path.trajectories.clear();
  hofer::IsotopyPath new_path = old_path;
  new_path.H = Hn;
  auto Lo = hofer::hofer_length(old_path);
  auto Ln = hofer::hofer_length(new_path);
  double LA = 0.0, LB = 0.0;
  {
    auto w = new_path.weights();
    for (std::size_t i = 0; i < Ln.t.size(); ++i) (Ln.t[i] <= 0.5 ? LA : LB) += w[i] * Ln.totvar[i];
    // the node at 1/2 carries weight from both halves; its totvar is zero there anyway
  }
  res.original_length = Lo.length;
  res.new_length = Ln.length;
  res.margin = Lo.length - Ln.length;
  res.t = Lo.t;
  res.old_totvar = Lo.totvar;
  res.new_totvar = Ln.totvar;

  std::vector<Vec> cloud = opt.cloud;
  cloud.insert(cloud.end(), path.cloud.begin(), path.cloud.end());
  if (cloud.empty()) {
    cloud.push_back(zc);
    for (int k = 0; k < 3; ++k) {
      Vec e = Vec::Zero(zc.size());
      e(0) = std::cos(2.1 * k);
      e(1) = std::sin(2.1 * k);
      cloud.push_back(zc + 0.6 * zr * e);
      cloud.push_back(zc + tau.v + 0.6 * zr * e);
    }
    Vec far = zc;
    far(0) += 4 * tau.radius;
    cloud.push_back(far);
  }

  // The new generator is differentiated through nested fast flows, so its
  // own flow is not integrated. Instead: (a) the segment maps
  // A_u = tau_u^{-1} beta_1^{-1} tau_u beta_1 and B_u = alpha_u tau^{-1} beta_u tau
  // compose to phi^H_1 = alpha_1 beta_1 on the cloud, and (b) GA, GB generate
  // A_u, B_u: d/du of the map matches X o map at sampled (u, x).
  auto flowT = [T](const Vec& x, double a, double b) { return core::flow_map(T, x, a, b, 1e-11); };
  auto mapA = [&](double u, const Vec& x) {
    Vec y = beta1(x);
    y = flowT(y, 0.0, u);
    y = core::flow_map(Hb, y, 1.0, 0.0, 1e-11);
    return flowT(y, u, 0.0);
  };
  auto mapB = [&](double u, const Vec& x) {
    Vec y = flowT(x, 0.0, 1.0);
    y = core::flow_map(Hb, y, 0.0, u, 1e-11);
    y = flowT(y, 1.0, 0.0);
    return alpha->forward(u, y);
  };
  // fourth-order difference in u; the collar spins fast, so the step is small
  auto ddu = [](const auto& map, double u, const Vec& x) {
    const double h = 1e-6;
    return Vec((8.0 * (map(u + h, x) - map(u - h, x)) - (map(u + 2 * h, x) - map(u - 2 * h, x))) / (12 * h));
  };
  std::vector<double> map_err(cloud.size()), gen_err(cloud.size());
  core::parallel_for(cloud.size(), [&](std::size_t i) {
    const Vec& x = cloud[i];
    Vec ref = alpha->forward(1.0, core::flow_map(Hb, x, 0.0, 1.0, 1e-11));
    map_err[i] = (mapB(1.0, mapA(1.0, x)) - ref).norm();
        double e = 0.0;
    for (double u : {0.3, 0.7}) {
      Vec dA = ddu(mapA, u, x);
      Vec dB = ddu(mapB, u, x);
      Vec vA(x.size()), vB(x.size());
      core::vector_field(GA, u, mapA(u, x), vA);
      core::vector_field(GB, u, mapB(u, x), vB);
      e = std::max({e, (dA - vA).norm() / std::max(1.0, vA.norm()), (dB - vB).norm() / std::max(1.0, vB.norm())});
    }
    gen_err[i] = e;
  });
  const double me = *std::max_element(map_err.begin(), map_err.end());
  const double ge = *std::max_element(gen_err.begin(), gen_err.end());
  res.endpoint_tolerance = opt.endpoint_tol;
  // the generator residual is a relative velocity error; folding it in is conservative
  res.endpoint_discrepancy = std::max(me, ge);
  res.metrics["endpoint_map_error"] = me;
  res.metrics["generator_residual"] = ge;
  res.path = new_path;
  res.path.cloud = cloud;

  res.metrics["c"] = c;
  res.metrics["tau_norm"] = tau.norm;
  res.metrics["min_G"] = minG;
  res.metrics["max_G_minus_max_H"] = worst_max;
  res.metrics["max_H"] = maxH_all;
  res.metrics["length_commutator"] = LA;
  res.metrics["length_G"] = LB;
  res.metrics["bound"] = Lo.length - 0.5 * c + 2 * tau.norm;
  res.metrics["target"] = Lo.length - 0.25 * c;
  return res;
}

}  // namespace hoferlab::shortening
