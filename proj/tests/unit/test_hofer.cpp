#include "doctest.h"

#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/isotopy.hpp"
#include "hoferlab/hofer/families.hpp"
#include "hoferlab/hofer/variation.hpp"

#include <cmath>
#include <random>

using namespace hoferlab;
using core::Hamiltonian;
using core::PhaseDomain;
using hofer::IsotopyPath;
using hofer::Sampling;
using hofer::SampleGrid;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Sampling sphere_sampling() { return Sampling::single(SampleGrid::sphere(32, 33)); }

Sampling plane_sampling(double hw = 2.0, int n = 81) {
  return Sampling::single(SampleGrid::square(hw, n, v2(0, 0)));
}

IsotopyPath make_path(Hamiltonian H, Sampling s, int intervals = 32) {
  IsotopyPath p;
  p.H = std::move(H);
  p.sampling = std::move(s);
  p.grid = core::TimeGrid::uniform(intervals);
  return p;
}

}  // namespace

TEST_CASE("total variation examples") {
  auto d = PhaseDomain::euclidean(2);
  CHECK(hofer::total_variation(Hamiltonian::zero(d), 0.3, plane_sampling()).value() == 0.0);
  CHECK(hofer::total_variation(hofer::sphere_height(), 0.0, sphere_sampling()).value() ==
        doctest::Approx(2.0).epsilon(1e-12));
  // pi r^2 on the closed unit disc, continued by its boundary value
  Hamiltonian disc(d, [](double, const Vec& x) { return kPi * std::min(x.squaredNorm(), 1.0); });
  CHECK(hofer::total_variation(disc, 0.0, plane_sampling(1.2, 25)).value() ==
        doctest::Approx(kPi).epsilon(1e-10));
  // off-grid extremum found by refinement
  Hamiltonian off(d, [](double, const Vec& x) { return -std::pow(x(0) - 0.0137, 2) - std::pow(x(1) + 0.021, 2); });
  auto tv = hofer::total_variation(off, 0.0, plane_sampling(1.0, 11));
  CHECK(tv.sup == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tv.argsup(0) == doctest::Approx(0.0137).epsilon(1e-4));
  CHECK_THROWS_AS(hofer::total_variation(disc, 0.0, Sampling{}), ConfigurationError);
}

TEST_CASE("hofer length examples and reparametrization invariance") {
  auto p = make_path(hofer::sphere_height(), sphere_sampling());
  CHECK(hofer::hofer_length(p).length == doctest::Approx(2.0).epsilon(1e-12));
  p.H = Hamiltonian::zero(PhaseDomain::sphere());
  CHECK(hofer::hofer_length(p).length == 0.0);

  hofer::TwoBumpFamily fam;
  auto q = make_path(fam.hamiltonian(), plane_sampling(), 256);
  const double L = hofer::hofer_length(q).length;
  // independent oracle: sup is max(w1, w2), inf is 0
  double ref = core::gauss_integrate([&](double t) { return std::max(fam.w1(t), fam.w2(t)); }, 0,
                                     1, 20, 64);
  CHECK(L == doctest::Approx(ref).epsilon(1e-4));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-0.06, 0.06);
  for (int trial = 0; trial < 3; ++trial) {
    double a = U(rng), b = U(rng);
    auto beta = [a, b](double t) { return t + a * std::sin(2 * kPi * t) + b * std::sin(4 * kPi * t) / 2; };
    auto dbeta = [a, b](double t) {
      return 1 + 2 * kPi * a * std::cos(2 * kPi * t) + 2 * kPi * b * std::cos(4 * kPi * t);
    };
    auto r = make_path(core::reparametrized(fam.hamiltonian(), beta, dbeta), plane_sampling(), 512);
    CHECK(hofer::hofer_length(r).length == doctest::Approx(L).epsilon(2e-3));
  }
}

TEST_CASE("length is conjugation invariant") {
  auto d = PhaseDomain::euclidean(2);
  Hamiltonian H = core::time_weighted(core::peak_bump(v2(0.2, 0), 0.8, 1.0),
                                      [](double t) { return 1 + t; }, [](double) { return 1.0; }) -
                  core::peak_bump(v2(-0.5, 0.3), 0.4, 0.5);
  Hamiltonian S = core::peak_bump(v2(0.1, -0.1), 1.5, 0.7).with_autonomous();
  auto phi = core::flow_isotopy(H);
  auto conj = core::conjugate_by_flow(S, phi);
  auto a = make_path(H, plane_sampling(2.0, 61), 16);
  auto b = make_path(conj->generator(), plane_sampling(2.0, 61), 16);
  CHECK(hofer::hofer_length(b).length ==
        doctest::Approx(hofer::hofer_length(a).length).epsilon(1e-6));
}

TEST_CASE("extremum sets") {
  auto s = sphere_sampling();
  auto e = hofer::extremum_sets(hofer::sphere_height(), 0.0, s);
  REQUIRE(e.minset.nodes.size() == 1);
  CHECK(e.minset.points[0](1) == -1.0);
  CHECK(e.maxset.points[0](1) == 1.0);

  hofer::TwoBumpFamily fam;
  auto p = plane_sampling();
  auto two = hofer::extremum_sets(fam.hamiltonian(), fam.switch_time, p);
  auto cl = hofer::clusters(p.primary(), two.maxset.nodes);
  CHECK(cl.size() == 2);
  bool near1 = false, near2 = false;
  for (const Vec& x : two.maxset.points) {
    near1 = near1 || (x - fam.c1()).norm() < 0.06;
    near2 = near2 || (x - fam.c2()).norm() < 0.06;
  }
  CHECK(near1);
  CHECK(near2);

  auto c = hofer::extremum_sets(Hamiltonian::constant(PhaseDomain::euclidean(2), 3.0), 0.0, p);
  CHECK(c.minset.nodes.size() == p.primary().size());
  CHECK(c.maxset.nodes.size() == p.primary().size());
}

TEST_CASE("fixed extrema and the geodesic criterion") {
  auto rot = make_path(hofer::sphere_height([](double t) { return 1 + t; },
                                            [](double) { return 1.0; }),
                       sphere_sampling(), 16);
  auto fx = hofer::fixed_extrema(rot);
  REQUIRE(fx.fixed_minima.size() >= 1);
  for (const Vec& x : fx.fixed_minima) CHECK(x(1) < -0.99);
  for (const Vec& x : fx.fixed_maxima) CHECK(x(1) > 0.99);

  // autonomous well + peak: isolated extrema, every window passes
  auto d = PhaseDomain::euclidean(2);
  Hamiltonian auto_h = (core::peak_bump(v2(0.7, 0), 0.6, 1.0) - core::peak_bump(v2(-0.7, 0), 0.6, 1.0))
                           .with_autonomous();
  auto ap = make_path(auto_h, plane_sampling(), 16);
  auto afx = hofer::fixed_extrema(ap);
  REQUIRE(afx.fixed_maxima.size() >= 1);
  CHECK((afx.fixed_maxima[0] - v2(0.7, 0)).norm() < 0.1);
  CHECK(hofer::geodesic_check(ap).pass);

  hofer::TwoBumpFamily fam;
  auto tp = make_path(fam.hamiltonian(), plane_sampling(), 48);
  auto slices = hofer::path_extrema(tp);
  auto tfx = hofer::fixed_extrema(tp, slices);
  CHECK(tfx.fixed_maxima.empty());
  CHECK_FALSE(hofer::lcritical_check(tp).pass());
  hofer::WindowSpec global;
  global.count = 1;
  CHECK_FALSE(hofer::geodesic_check(tp, slices, global).pass);
  hofer::WindowSpec fine;
  fine.breaks = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  auto g = hofer::geodesic_check(tp, slices, fine);
  CHECK(g.windows.size() == 3);
  CHECK(g.pass);
}

TEST_CASE("smooth point necessary condition") {
  auto rot = make_path(hofer::sphere_height(), sphere_sampling(), 16);
  auto r = hofer::smooth_point_necessary_check(rot);
  CHECK(r.pass);
  CHECK(r.exceptional_fraction == 0.0);

  hofer::PlateauFamily fam;
  auto pp = make_path(fam.hamiltonian(), plane_sampling(2.0, 81), 100);
  auto pr = hofer::smooth_point_necessary_check(pp);
  CHECK_FALSE(pr.pass);
  CHECK(pr.exceptional_fraction == doctest::Approx(0.2).epsilon(0.1));

  auto cp = make_path(Hamiltonian::constant(PhaseDomain::euclidean(2), 1.0), plane_sampling(), 8);
  auto cr = hofer::smooth_point_necessary_check(cp);
  CHECK_FALSE(cr.pass);
  CHECK(cr.exceptional_fraction == 1.0);
}

TEST_CASE("first variation formula") {
  auto sd = PhaseDomain::sphere();
  auto rot = make_path(hofer::sphere_height(), sphere_sampling(), 32);
  CHECK(hofer::first_variation(rot, Hamiltonian::zero(sd)).value == 0.0);

  // G_t = sin(pi t) g(x): formula reduces to int G'_t(P) - G'_t(p) dt
  auto G = [](double a, double b) {
    return Hamiltonian(PhaseDomain::sphere(), [a, b](double t, const Vec& x) {
             return std::sin(kPi * t) * (a * x(1) + b * x(1) * x(1));
           }).with_time_derivative([a, b](double t, const Vec& x) {
      return kPi * std::cos(kPi * t) * (a * x(1) + b * x(1) * x(1));
    });
  };
  // int_0^1 pi cos(pi t) dt = 0, so for every G of this shape the value is 0
  CHECK(hofer::first_variation(rot, G(0.3, 0.8)).value == doctest::Approx(0.0).epsilon(1e-12));
  // G' with sin^2 time profile: int 2 pi sin cos ... use G = sin^2(pi t) z
  Hamiltonian G2 = Hamiltonian(sd, [](double t, const Vec& x) {
                     return std::pow(std::sin(kPi * t), 2) * x(1);
                   }).with_time_derivative([](double t, const Vec& x) {
    return kPi * std::sin(2 * kPi * t) * x(1);
  });
  auto fv = hofer::first_variation(rot, G2);
  CHECK(fv.certified);
  CHECK(std::abs(fv.value) < 1e-12);
  CHECK(fv.integrand[8] == doctest::Approx(2 * kPi * std::sin(2 * kPi * 0.25)));

  // G supported away from the fixed extrema of a plane path: value 0
  auto d = PhaseDomain::euclidean(2);
  Hamiltonian H = (core::peak_bump(v2(0.7, 0), 0.6, 1.0) - core::peak_bump(v2(-0.7, 0), 0.6, 1.0))
                      .with_autonomous();
  auto ap = make_path(H, plane_sampling(), 16);
  Hamiltonian away = core::time_weighted(core::peak_bump(v2(0, 1.2), 0.5, 1.0),
                                         [](double t) { return std::sin(kPi * t); },
                                         [](double t) { return kPi * std::cos(kPi * t); });
  CHECK(hofer::first_variation(ap, away).value == doctest::Approx(0.0).epsilon(1e-12));

  // plateau maxima: refusal unless forced
  hofer::PlateauFamily fam;
  auto pp = make_path(fam.hamiltonian(), plane_sampling(), 20);
  CHECK_THROWS_AS(hofer::first_variation(pp, away), Refusal);
  CHECK_NOTHROW(hofer::first_variation(pp, away, true));

  Hamiltonian bad(d, [](double, const Vec& x) { return x(0); });
  CHECK_THROWS_AS(hofer::first_variation(ap, bad), ConfigurationError);
}
