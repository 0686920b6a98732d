#include "doctest.h"

#include "hoferlab/core/quadrature.hpp"
#include "hoferlab/hofer/families.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <cmath>

using namespace hoferlab;
using namespace hoferlab::shortening;
using hofer::IsotopyPath;
using hofer::SampleGrid;
using hofer::Sampling;
using linflow::HessianPath;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

IsotopyPath make_path(core::Hamiltonian H, double hw, int n, int intervals = 32) {
  IsotopyPath p;
  p.H = std::move(H);
  p.sampling = Sampling::single(SampleGrid::square(hw, n, v2(0, 0)));
  p.grid = core::TimeGrid::uniform(intervals);
  return p;
}

// shoelace area of a sampled closed curve, the oracle for Lemma z
double polygon_area(const LoopFn& a, int n = 20000) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    Vec p = a(double(k) / n), q = a(double(k + 1) / n);
    s += p(0) * q(1) - p(1) * q(0);
  }
  return 0.5 * s;
}

struct Shape {
  LoopFn a, da;
};

Shape circle(double sgn = 1.0) {
  return {[sgn](double t) { return v2(std::cos(kTwoPi * t), sgn * std::sin(kTwoPi * t)); },
          [sgn](double t) { return Vec(kTwoPi * v2(-std::sin(kTwoPi * t), sgn * std::cos(kTwoPi * t))); }};
}

Shape ellipse() {
  return {[](double t) { return v2(2 * std::cos(kTwoPi * t), std::sin(kTwoPi * t)); },
          [](double t) { return Vec(kTwoPi * v2(-2 * std::sin(kTwoPi * t), std::cos(kTwoPi * t))); }};
}

// limacon r = 1 + cos(theta)/2
Shape limacon() {
  return {[](double t) {
            double th = kTwoPi * t, r = 1 + 0.5 * std::cos(th);
            return v2(r * std::cos(th), r * std::sin(th));
          },
          [](double t) {
            double th = kTwoPi * t, r = 1 + 0.5 * std::cos(th), dr = -0.5 * std::sin(th);
            return Vec(kTwoPi * v2(dr * std::cos(th) - r * std::sin(th), dr * std::sin(th) + r * std::cos(th)));
          }};
}

}  // namespace

TEST_CASE("pulse values and closed-form integral") {
  Pulse P{0.3, 0.5, 0.05};
  CHECK(P.value(0.2) == 0.0);
  CHECK(P.value(0.4) == 1.0);
  CHECK(P.value(0.6) == 0.0);
  CHECK(P.total() == doctest::Approx(0.25));
  for (double t : {0.26, 0.3, 0.41, 0.53, 0.7}) {
    // piecewise over the ramp knots, where P is only C^2
    double q = 0.0, lo = 0.0;
    for (double k : {0.25, 0.3, 0.5, 0.55, t}) {
      double hi = std::min(k, t);
      if (hi > lo) q += core::gauss_integrate([&](double s) { return P.value(s); }, lo, hi, 16, 8);
      lo = std::max(lo, hi);
    }
    CHECK(P.integral(t) == doctest::Approx(q).epsilon(1e-10));
  }
}

TEST_CASE("flux equals the enclosed area for three loop shapes") {
  const double rho = 0.01;
  for (const Shape& s : {circle(), ellipse(), limacon()}) {
    TranslationLoop L{v2(0, 0), 0.1, rho, s.a, s.da};
    auto r = verify_lemma_z(L);
    double area = rho * rho * polygon_area(s.a);
    CHECK(r.area == doctest::Approx(area).epsilon(1e-6));
    CHECK(r.residual <= 1e-3);
    // the generator at p integrates to the area without the line integral
    CHECK(r.generator == doctest::Approx(area).epsilon(1e-6));
  }
}

TEST_CASE("flux of a constant loop vanishes and reversal flips the sign") {
  TranslationLoop still{v2(0, 0), 0.1, 0.01, [](double) { return v2(0.3, -0.2); },
                        [](double) { return v2(0, 0); }};
  auto r0 = verify_lemma_z(still);
  CHECK(std::abs(r0.flux) < 1e-12);
  CHECK(std::abs(r0.area) < 1e-15);

  Shape fw = circle(1.0), bw = circle(-1.0);
  auto a = verify_lemma_z({v2(0, 0), 0.1, 0.01, fw.a, fw.da});
  auto b = verify_lemma_z({v2(0, 0), 0.1, 0.01, bw.a, bw.da});
  CHECK(a.area > 0);
  CHECK(b.area == doctest::Approx(-a.area).epsilon(1e-10));
  CHECK(b.flux == doctest::Approx(-a.flux).epsilon(1e-6));
}

TEST_CASE("min K integral against the closed formula") {
  // lambda = 1/2 trajectory of 4 pi I: alpha' = -J (2 pi) alpha
  LoopFn a = [](double t) { return v2(std::cos(kTwoPi * t), -std::sin(kTwoPi * t)); };
  LoopFn da = [](double t) { return Vec(kTwoPi * v2(-std::sin(kTwoPi * t), -std::cos(kTwoPi * t))); };
  auto r = verify_lemma_lambda(HessianPath::scalar(4 * kPi), 0.5, a, da, 0.01);
  CHECK(r.lhs > 0);
  CHECK(r.residual_alpha <= 1e-6);
  CHECK(r.minimizer_error <= 1e-3);

  auto z = verify_lemma_lambda(HessianPath::scalar(4 * kPi), 0.5, a, da, 0.0);
  CHECK(std::abs(z.lhs) < 1e-14);
  CHECK(std::abs(z.rhs_alpha0) < 1e-14);
}

TEST_CASE("min K formula for a rank one family") {
  HessianPath r1{[](double t) {
                   Vec u = v2(std::cos(kTwoPi * t), std::sin(kTwoPi * t));
                   return Mat(12 * kPi * u * u.transpose());
                 },
                 2, true};
  auto w = linflow::lambda_conjugate(r1);
  REQUIRE(w);
  LoopFn a = [w](double t) { return w->alpha_at(t); };
  LoopFn da = [w](double t) { return w->alpha_dot_at(t); };
  auto r = verify_lemma_lambda(r1, w->lambda, a, da, 0.01);
  CHECK(r.lhs > 0);
  CHECK(r.residual_alpha <= 1e-3);
  CHECK(r.minimizer_relative <= 1e-3);
}

TEST_CASE("slowdown loop") {
  LoopFn ab = [](double t) { return v2(std::cos(kTwoPi * t), std::sin(kTwoPi * t)); };
  LoopFn abd = [](double t) { return Vec(kTwoPi * v2(-std::sin(kTwoPi * t), std::cos(kTwoPi * t))); };
  auto same = slowdown_loop(ab, abd, 1.0, 0.1);
  for (double s : {0.0, 0.3, 0.99}) CHECK((same.alpha(s) - ab(s)).norm() < 1e-14);

  // half a turn stretched to [0, 1]; the slowed loop ends where the trajectory ends
  auto half = slowdown_loop(ab, abd, 0.5, 0.1);
  CHECK(half.f(0.0) == 0.0);
  CHECK(half.f(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half.f(0.3) == doctest::Approx(0.3));
  double maxdf = 0.0, prev = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    double s = k / 1000.0;
    CHECK(half.f(s) >= prev);
    prev = half.f(s);
    maxdf = std::max(maxdf, half.df(s));
    CHECK(half.alpha_dot(s).norm() <= kTwoPi * half.df(s) + 1e-12);
  }
  CHECK(maxdf <= 1.0 + 1e-12);

  auto flat = slowdown_loop([](double) { return v2(1, 2); }, [](double) { return v2(0, 0); }, 0.5, 0.1);
  CHECK((flat.alpha(0.77) - v2(1, 2)).norm() == 0.0);
}

TEST_CASE("no fixed maximum: two-bump family shortens by about 2 c eps") {
  hofer::TwoBumpFamily fam;
  auto p = make_path(fam.hamiltonian(), 2.0, 81);
  auto r = shorten_no_fixed_max(p, {0.1, 0.6}, 0.25, 0.1, 0.03);
  CHECK(r.accepted());
  CHECK(r.margin == doctest::Approx(r.metrics["expected_margin"]).epsilon(0.2));
  CHECK(r.endpoint_discrepancy <= 1e-4);

  // too wide a window runs into the other maximum
  CHECK_THROWS_AS(shorten_no_fixed_max(p, {0.1, 0.6}, 0.25, 0.1, 0.2), EpsilonRefusal);
}

TEST_CASE("no fixed extremum: refusals and the mirrored minimum") {
  auto auto_path = make_path(hofer::saturated_well(), 1.0, 41);
  CHECK_THROWS_AS(shorten_no_fixed_min(auto_path, {0.1, 0.6}, 0.2, 0.1, 0.03), Refusal);

  hofer::TwoBumpFamily fam;
  auto H = fam.hamiltonian();
  auto p = make_path(core::Hamiltonian(H.domain(), [H](double t, const Vec& x) { return -H.value(t, x); }), 2.0,
                     81);
  auto r = shorten_no_fixed_min(p, {0.1, 0.6}, 0.25, 0.1, 0.03);
  CHECK(r.accepted());
  CHECK(r.plan.kind == PlanKind::no_fixed_min);
  CHECK(r.margin == doctest::Approx(r.metrics["expected_margin"]).epsilon(0.2));
}

TEST_CASE("translation helper and the Sikorav refusals") {
  auto tau = make_translation(v2(0.08, 0), v2(0, 0), 0.04);
  // the linear part on the plateau moves points by v
  Vec y = core::flow_map(tau.T, v2(0.01, 0.005), 0.0, 1.0, 1e-12);
  CHECK((y - v2(0.09, 0.005)).norm() < 1e-9);
  CHECK(tau.norm > 2 * 0.08 * tau.radius);
  CHECK(tau.norm < 2 * 0.08 * 1.25 * tau.radius);

  auto p = make_path(hofer::gaussian_well(1.0, 0.06), 0.3, 31, 16);
  // a near-identity translation does not displace Z_c
  auto idle = make_translation(v2(1e-3, 0), v2(0, 0), 0.04);
  CHECK_THROWS_AS(sikorav_shorten(p, 0.25, idle), Refusal);
  // a norm at or above c/4 is refused before any work
  CHECK_THROWS_AS(sikorav_shorten(p, 0.04, tau), Refusal);
}

TEST_CASE("annulus positivity keeps the length") {
  auto p = make_path(hofer::saturated_well(), 1.0, 41, 64);
  auto r = step1_annulus_positivity(p, v2(0, 0), 0.1, 0.05, 0.0);
  CHECK(std::abs(r.new_length - r.original_length) <= 1e-8);
  CHECK(r.endpoint_discrepancy <= 1e-4);
  CHECK(r.metrics["positivity"] > 0.0);

  const double M = annulus_margin(p.H, v2(0, 0), 0.05, 0.4, {0.0, 0.5, 1.0}, false);
  CHECK(M > 0);
  CHECK_THROWS_AS(step1_annulus_positivity(p, v2(0, 0), 0.1, 0.05, 0.6 * M), Refusal);

  auto d = core::PhaseDomain::euclidean(2);
  auto H = p.H;
  auto z = make_path(core::Hamiltonian(d, [H](double t, const Vec& x) { return t < 0.5 ? 0.0 : H.value(t, x); }),
                     1.0, 41);
  CHECK_THROWS_AS(step1_annulus_positivity(z, v2(0, 0), 0.1, 0.05, 0.0), Refusal);
}

TEST_CASE("scrubbing: witnesses, gain and the mirrored maximum") {
  auto weak = make_path(core::Hamiltonian(core::PhaseDomain::euclidean(2),
                                          [](double, const Vec& x) { return 0.8 * kPi * x.squaredNorm(); }),
                        1.0, 41);
  CHECK_THROWS_AS(scrubbing_witness(weak, v2(0, 0)), Refusal);

  auto p = make_path(hofer::saturated_well(), 1.0, 41);
  auto w = scrubbing_witness(p, v2(0, 0));
  CHECK(w.lambda == doctest::Approx(0.5).epsilon(1e-8));
  ScrubbingOptions o;
  o.time_base = 32;
  o.min_samples = 32;
  o.focus_points = 21;
  auto r = scrubbing_motion(p, v2(0, 0), 0.1, w, o);
  CHECK(r.accepted());
  CHECK(r.margin == doctest::Approx(r.metrics["formula_alpha"]).epsilon(1e-3));

  auto H = hofer::saturated_well();
  auto q = make_path(core::Hamiltonian(H.domain(), [H](double t, const Vec& x) { return -H.value(t, x); }), 1.0, 41);
  auto wm = scrubbing_witness(q, v2(0, 0), true);
  ScrubbingOptions om = o;
  om.maximum = true;
  auto rm = scrubbing_motion(q, v2(0, 0), 0.1, wm, om);
  CHECK(rm.accepted());
  CHECK(rm.margin == doctest::Approx(r.margin).epsilon(1e-3));
}
