#include "doctest.h"

#include "hoferlab/core/structures.hpp"
#include "hoferlab/secondvar/secondvar.hpp"

#include <cmath>
#include <random>

using namespace hoferlab;
using linflow::HessianPath;
using secondvar::Basis;
using secondvar::TangentLoop;

namespace {

TangentLoop circle(double r, double T = 1.0) {
  const double w = 2 * kPi / T;
  return TangentLoop::analytic(
      [r, w](double t) { return Vec((Vec(2) << r * (std::cos(w * t) - 1), r * std::sin(w * t)).finished()); },
      [r, w](double t) { return Vec((Vec(2) << -r * w * std::sin(w * t), r * w * std::cos(w * t)).finished()); },
      2);
}

// (I - e^{-2 pi J t}) J c with e^{-aJ} = cos a I - sin a J
TangentLoop null_loop(const Vec& c) {
  Mat J = core::standard_J(2);
  return TangentLoop::analytic(
      [J, c](double t) {
        Mat E = std::cos(2 * kPi * t) * Mat::Identity(2, 2) - std::sin(2 * kPi * t) * J;
        return Vec((Mat::Identity(2, 2) - E) * J * c);
      },
      [J, c](double t) {
        Mat dE = -2 * kPi * (std::sin(2 * kPi * t) * Mat::Identity(2, 2) + std::cos(2 * kPi * t) * J);
        return Vec(-dE * J * c);
      },
      2);
}

TangentLoop random_loop(std::mt19937& rng, int dim = 2) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat C(dim, 6);
  for (int i = 0; i < C.size(); ++i) C(i) = N(rng) / (1 + i / dim);
  return TangentLoop::from_coefficients(Basis::sine, C);
}

}  // namespace

TEST_CASE("loop area") {
  CHECK(secondvar::loop_area(TangentLoop::zero(2)) == 0.0);
  for (double r : {0.5, 1.0, 2.0}) {
    CHECK(secondvar::loop_area(circle(r)) == doctest::Approx(kPi * r * r).epsilon(1e-12));
    CHECK(secondvar::loop_area(circle(r).reversed()) == doctest::Approx(-kPi * r * r).epsilon(1e-12));
  }
  std::vector<Vec> s;
  for (int k = 0; k <= 2000; ++k) s.push_back(circle(1.0).value(k / 2000.0));
  CHECK(secondvar::loop_area(TangentLoop::from_samples(s)) == doctest::Approx(kPi).epsilon(1e-5));
  auto p = secondvar::project(circle(1.0), Basis::legendre, 40);
  CHECK(p.end_gap() < 1e-14);
  CHECK(secondvar::loop_area(p) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("quadratic functional") {
  auto B = HessianPath::scalar(2 * kPi);
  CHECK(secondvar::q_functional(B, TangentLoop::zero(2)).value == 0.0);
  auto q = secondvar::q_functional(B, circle(1.0));
  // kinetic |g'|^2 / 2 pi = 2 pi, area term 2 area = 2 pi
  CHECK(q.kinetic == doctest::Approx(2 * kPi).epsilon(1e-12));
  CHECK(q.value == doctest::Approx(4 * kPi).epsilon(1e-12));
  // same value from the matrix form
  for (Basis b : {Basis::legendre, Basis::sine}) {
    auto m = secondvar::assemble(B, 1.0, 1, 40, b);
    auto c = secondvar::project(circle(1.0), b, 40);
    Mat C = c.coefficients();
    Vec v = Eigen::Map<const Vec>(Mat(C.transpose()).data(), C.size());
    double tol = b == Basis::legendre ? 1e-8 : 1e-2;
    CHECK(secondvar::q_of_coefficients(m, v) == doctest::Approx(q.value).epsilon(tol));
  }
  // decomposition under B -> c B
  std::mt19937 rng(5);
  auto g = random_loop(rng);
  auto base = secondvar::q_functional(B, g);
  auto sc = secondvar::q_functional(B.scaled(3.0), g);
  CHECK(sc.kinetic == doctest::Approx(base.kinetic / 3.0).epsilon(1e-12));
  CHECK(sc.area_term == doctest::Approx(base.area_term).epsilon(1e-12));
  auto mx = secondvar::q_functional(B, g, -1);
  CHECK(mx.area_term == doctest::Approx(-base.area_term).epsilon(1e-12));
  Mat Bs = Mat::Zero(2, 2);
  Bs(0, 0) = 1.0;
  CHECK_THROWS_AS(secondvar::q_functional(HessianPath::constant(Bs), g), Refusal);
}

TEST_CASE("second variation contribution") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto B = linflow::random_positive_path(rng);
    auto g = random_loop(rng);
    for (int sign : {1, -1}) {
      double a = secondvar::second_variation_contribution(B, g, sign);
      double b = secondvar::q_functional(B, g, sign).value;
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
    }
  }
  auto B = HessianPath::scalar(2 * kPi);
  CHECK(secondvar::second_variation_contribution(B, TangentLoop::zero(2)) == 0.0);
  Vec c(2);
  c << 0.3, -0.7;
  CHECK(std::abs(secondvar::second_variation_contribution(B, null_loop(c))) < 1e-12);
}

TEST_CASE("quadratic form trichotomy") {
  auto r09 = secondvar::q_form_matrix(HessianPath::scalar(2 * kPi * 0.9), 1.0);
  CHECK(r09.index == 0);
  CHECK(r09.nullity == 0);
  CHECK(r09.refinement_agrees);
  auto r1 = secondvar::q_form_matrix(HessianPath::scalar(2 * kPi), 1.0);
  CHECK(r1.index == 0);
  CHECK(r1.nullity == 2);
  CHECK(r1.refinement_agrees);
  CHECK(r1.index + r1.nullity + r1.positive == 2 * r1.N);
  REQUIRE(r1.null_vectors.size() == 2);
  for (const auto& g : r1.null_vectors) {
    CHECK(g.end_gap() < 1e-12);
    CHECK(secondvar::nullspace_trajectory_check(HessianPath::scalar(2 * kPi), 1.0, g).residual <= 1e-6);
  }
  auto r11 = secondvar::q_form_matrix(HessianPath::scalar(2 * kPi * 1.1), 1.0);
  CHECK(r11.index >= 1);
  CHECK(r11.refinement_agrees);
}

TEST_CASE("null space trajectory check") {
  auto B = HessianPath::scalar(2 * kPi);
  Vec c(2);
  c << 1.0, 0.4;
  CHECK(secondvar::nullspace_trajectory_check(B, 1.0, null_loop(c)).residual <= 1e-10);
  std::mt19937 rng(2);
  CHECK(secondvar::nullspace_trajectory_check(B, 1.0, random_loop(rng)).residual > 0.1);
  auto z = secondvar::nullspace_trajectory_check(B, 1.0, TangentLoop::zero(2));
  CHECK(z.residual == 0.0);
  CHECK(z.c.norm() == 0.0);
}

TEST_CASE("conjugate values") {
  secondvar::ScanOptions o;
  o.scan = 128;
  o.N = 32;
  auto a = secondvar::conjugate_values(HessianPath::scalar(2 * kPi), o);
  REQUIRE(a.values.size() == 1);
  CHECK(a.values[0].t == doctest::Approx(1.0));
  CHECK(a.values[0].nullity == 2);
  auto b = secondvar::conjugate_values(HessianPath::scalar(4 * kPi), o);
  REQUIRE(b.values.size() == 2);
  CHECK(b.values[0].t == doctest::Approx(0.5));
  CHECK(b.values[1].t == doctest::Approx(1.0));
  CHECK(b.index_monotone);
  CHECK(b.jumps_match_nullity);
  CHECK(secondvar::conjugate_values(HessianPath::scalar(0.5), o).values.empty());

  // off-grid crossing: 3 pi I closes at t = 2/3, found by bisection
  auto c = secondvar::conjugate_values(HessianPath::scalar(3 * kPi), o);
  REQUIRE(c.values.size() == 1);
  CHECK(c.values[0].t == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(c.values[0].nullity == 2);
  CHECK(c.jumps_match_nullity);
}
