#include "doctest.h"

#include "hoferlab/core/bump.hpp"
#include "hoferlab/core/flow.hpp"
#include "hoferlab/core/isotopy.hpp"
#include "hoferlab/core/optimize.hpp"
#include "hoferlab/core/quadrature.hpp"
#include "hoferlab/core/structures.hpp"

#include <cmath>
#include <random>

using namespace hoferlab;
using namespace hoferlab::core;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Hamiltonian quadratic_rotation(double c) {
  // c * pi * |x|^2, analytic gradient
  return Hamiltonian(
             PhaseDomain::euclidean(2), [c](double, const Vec& x) { return c * kPi * x.squaredNorm(); },
             [c](double, const Vec& x) { return Vec(2 * c * kPi * x); })
      .with_autonomous();
}

// Smooth time-dependent test functions without analytic gradients.
Hamiltonian wavy_H() {
  return Hamiltonian(PhaseDomain::euclidean(2), [](double t, const Vec& x) {
    return 0.5 * x(0) * x(0) + 0.3 * std::sin(x(1) + t) + 0.2 * x(0) * x(1) * (1 + t);
  });
}

Hamiltonian wavy_G() {
  return Hamiltonian(PhaseDomain::euclidean(2), [](double t, const Vec& x) {
    return (0.4 + 0.5 * t) * (x(0) * x(0) * x(0) / 3 - x(1)) + 0.1 * std::cos(2 * x(0) - t);
  });
}

}  // namespace

TEST_CASE("J and omega_0 conventions") {
  Mat J = standard_J(4);
  CHECK((J * J + Mat::Identity(4, 4)).norm() == doctest::Approx(0.0));
  Vec e1 = Vec::Unit(4, 0), e2 = Vec::Unit(4, 1);
  CHECK((J * e1 - e2).norm() == 0.0);
  CHECK((J * e2 + e1).norm() == 0.0);
  std::mt19937 rng(7);
  std::normal_distribution<double> N;
  Vec u(4), v(4);
  for (int i = 0; i < 4; ++i) {
    u(i) = N(rng);
    v(i) = N(rng);
  }
  CHECK(omega0(u, v) == doctest::Approx(-omega0(v, u)));
  CHECK((apply_J(u) - J * u).norm() < 1e-15);
}

TEST_CASE("symplectic gradient examples") {
  Hamiltonian Hy(PhaseDomain::euclidean(2), [](double, const Vec& x) { return x(1); });
  Vec X = symplectic_gradient(Hy, 0.0, v2(0.3, -2.0));
  CHECK(X(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(X(1) == doctest::Approx(0.0).epsilon(1e-9));

  Vec R = symplectic_gradient(quadratic_rotation(1.0), 0.0, v2(1.0, 0.0));
  CHECK(R(0) == doctest::Approx(0.0));
  CHECK(R(1) == doctest::Approx(-kTwoPi));

  auto C = Hamiltonian::constant(PhaseDomain::euclidean(2), 3.0);
  CHECK(symplectic_gradient(C, 0.2, v2(1, 1)).norm() == 0.0);
}

TEST_CASE("omega_0(X_H, v) = dH(v), finite differences converge at second order") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  Hamiltonian H = wavy_H();
  for (int trial = 0; trial < 10; ++trial) {
    Vec x = v2(U(rng), U(rng)), v = v2(U(rng), U(rng));
    double t = 0.5 * (1 + U(rng));
    Vec X = symplectic_gradient(H, t, x);
    auto dH = [&](double h) { return (H(t, x + h * v) - H(t, x - h * v)) / (2 * h); };
    double e1 = std::abs(omega0(X, v) - dH(1e-2));
    double e2 = std::abs(omega0(X, v) - dH(5e-3));
    CHECK(std::abs(omega0(X, v) - dH(1e-4)) < 1e-7);
    if (e1 > 1e-9) CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("analytic and finite-difference gradients agree") {
  auto b = peak_bump(v2(0.1, -0.2), 0.8, 1.3);
  for (double a : {0.0, 0.3, 0.55}) {
    Vec x = v2(0.1 + a, -0.2 + 0.5 * a);
    CHECK((b.gradient(0, x) - b.fd_gradient(0, x)).norm() < 1e-8);
  }
  auto p = plateau_bump(v2(0, 0), 0.2, 0.5, -0.7);
  Vec x = v2(0.25, 0.2);
  CHECK((p.gradient(0, x) - p.fd_gradient(0, x)).norm() < 1e-8);
}

TEST_CASE("Poisson bracket: antisymmetry, constants, and sign") {
  auto d = PhaseDomain::euclidean(2);
  Hamiltonian X(d, [](double, const Vec& x) { return x(0); });
  Hamiltonian Y(d, [](double, const Vec& x) { return x(1); });
  CHECK(poisson_bracket(X, Y, 0, v2(0, 0)) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(poisson_bracket(Y, X, 0, v2(0, 0)) == doctest::Approx(1.0).epsilon(1e-8));
  auto H = wavy_H();
  CHECK(std::abs(poisson_bracket(H, H, 0.3, v2(0.2, 0.4))) < 1e-12);
  CHECK(std::abs(poisson_bracket(H, Hamiltonian::constant(d, 2.0), 0.3, v2(0.2, 0.4))) < 1e-12);
}

TEST_CASE("Taylor consistency pins the bracket sign") {
  // Generator of eps -> phi_{eps G_t} o phi_t, differentiated in eps,
  // against G' + {-G, H}.
  auto H = wavy_H();
  auto G = wavy_G();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  const double eps = 1e-3;
  auto K = [&](double e) {
    TimeOneFamily psi(e * G, 1e-12);
    return psi.composite_with(H);
  };
  auto Kp = K(eps), Km = K(-eps);
  for (int i = 0; i < 6; ++i) {
    Vec x = v2(U(rng), U(rng));
    double t = 0.5 + 0.5 * U(rng);
    double fd = (Kp(t, x) - Km(t, x)) / (2 * eps);
    double formula = G.time_derivative(t, x) + poisson_bracket(-G, H, t, x);
    double wrong = G.time_derivative(t, x) - poisson_bracket(-G, H, t, x);
    CHECK(fd == doctest::Approx(formula).epsilon(1e-5));
    if (std::abs(poisson_bracket(G, H, t, x)) > 1e-3) CHECK(std::abs(fd - wrong) > 1e-4);
  }
}

TEST_CASE("flow examples") {
  auto traj = flow(quadratic_rotation(1.0), v2(1, 0), 0.0, 1.0, 1e-12);
  CHECK((traj.endpoint() - v2(1, 0)).norm() < 1e-9);
  // quarter period: clockwise
  Vec q = flow_map(quadratic_rotation(1.0), v2(1, 0), 0.0, 0.25, 1e-12);
  CHECK((q - v2(0, -1)).norm() < 1e-9);

  auto z = Hamiltonian::zero(PhaseDomain::euclidean(2));
  auto c = flow(z, v2(0.3, 0.7), 0, 1);
  CHECK((c.endpoint() - v2(0.3, 0.7)).norm() == 0.0);

  auto S = PhaseDomain::sphere();
  Hamiltonian Hz = Hamiltonian(S, [](double, const Vec& x) { return x(1); })
                       .with_zonal([](double, double) { return 1.0; })
                       .with_autonomous();
  auto s = flow(Hz, v2(6.0, 0.3), 0.0, 1.0);
  CHECK(s.endpoint()(0) == doctest::Approx(std::fmod(7.0, kTwoPi)));
  CHECK(s.endpoint()(1) == doctest::Approx(0.3));
  // the chart integrator agrees with the exact rotation
  Hamiltonian Hz_chart(S, [](double, const Vec& x) { return x(1); });
  Vec e = flow_map(Hz_chart, v2(0.5, 0.3), 0.0, 1.0, 1e-12);
  CHECK(e(0) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("flow leaves the chart through a pole cap") {
  auto S = PhaseDomain::sphere();
  // theta-dependent field pushing z upward: z' = -dH/dtheta = 1
  Hamiltonian H(S, [](double, const Vec& x) { return -x(0); });
  Vec x0 = v2(0.2, 0.5);
  try {
    flow_map(H, x0, 0.0, 1.0);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(e.last_valid_time() <= 0.5 + 1e-6);
    CHECK(e.last_valid_time() > 0.3);
  }
  CHECK_THROWS_AS(symplectic_gradient(H, 0.0, v2(0.0, 1.0)), ChartError);
  CHECK_THROWS_AS(symplectic_gradient(H, 0.0, v2(0.0, 1.5)), DomainError);
}

TEST_CASE("energy conservation and reversibility") {
  Hamiltonian H(PhaseDomain::euclidean(2), [](double, const Vec& x) {
    return 0.5 * x(1) * x(1) - std::cos(x(0)) + 0.1 * x(0) * x(1);
  });
  H = H.with_autonomous();
  const double tol = 1e-10;
  Vec x0 = v2(0.7, -0.4);
  auto tr = flow(H, x0, 0.0, 3.0, tol);
  double e0 = H(0, x0);
  double drift = 0;
  for (const auto& x : tr.x) drift = std::max(drift, std::abs(H(0, x) - e0));
  CHECK(drift < 1e-8);
  auto G = wavy_H();
  Vec y = flow_map(G, x0, 0.0, 1.0, tol);
  Vec back = flow_map(G, y, 1.0, 0.0, tol);
  CHECK((back - x0).norm() < 10 * tol * 10);
}

TEST_CASE("compose_hamiltonians") {
  auto d = PhaseDomain::euclidean(2);
  auto H = wavy_H();
  auto Z = Hamiltonian::zero(d);
  auto id = identity_isotopy(d);
  Vec x = v2(0.2, 0.1);
  CHECK(compose_hamiltonians(Z, H, id)(0.4, x) == doctest::Approx(H(0.4, x)));
  CHECK(compose_hamiltonians(H, Z, flow_isotopy(H))(0.4, x) == doctest::Approx(H(0.4, x)));

  // two rotations about the origin: the composite generator is their sum
  auto A = quadratic_rotation(1.0), B = quadratic_rotation(0.5);
  auto psi = flow_isotopy(A, 1e-12), phi = flow_isotopy(B, 1e-12);
  auto K = compose_hamiltonians(A, B, psi);
  for (double t : {0.1, 0.6}) CHECK(K(t, x) == doctest::Approx(A(t, x) + B(t, x)).epsilon(1e-10));

  // generic pair: flow of the composite equals Psi_t o phi_t
  auto comp = compose(flow_isotopy(wavy_G(), 1e-12), flow_isotopy(H, 1e-12));
  auto KH = comp->generator();
  for (Vec p : {v2(0.3, -0.2), v2(-0.5, 0.4)}) {
    Vec a = flow_map(KH, p, 0.0, 0.7, 1e-10);
    Vec b = comp->forward(0.7, p);
    CHECK((a - b).norm() < 1e-6);
  }
}

TEST_CASE("time-one family generator matches the time derivative of the maps") {
  // A_t = chi(|x|) (J v(t) . x): translation by v(t) near the origin.
  auto d = PhaseDomain::euclidean(2);
  auto v = [](double t) { return v2(0.1 * std::sin(kTwoPi * t), 0.05 * (1 - std::cos(kTwoPi * t))); };
  Plateau chi{0.5, 0.8};
  Hamiltonian A(d, [&](double t, const Vec& x) { return chi(x.norm()) * apply_J(v(t)).dot(x); });
  A = A.with_support({Vec::Zero(2), 0.8, 0.0});
  TimeOneFamily psi(A, 1e-12);
  Vec x = v2(0.1, 0.2);
  CHECK((psi.forward(0.3, x) - (x + v(0.3))).norm() < 1e-10);
  CHECK((psi.inverse(0.3, x) - (x - v(0.3))).norm() < 1e-10);
  // d/dt psi_t(y) = X_F(psi_t(y)) at a point in the transition zone
  Vec y = v2(0.55, 0.2);
  double t = 0.37, h = 1e-5;
  Vec vel = (psi.forward(t + h, y) - psi.forward(t - h, y)) / (2 * h);
  Vec X = symplectic_gradient(psi.generator(), t, psi.forward(t, y));
  CHECK((vel - X).norm() < 1e-5);
}

TEST_CASE("quadrature and root finding") {
  auto& g = gauss_legendre(12);
  double s = 0;
  for (int i = 0; i < 12; ++i) s += g.w[i] * std::pow(g.x[i], 10);
  CHECK(s == doctest::Approx(2.0 / 11));
  auto grid = TimeGrid::with_breakpoints(16, {0.31, 0.33}, 0.0, 1.0);
  std::vector<double> ones(grid.t.size(), 1.0), sq;
  for (double t : grid.t) sq.push_back(t * t);
  CHECK(grid.integrate(ones) == doctest::Approx(1.0));
  CHECK(grid.integrate(sq) == doctest::Approx(1.0 / 3));
  CHECK(brent_root([](double x) { return std::cos(x) - x; }, 0, 1) ==
        doctest::Approx(0.7390851332151607).epsilon(1e-13));
  auto m = nelder_mead([](const Vec& x) { return std::pow(x(0) - 1, 2) + 10 * std::pow(x(1) + 0.5, 2); },
                       v2(0, 0));
  CHECK(m.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.x(1) == doctest::Approx(-0.5).epsilon(1e-6));
}
