#pragma once

#include "hoferlab/core/types.hpp"

#include <functional>
#include <vector>

namespace hoferlab::core {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// n-point Gauss-Legendre rule (Newton iteration on P_n), cached per n.
const GaussRule& gauss_legendre(int n);

// Legendre polynomials P_0..P_n at x.
void legendre_values(int n, double x, std::vector<double>& p);

// Integral of f over [a, b] with a composite Gauss rule of `panels` panels.
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order = 16,
                       int panels = 1);

// Composite Simpson weights for nodes[0..m] with m even and uniform spacing.
std::vector<double> simpson_weights(int m, double a, double b);

// Time grid with forced breakpoints: each piece between consecutive
// breakpoints gets an even number of uniform subintervals (at least
// `min_per_piece`), with overall spacing close to 1/`base` of [a, b].
struct TimeGrid {
  std::vector<double> t;
  std::vector<double> w;  // quadrature weights (piecewise Simpson)
  static TimeGrid uniform(int intervals, double a = 0.0, double b = 1.0);
  static TimeGrid with_breakpoints(int base, std::vector<double> breaks, double a = 0.0,
                                   double b = 1.0, int min_per_piece = 4);
  // Trapezoid weights on the same nodes.
  std::vector<double> trapezoid_weights() const;
  double integrate(const std::vector<double>& values) const;
};

}  // namespace hoferlab::core
