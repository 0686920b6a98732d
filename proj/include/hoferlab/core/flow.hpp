#pragma once

#include "hoferlab/core/hamiltonian.hpp"
#include "hoferlab/core/ode.hpp"

#include <utility>
#include <vector>

namespace hoferlab::core {

// Time-indexed points of one integral curve. Immutable once returned.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
  const Vec& endpoint() const { return x.back(); }
  std::size_t size() const { return t.size(); }
};

// X_H = -J grad H, i.e. omega_0(X, .) = dH. On the sphere this is the
// chart field for dtheta ^ dz; the poles themselves raise ChartError.
Vec symplectic_gradient(const Hamiltonian& H, double t, const Vec& x);

// {F, G} = grad F . J grad G. This sign makes the generator of
// eps -> phi_{eps G_t} o phi_t equal H + eps (G' + {-G, H}) to first order.
double poisson_bracket(const Hamiltonian& F, const Hamiltonian& G, double t, const Vec& x);

// Integral curve of X_H from (t0, x0) to t1 (t1 < t0 runs backwards).
Trajectory flow(const Hamiltonian& H, const Vec& x0, double t0, double t1, double tol = 1e-10);
// Endpoint only; avoids storing the curve. Sphere angles are not wrapped.
Vec flow_map(const Hamiltonian& H, const Vec& x0, double t0, double t1, double tol = 1e-10);

// Endpoint and Jacobian of the flow map from the variational equation;
// the Hessian is a central difference of the gradient. R^2n only.
std::pair<Vec, Mat> flow_map_jacobian(const Hamiltonian& H, const Vec& x0, double t0, double t1,
                                      double tol = 1e-10);

// The chart field without the pole guard, for integrators.
void vector_field(const Hamiltonian& H, double t, const Vec& x, Vec& out);

}  // namespace hoferlab::core
