#pragma once

#include "hoferlab/core/types.hpp"

namespace hoferlab::core {

// J e_{2i-1} = e_{2i}, J e_{2i} = -e_{2i-1} (1-based), so J^2 = -1.
Mat standard_J(int dim);
Vec apply_J(const Vec& u);
// omega_0(u, v) = (J u) . v
double omega0(const Vec& u, const Vec& v);

// Chart rotation used for the sphere as well: (theta, z) is a Darboux chart
// for dtheta ^ dz, so the same J applies.
Mat rotation2(double angle);

}  // namespace hoferlab::core
