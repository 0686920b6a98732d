#include "hoferlab/core/structures.hpp"

#include <cmath>

namespace hoferlab::core {

Mat standard_J(int dim) {
  Mat J = Mat::Zero(dim, dim);
  for (int i = 0; i + 1 < dim; i += 2) {
    J(i + 1, i) = 1.0;
    J(i, i + 1) = -1.0;
  }
  return J;
}

Vec apply_J(const Vec& u) {
  Vec r(u.size());
  for (Eigen::Index i = 0; i + 1 < u.size(); i += 2) {
    r(i) = -u(i + 1);
    r(i + 1) = u(i);
  }
  return r;
}

double omega0(const Vec& u, const Vec& v) { return apply_J(u).dot(v); }

Mat rotation2(double a) {
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

}  // namespace hoferlab::core
