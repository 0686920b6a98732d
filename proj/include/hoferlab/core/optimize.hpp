#pragma once

#include "hoferlab/core/types.hpp"

#include <functional>
#include <optional>

namespace hoferlab::core {

struct Min1D {
  double x;
  double f;
};

// Golden-section minimization on [a, b].
Min1D golden_minimize(const std::function<double(double)>& f, double a, double b, double xtol);

// Brent's method on a sign-change bracket; throws if f(a), f(b) share a sign.
double brent_root(const std::function<double(double)>& f, double a, double b, double xtol = 1e-14);

struct MinND {
  Vec x;
  double f;
  int evaluations = 0;
};

struct NelderMeadOptions {
  double initial_step = 1e-2;
  double xtol = 1e-10;
  double ftol = 1e-15;
  int max_evaluations = 2000;
  std::optional<Vec> lower, upper;  // box clamp
};

MinND nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                  const NelderMeadOptions& opt = {});

}  // namespace hoferlab::core
