#pragma once

#include "hoferlab/core/types.hpp"

#include <functional>
#include <vector>

namespace hoferlab::core {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: unbounded
  long max_steps = 2'000'000;
};

using OdeRhs = std::function<void(double t, const Vec& x, Vec& dx)>;
// Called after every accepted step; returning false aborts integration with
// an IntegrationError carrying the last accepted time.
using OdeObserver = std::function<bool(double t, const Vec& x)>;

struct OdeSolution {
  std::vector<double> t;
  std::vector<Vec> x;
  long rejected = 0;
};

// Dormand-Prince 5(4) with PI step control. t1 < t0 integrates backwards.
// If `dense` is null only the endpoint is kept.
Vec integrate(const OdeRhs& f, double t0, double t1, const Vec& x0, const OdeOptions& opt,
              OdeSolution* dense = nullptr, const OdeObserver& observer = nullptr);

}  // namespace hoferlab::core
