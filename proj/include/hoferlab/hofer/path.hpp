#pragma once

#include "hoferlab/core/flow.hpp"
#include "hoferlab/core/quadrature.hpp"
#include "hoferlab/hofer/sampling.hpp"

#include <vector>

namespace hoferlab::hofer {

enum class TimeQuadrature { simpson, trapezoid };

// A path phi_t, t in [0, 1], given by its generating Hamiltonian plus the
// discretization used to measure it.
struct IsotopyPath {
  core::Hamiltonian H;
  core::TimeGrid grid = core::TimeGrid::uniform(64);
  Sampling sampling;
  double tol = 1e-10;
  TimeQuadrature quadrature = TimeQuadrature::simpson;
  std::vector<Vec> cloud;  // points whose trajectories are tracked
  std::vector<core::Trajectory> trajectories;  // filled by track(), on grid times

  const core::PhaseDomain& domain() const { return H.domain(); }
  // Flows every cloud point through the grid times.
  void track();
  // Per grid time: sup over the tracked cloud of |X_{H_t}|.
  std::vector<double> speed_profile() const;
  // Regular iff the speed profile stays above `floor` at every grid time.
  bool regular(double floor = 1e-8) const;
  std::vector<double> weights() const;
};

struct LengthReport {
  double length = 0.0;
  std::vector<double> t;
  std::vector<double> totvar;
};

LengthReport hofer_length(const IsotopyPath& path);

}  // namespace hoferlab::hofer
