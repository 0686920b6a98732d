#pragma once

#include "hoferlab/hofer/extrema.hpp"

#include <string>
#include <vector>

namespace hoferlab::hofer {

struct FirstVariationReport {
  double value = 0.0;
  bool certified = false;  // unique nondegenerate extrema at every sampled t
  bool forced = false;
  std::vector<std::string> diagnostics;
  std::vector<double> t, integrand;
};

// int_0^1 (sup_{maxset H_t} G'_t - inf_{minset H_t} G'_t) dt, with G'_t = dG/dt.
// Without assume_continuity the result is only returned when the extremum
// sets are certified singletons with nondegenerate Hessians; otherwise Refusal.
FirstVariationReport first_variation(const IsotopyPath& path, const core::Hamiltonian& G,
                                     bool assume_continuity = false, double tol_ext = 1e-6);
FirstVariationReport first_variation(const IsotopyPath& path,
                                     const std::vector<SliceExtrema>& slices,
                                     const core::Hamiltonian& G, bool assume_continuity = false);

}  // namespace hoferlab::hofer
