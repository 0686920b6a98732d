#pragma once

#include "hoferlab/core/hamiltonian.hpp"

#include <cstddef>
#include <vector>

namespace hoferlab::hofer {

// Structured sample grid: a box in R^{2n} or a (theta, z) sphere grid whose
// z rows include both poles (each pole is a single node).
class SampleGrid {
 public:
  static SampleGrid box(Vec lo, Vec hi, std::vector<int> points_per_axis);
  static SampleGrid square(double half_width, int n, const Vec& center);
  static SampleGrid sphere(int n_theta, int n_z);

  bool is_sphere() const { return sphere_; }
  std::size_t size() const { return size_; }
  Vec node(std::size_t i) const;
  void neighbors(std::size_t i, std::vector<std::size_t>& out) const;
  // Chebyshev distance in index space (theta periodic, poles by row).
  int cell_distance(std::size_t i, std::size_t j) const;
  std::size_t nearest(const Vec& x) const;
  bool covers(const Vec& x) const;
  // Largest grid step (theta step measured in radians).
  double spacing() const;
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }
  // Same region, `factor` times as many intervals per axis.
  SampleGrid refined(int factor) const;

 private:
  std::vector<int> index(std::size_t i) const;  // sphere: (row, col)
  bool sphere_ = false;
  Vec lo_, hi_;
  std::vector<int> n_;
  std::size_t size_ = 0;
  int n_theta_ = 0, n_z_ = 0;
};

// One or more grids; the first is the primary grid used for extremum sets,
// the others only sharpen sup/inf. Local optimization refines the best nodes.
struct Sampling {
  std::vector<SampleGrid> grids;
  bool refine = true;
  int starts = 3;
  double refine_xtol = 1e-10;
  int refine_evaluations = 600;

  static Sampling single(SampleGrid g) { return Sampling{{std::move(g)}}; }
  Sampling refined(int factor) const;
  const SampleGrid& primary() const;
};

struct Optimum {
  Vec x;
  double value;
};

// Everything one time slice of a sampling pass produces.
struct SliceScan {
  double t = 0.0;
  std::vector<std::vector<double>> values;  // per grid
  double sup = 0.0, inf = 0.0;
  Vec argsup, arginf;
  std::vector<Optimum> maxima, minima;  // refined local optima
};

SliceScan scan_slice(const core::Hamiltonian& H, double t, const Sampling& s);

struct TotVarResult {
  double sup = 0.0, inf = 0.0;
  Vec argsup, arginf;
  double value() const { return sup - inf; }
};

// sup - inf over the sampling, refined by local optimization from the best
// grid cells.
TotVarResult total_variation(const core::Hamiltonian& H, double t, const Sampling& s);

}  // namespace hoferlab::hofer
