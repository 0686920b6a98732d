#pragma once

#include "hoferlab/hofer/path.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace hoferlab::hofer {

// Grid nodes of the primary sampling grid lying within tol_ext * (sup - inf)
// of an extremal level, plus the nodes nearest to refined optima at that level.
struct ExtremumSet {
  double t = 0.0;
  double level = 0.0;
  std::vector<std::size_t> nodes;
  std::vector<Vec> points;
  std::vector<Vec> refined;  // local optimizer results at the level
  bool empty() const { return nodes.empty(); }
};

struct SliceExtrema {
  double t = 0.0;
  double range = 0.0;
  ExtremumSet minset, maxset;
};

SliceExtrema extremum_sets(const core::Hamiltonian& H, double t, const Sampling& s,
                           double tol_ext = 1e-6);
std::vector<SliceExtrema> path_extrema(const IsotopyPath& path, double tol_ext = 1e-6);

// Connected components under grid adjacency.
std::vector<std::vector<std::size_t>> clusters(const SampleGrid& g,
                                               const std::vector<std::size_t>& nodes);
// One cluster no wider than two cells.
bool is_singleton(const SampleGrid& g, const ExtremumSet& e);

struct FixedExtremaReport {
  double a = 0.0, b = 1.0;
  std::vector<std::size_t> min_nodes, max_nodes;
  std::vector<Vec> fixed_minima, fixed_maxima;
  bool has_min() const { return !fixed_minima.empty(); }
  bool has_max() const { return !fixed_maxima.empty(); }
  bool pass() const { return has_min() && has_max(); }
};

// Nodes lying (up to one cell) in every sampled extremum set with t in [a, b].
FixedExtremaReport fixed_extrema(const IsotopyPath& path, const std::vector<SliceExtrema>& slices,
                                 double a = 0.0, double b = 1.0);
FixedExtremaReport fixed_extrema(const IsotopyPath& path, double tol_ext = 1e-6);

struct WindowSpec {
  int count = 16;
  std::vector<double> breaks;  // explicit breakpoints 0 = s_0 < ... < s_m = 1, if set
  std::vector<std::pair<double, double>> windows() const;
};

struct GeodesicReport {
  std::vector<FixedExtremaReport> windows;
  bool pass = false;
};

GeodesicReport geodesic_check(const IsotopyPath& path, const std::vector<SliceExtrema>& slices,
                              const WindowSpec& spec = {});
GeodesicReport geodesic_check(const IsotopyPath& path, const WindowSpec& spec = {},
                              double tol_ext = 1e-6);

FixedExtremaReport lcritical_check(const IsotopyPath& path, double tol_ext = 1e-6);

struct SmoothPointReport {
  std::vector<double> t;
  std::vector<bool> singleton;  // both minset and maxset singletons
  double exceptional_fraction = 0.0;
  double threshold = 0.05;
  bool pass = false;
};

SmoothPointReport smooth_point_necessary_check(const IsotopyPath& path,
                                               const std::vector<SliceExtrema>& slices,
                                               double threshold = 0.05);
SmoothPointReport smooth_point_necessary_check(const IsotopyPath& path, double tol_ext = 1e-6,
                                               double threshold = 0.05);

// Hessian at x in a local chart (pole charts at the sphere poles).
Mat chart_hessian(const core::Hamiltonian& H, double t, const Vec& x, double h = 1e-4);
bool nondegenerate(const core::Hamiltonian& H, double t, const Vec& x, double scale,
                   double rel_tol = 1e-6);

}  // namespace hoferlab::hofer
