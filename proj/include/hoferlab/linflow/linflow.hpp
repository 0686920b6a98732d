#pragma once

#include "hoferlab/core/types.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hoferlab::hofer {
struct IsotopyPath;
}

namespace hoferlab::linflow {

// t -> B_t, the Hessians of the quadratic jets H~_t(x) = x.B_t x / 2.
struct HessianPath {
  std::function<Mat(double)> B;
  int dim = 2;
  bool minimum = true;

  static HessianPath constant(const Mat& B0, bool minimum = true);
  static HessianPath scalar(double c, int dim = 2);
  Mat operator()(double t) const { return B(t); }
  HessianPath scaled(double lambda) const;
  // max over the given times of |B - B^T| / max(1, |B|)
  double asymmetry(int samples = 64) const;
};

// B_t = R(theta(t)) diag(a(t), b(t)) R(theta(t))^T with a, b >= floor > 0
// smooth random trigonometric profiles.
HessianPath random_positive_path(std::mt19937& rng, double scale = 4.0 * kPi, double floor = 0.5);

enum class Integrator { rk45, implicit_midpoint };

struct FundamentalOptions {
  double tol = 1e-12;
  Integrator method = Integrator::rk45;
  int midpoint_steps = 2000;
  int samples = 0;  // extra uniform output times in (0, t'], 0 for endpoint only
};

struct Monodromy {
  std::vector<double> t;
  std::vector<Mat> L;
  double symplectic_defect = 0.0;  // max |L^T J L - J| over stored times
  const Mat& final() const { return L.back(); }
};

Monodromy fundamental_solution(const HessianPath& B, double tprime,
                               const FundamentalOptions& opt = {});
// L_{t1} from L_{t0} (continuing a solution).
Mat propagate(const HessianPath& B, const Mat& L0, double t0, double t1,
              const FundamentalOptions& opt = {});
double symplectic_defect(const Mat& L);

struct Closure {
  double t = 0.0;  // closing time t' (or lambda)
  Vec x;           // unit fixed vector
  double residual = 0.0;  // |L x - x|
  int multiplicity = 1;   // dim ker(L - I) on the nonstationary part
};

struct ClosureOptions {
  int scan = 512;
  double tol_eig = 1e-8;
  double tol_mult = 1e-6;  // singular values counted into the multiplicity
  double tol = 1e-12;      // integration tolerance
};

// Vectors fixed by L_t at every scanned t (constant trajectories).
Mat stationary_subspace(const std::vector<Mat>& L, double tol = 1e-9);

// All closures with t' in (0, t_max], ascending.
std::vector<Closure> find_closures(const HessianPath& B, double t_max,
                                   const ClosureOptions& opt = {});
// Smallest t' in the open interval (0, t_max).
std::optional<Closure> closed_trajectory_in_time(const HessianPath& B, double t_max,
                                                 const ClosureOptions& opt = {});

struct LambdaConjugate {
  double lambda = 0.0;
  Vec x;
  double residual = 0.0;
  std::vector<double> t;
  std::vector<Vec> alpha;  // alpha(t) = L^lambda_t x, closed up to `residual`
  Vec alpha_at(double t) const;  // cubic Hermite interpolation
  Vec alpha_dot_at(double t) const;
  HessianPath B;  // the unscaled path, for derivatives of alpha
};

std::optional<LambdaConjugate> lambda_conjugate(const HessianPath& B,
                                                const ClosureOptions& opt = {},
                                                int trajectory_samples = 512);

// Largest clockwise angle swept by L_t r over sampled rays r.
double rotation_number_2d(const HessianPath& B, double tprime, int rays = 64, int steps = 2048);

struct ExtremumEvidence {
  bool is_minimum = true;
  Vec point;
  std::optional<Closure> closure;
};

struct StabilityReport {
  std::vector<ExtremumEvidence> evidence;
  bool pass = false;
};

// Hessian family of the path at a fixed extremum, by central differences in
// a symplectic chart (pole charts at the sphere poles).
HessianPath hessian_path_at(const hofer::IsotopyPath& path, const Vec& point, double h = 1e-4);

StabilityReport stability_necessary_check(const hofer::IsotopyPath& path, double tol_ext = 1e-6,
                                          const ClosureOptions& opt = {});

}  // namespace hoferlab::linflow
