#pragma once

#include "hoferlab/core/isotopy.hpp"
#include "hoferlab/hofer/path.hpp"
#include "hoferlab/linflow/linflow.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace hoferlab::shortening {

// 1 on [a, b], smoothstep ramps on [a - r, a] and [b, b + r]; the integral
// is available in closed form so reparametrizations stay exact.
struct Pulse {
  double a = 0.0, b = 0.0, r = 0.0;
  double value(double t) const;
  double integral(double t) const;  // from -infinity to t
  double total() const { return (b - a) + r; }
};

enum class PlanKind { no_fixed_max, no_fixed_min, sikorav, scrubbing, annulus };

const char* to_string(PlanKind k);

struct BumpSpec {
  Vec center;
  double r_in = 0.0, r_out = 0.0;
  double height = 0.0;  // signed value on the core
  int window = 0;       // index j of the time t_j where the bump is undone
};

struct ShorteningPlan {
  PlanKind kind = PlanKind::no_fixed_max;
  // no fixed extremum
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<BumpSpec> bumps;
  // Sikorav
  double c = 0.0;
  double tau_norm = 0.0;
  // scrubbing and annulus
  Vec p;
  double delta = 0.0, rho = 0.0, lambda = 0.0, xi = 0.0;
  std::vector<std::string> provenance;
};

struct ShorteningResult {
  ShorteningPlan plan;
  double original_length = 0.0;
  double new_length = 0.0;
  double margin = 0.0;  // original - new
  double endpoint_discrepancy = 0.0;
  double endpoint_tolerance = 1e-4;
  hofer::IsotopyPath path;  // the deformed path
  std::vector<double> t, old_totvar, new_totvar;
  std::map<std::string, double> metrics;
  std::vector<std::string> diagnostics;

  bool shorter() const { return new_length < original_length; }
  bool endpoints_match() const { return endpoint_discrepancy <= endpoint_tolerance; }
  bool accepted() const { return shorter() && endpoints_match(); }
};

// Refusal carrying the largest admissible epsilon found by halving.
class EpsilonRefusal : public Refusal {
 public:
  EpsilonRefusal(const std::string& what, double admissible)
      : Refusal(what), admissible_(admissible) {}
  double admissible() const { return admissible_; }

 private:
  double admissible_;
};

// sup over the cloud of |phi^new_1(x) - phi^old_1(x)|; the flows are
// integrated piecewise between the breakpoints.
double endpoint_discrepancy(const core::Hamiltonian& old_H, const core::Hamiltonian& new_H,
                            const std::vector<Vec>& cloud, double tol,
                            const std::vector<double>& breaks = {});

// ---------------------------------------------------------------- no fixed extremum

struct NoFixedOptions {
  double depth = 0.2;          // bump depth c
  double ramp_fraction = 0.1;  // ramp width of the time windows, in units of eps
  int time_base = 64;
  int window_samples = 5;  // slices checked per window for admissibility
  double tol_ext = 1e-6;
  double endpoint_tol = 1e-4;
  std::vector<Vec> cloud;  // extra endpoint points; rings around the bumps are always used
};

ShorteningResult shorten_no_fixed_max(const hofer::IsotopyPath& path,
                                      const std::vector<double>& times, double nu,
                                      double delta_bump, double eps,
                                      const NoFixedOptions& opt = {});
ShorteningResult shorten_no_fixed_min(const hofer::IsotopyPath& path,
                                      const std::vector<double>& times, double nu,
                                      double delta_bump, double eps,
                                      const NoFixedOptions& opt = {});

// ---------------------------------------------------------------- Sikorav

// Autonomous T = chi(|x - m|) (J v).(x - m) around the midpoint m = center + v/2;
// its time-one map translates every point whose segment to x + v stays in
// the plateau of radius `radius` around m.
struct Translation {
  Vec v;
  Vec center;
  double radius = 0.0;
  core::Hamiltonian T;
  double norm = 0.0;  // measured TotVar of T
};

Translation make_translation(const Vec& v, const Vec& center, double reach);

struct SikoravOptions {
  int refine = 10;       // refinement factor of the verification grid
  int check_times = 9;   // slices checked for min/max of G
  double check_tol = 1e-6;
  int time_base = 16;
  double endpoint_tol = 1e-4;
  std::vector<Vec> cloud;
};

ShorteningResult sikorav_shorten(const hofer::IsotopyPath& path, double c, const Translation& tau,
                                 const SikoravOptions& opt = {});

// ---------------------------------------------------------------- scrubbing

using LoopFn = std::function<Vec(double)>;

// psi_t = time-one map of A_t = chi(|x - p|) (J v(t)).(x - p), v = rho (alpha(t) - alpha(0)):
// translation by v(t) on D(2 delta), identity off D(3 delta).
struct TranslationLoop {
  Vec p;
  double delta = 0.1;
  double rho = 0.01;
  LoopFn alpha, alpha_dot;

  Vec c() const { return alpha(0.0); }
  Vec v(double t) const;
  Vec v_dot(double t) const;
  core::Hamiltonian family() const;  // A_t
  core::TimeOneFamily isotopy(double tol = 1e-12) const;
};

struct LemmaZOptions {
  int n_t = 64;   // trapezoid nodes in t
  int n_s = 256;  // midpoint nodes on the arc
  double h = 0.0; // finite-difference step in t (0: 1 / (4 n_t))
  double tol = 1e-12;
};

struct LemmaZReport {
  double flux = 0.0;       // int z dt through the line integral
  double generator = 0.0;  // int F_t(p) dt from the generator, for comparison
  double area = 0.0;
  double residual = 0.0;   // relative (absolute when the area vanishes)
};

LemmaZReport verify_lemma_z(const TranslationLoop& loop, const LemmaZOptions& opt = {});

struct LemmaLambdaOptions {
  double delta = 0.1;
  int n_t = 64;
  int grid = 41;  // brute-force grid on D(delta)
  double tol = 1e-12;
};

struct LemmaLambdaReport {
  double lhs = 0.0;                 // int min K~ dt
  double rhs_alpha0 = 0.0;          // (1 - l) l rho^2 int H~(alpha0)
  double rhs_alpha = 0.0;           // (1 - l) l rho^2 int H~(alpha)
  double residual_alpha0 = 0.0;
  double residual_alpha = 0.0;
  double minimizer_error = 0.0;     // max_t distance of the argmin set to p(t)
  double minimizer_relative = 0.0;  // divided by rho max |alpha0|
};

LemmaLambdaReport verify_lemma_lambda(const linflow::HessianPath& B, double lambda, LoopFn alpha,
                                      LoopFn alpha_dot, double rho,
                                      const LemmaLambdaOptions& opt = {});

struct SlowedLoop {
  double tprime = 1.0, eps = 0.0, kappa = 1.0;
  LoopFn alpha_bar, alpha_bar_dot;
  double f(double s) const;
  double df(double s) const;
  Vec alpha(double s) const { return alpha_bar(f(s)); }
  Vec alpha_dot(double s) const { return alpha_bar_dot(f(s)) * df(s); }
};

// f: [0, 1] -> [0, t'] identity on [0, t' - eps], smooth and monotone, f(1) = t'.
SlowedLoop slowdown_loop(LoopFn alpha_bar, LoopFn alpha_bar_dot, double tprime, double eps);

struct AnnulusOptions {
  bool maximum = false;
  int time_base = 64;
  int radii = 12, angles = 48;  // annulus sampling
  double endpoint_tol = 1e-4;
  std::vector<Vec> cloud;
};

// Makes the generator strictly positive (negative at a maximum) on
// D(4 delta) - D(delta/2) without changing length or endpoints.
ShorteningResult step1_annulus_positivity(const hofer::IsotopyPath& path, const Vec& p,
                                          double delta, double xi, double eps,
                                          const AnnulusOptions& opt = {});

// inf over sampled t and annulus points of s (H_t(x) - H_t(p)).
double annulus_margin(const core::Hamiltonian& H, const Vec& p, double r_in, double r_out,
                      const std::vector<double>& times, bool maximum, int radii = 12,
                      int angles = 48);

struct ScrubbingOptions {
  double rho = 0.0;  // 0: safety times the largest admissible rho
  double safety = 0.9;
  bool maximum = false;
  int time_base = 64;     // time grid intervals for the lengths
  int focus_points = 41;  // focused grid on D(4 delta)
  int min_samples = 64;   // intervals of the Step 4 profile
  double endpoint_tol = 1e-4;
  double tol = 1e-12;
  double xi = 0.05, eps_step1 = 0.0;  // Step 1 parameters if it is needed
  std::vector<Vec> cloud;
};

// The witness for the Hessian path of `path` at p, or a refusal.
linflow::LambdaConjugate scrubbing_witness(const hofer::IsotopyPath& path, const Vec& p,
                                           bool maximum = false);

ShorteningResult scrubbing_motion(const hofer::IsotopyPath& path, const Vec& p, double delta,
                                  const linflow::LambdaConjugate& witness,
                                  const ScrubbingOptions& opt = {});

}  // namespace hoferlab::shortening
