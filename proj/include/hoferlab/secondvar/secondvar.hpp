#pragma once

#include "hoferlab/linflow/linflow.hpp"

#include <functional>
#include <vector>

namespace hoferlab::secondvar {

enum class Basis { legendre, sine };

// A loop g: [0, T] -> R^{2n} with g(0) = g(T) = 0.
// legendre: coefficients of phi_k = P_{k+1}(x) - P_{k-1}(x), x = 2t/T - 1
// sine:     coefficients of sin(k pi t / T)
// samples:  M + 1 uniform values, piecewise linear
// analytic: value and derivative callbacks
class TangentLoop {
 public:
  enum class Kind { legendre, sine, samples, analytic };

  static TangentLoop from_coefficients(Basis b, Mat coeffs, double T = 1.0);
  static TangentLoop from_samples(std::vector<Vec> samples, double T = 1.0);
  static TangentLoop analytic(std::function<Vec(double)> g, std::function<Vec(double)> dg,
                              int dim, double T = 1.0);
  static TangentLoop zero(int dim, double T = 1.0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double period() const { return T_; }
  Vec value(double t) const;
  Vec derivative(double t) const;
  const Mat& coefficients() const { return coeffs_; }
  // max of |g(0)|, |g(T)|
  double end_gap() const;
  TangentLoop reversed() const;
  TangentLoop scaled(double c) const;

 private:
  Kind kind_ = Kind::analytic;
  int dim_ = 2;
  double T_ = 1.0;
  Mat coeffs_;
  std::vector<Vec> samples_;
  std::function<Vec(double)> f_, df_;
};

// L^2 projection onto the first N basis loops on [0, T].
TangentLoop project(const TangentLoop& g, Basis b, int N);

// 1/2 int (J g) . g' dt
double loop_area(const TangentLoop& g, int panels = 32);

struct QValue {
  double value = 0.0;
  double kinetic = 0.0;  // int (B^{-1} g') . g'
  double area_term = 0.0;  // +- int (J g) . g'
  double max_condition = 0.0;
};

// sign = +1 at a minimum, -1 at a maximum. Refuses singular B_t.
QValue q_functional(const linflow::HessianPath& B, const TangentLoop& g, int sign = 1,
                    int panels = 32);
double second_variation_contribution(const linflow::HessianPath& B, const TangentLoop& g,
                                     int sign = 1, int panels = 32);

struct QFormOptions {
  int N = 64;
  Basis basis = Basis::legendre;
  double tol_null = 1e-6;
  bool check_refinement = true;  // repeat at 2N and compare (index, nullity)
  bool vectors = true;
};

struct QFormReport {
  int index = 0, nullity = 0, positive = 0;
  int N = 0;
  Basis basis = Basis::legendre;
  double tprime = 1.0;
  double scale = 0.0;  // (pi/t')^2 max|B^{-1}|, the lowest kinetic mode
  std::vector<double> smallest;  // 5 smallest eigenvalues
  std::vector<double> eigenvalues;
  std::vector<TangentLoop> null_vectors;
  std::vector<Vec> coefficient_vectors;  // matching eigenvectors (basis coordinates)
  bool refined = false;
  bool refinement_agrees = true;
  int refined_index = 0, refined_nullity = 0;
};

QFormReport q_form_matrix(const linflow::HessianPath& B, double tprime, int sign = 1,
                          const QFormOptions& opt = {});

// Matrices of Q and of the L^2 mass in the chosen basis on [0, t'].
struct QMatrices {
  Mat Q, M;
  double scale = 0.0;
};
QMatrices assemble(const linflow::HessianPath& B, double tprime, int sign, int N, Basis basis);
// Rayleigh quotient of Q at a coefficient vector (integral normalization).
double q_of_coefficients(const QMatrices& m, const Vec& c);

struct NullCheck {
  double residual = 0.0;  // sup_t |g' - B_t(-J g + c)| for g scaled to sup norm 1
  Vec c;
};

NullCheck nullspace_trajectory_check(const linflow::HessianPath& B, double tprime,
                                     const TangentLoop& g, int samples = 401);

struct ConjugateValue {
  double t = 0.0;
  int nullity = 0;
  int index_before = 0, index_after = 0;
};

struct ConjugateScan {
  std::vector<double> t;
  std::vector<int> index, nullity;
  std::vector<ConjugateValue> values;
  bool index_monotone = true;
  bool jumps_match_nullity = true;
};

struct ScanOptions {
  int scan = 512;
  double t_max = 1.0;
  int N = 64;
  Basis basis = Basis::legendre;
  double tol_null = 1e-6;
  int sign = 1;
};

ConjugateScan conjugate_values(const linflow::HessianPath& B, const ScanOptions& opt = {});

}  // namespace hoferlab::secondvar
