#pragma once

#include "hoferlab/core/hamiltonian.hpp"

namespace hoferlab::core {

// Quintic smoothstep: 0 below 0, 1 above 1, C^2 at both ends.
double smoothstep(double u);
double smoothstep_d(double u);
double smoothstep_dd(double u);
// int_0^u smoothstep (u - 1/2 beyond 1).
double smoothstep_integral(double u);

// 1 on [0, r_in], smoothstep down to 0 at r_out.
struct Plateau {
  double r_in = 0.0;
  double r_out = 1.0;
  double operator()(double r) const;
  double d(double r) const;  // derivative in r
};

// Smooth ramp from 0 (t <= a) to 1 (t >= b).
double ramp(double t, double a, double b);
double ramp_d(double t, double a, double b);

// height * Plateau(|x - center|); analytic gradient; support ball r_out.
Hamiltonian plateau_bump(const Vec& center, double r_in, double r_out, double height);

// height * (1 - |x-c|^2/R^2)^3 inside the ball of radius R: C^2, unique
// maximum at c with Hessian -6 height / R^2.
Hamiltonian peak_bump(const Vec& center, double R, double height);
double peak_profile(double r, double R);
double peak_profile_d(double r, double R);

}  // namespace hoferlab::core
