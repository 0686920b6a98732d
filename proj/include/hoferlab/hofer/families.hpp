#pragma once

#include "hoferlab/core/hamiltonian.hpp"

namespace hoferlab::hofer {

// H_t = w(t) z on the sphere (zonal, pole regular).
core::Hamiltonian sphere_height(std::function<double(double)> w = nullptr,
                                std::function<double(double)> dw = nullptr);

// Two peaks of radius R at (-1, 0) and (1, 0) whose heights trade places at
// t = switch_time: w1 = 1 + s/2, w2 = 1 - s/2, s = tanh((switch_time - t)/width).
struct TwoBumpFamily {
  double R = 0.5;
  double switch_time = 1.0 / 3.0;
  double width = 0.05;
  Vec c1() const;
  Vec c2() const;
  double w1(double t) const;
  double w2(double t) const;
  core::Hamiltonian hamiltonian() const;
};

// Peak at c1 blending into a flat-topped plateau for t in [plateau_a,
// plateau_b] (ramps of length `ramp` on either side), minus a well at c2.
struct PlateauFamily {
  double plateau_a = 0.4, plateau_b = 0.6, ramp = 0.1;
  double R = 0.6;
  double s(double t) const;
  core::Hamiltonian hamiltonian() const;
};

// Autonomous radial well H = g(|x - c|^2) with g(s) = slope * s for s <= s1,
// a C^2 quartic easing on [s1, s2] and the plateau slope * (s1 + (s2 - s1)/2)
// beyond. With slope 2 pi the Hessian at c is 4 pi I.
core::Hamiltonian saturated_well(double s1 = 0.25, double s2 = 0.5, double slope = kTwoPi,
                                 Vec center = Vec::Zero(2));

// H = C (1 - exp(-|x - c|^2 / r0^2)): min 0 at c, sup C.
core::Hamiltonian gaussian_well(double C, double r0, Vec center = Vec::Zero(2));

}  // namespace hoferlab::hofer
