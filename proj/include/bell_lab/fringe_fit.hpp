#pragma once

#include "bell_lab/qm_model.hpp"

namespace bell_lab {

/// Fit of A cos^2(theta - phase) + B.
struct FringeFit {
  double amplitude;   // A
  double offset;      // B
  double phase_deg;   // in [0, 180)
  double visibility;  // A / (A + 2B)
  double sigma_visibility;
  double chi2;
  int dof;
};

/// Poisson-weighted linear least squares in the basis {1, cos 2θ, sin 2θ}.
/// Needs at least 4 points spanning 90 degrees or more.
FringeFit fit_fringe(const Fringe& points);

}  // namespace bell_lab
