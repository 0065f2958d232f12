#include "bell_lab/qm_model.hpp"

namespace bell_lab {

double singles_rate(const EntangledState<double>& state, const AnalyzerAngle& theta, int arm,
                    const PolarizerModel<double>& pol, const DetectionModel& det,
                    double noise_mix) {
  det.validate();
  const auto i = PolarizerModel<double>::index(arm);
  // The opposite arm is transparent, so the joint probability reduces to the marginal.
  const double p = arm == 1 ? mixed_pass_probability(state, theta, AnalyzerAngle::absent(), pol, noise_mix)
                            : mixed_pass_probability(state, AnalyzerAngle::absent(), theta, pol, noise_mix);
  return det.pair_rate * det.eta[i] * p + det.dark[i];
}

double coincidence_rate(const EntangledState<double>& state, const AnalyzerAngle& theta1,
                        const AnalyzerAngle& theta2, const PolarizerModel<double>& pol,
                        const DetectionModel& det, double noise_mix) {
  det.validate();
  const double s1 = singles_rate(state, theta1, 1, pol, det, noise_mix);
  const double s2 = singles_rate(state, theta2, 2, pol, det, noise_mix);
  if (det.window * s1 >= 1.0 || det.window * s2 >= 1.0)
    throw SaturationError("coincidence window saturated: window * singles rate >= 1");
  const double p = mixed_pass_probability(state, theta1, theta2, pol, noise_mix);
  return det.pair_rate * det.eta[0] * det.eta[1] * p + s1 * s2 * det.window;
}

Fringe fringe_scan(const EntangledState<double>& state, const AnalyzerAngle& theta_fixed,
                   int arm_fixed, const PolarizerModel<double>& pol, int n_points) {
  if (n_points < 3) throw DomainError("fringe scan needs at least 3 points");
  if (theta_fixed.is_absent()) throw DomainError("fringe scan needs a numeric fixed angle");
  PolarizerModel<double>::index(arm_fixed);

  Fringe out;
  out.angle_deg = Eigen::ArrayXd::LinSpaced(n_points, 0.0, 180.0 * (n_points - 1) / n_points);
  out.value.resize(n_points);
  for (Eigen::Index k = 0; k < n_points; ++k) {
    const AnalyzerAngle scanned(out.angle_deg(k));
    out.value(k) = arm_fixed == 1 ? joint_pass_probability(state, theta_fixed, scanned, pol)
                                  : joint_pass_probability(state, scanned, theta_fixed, pol);
  }
  return out;
}

double visibility(const Fringe& fringe) {
  if (fringe.size() < 3) throw DomainError("visibility needs at least 3 points");
  if ((fringe.value < 0).any() || !fringe.value.allFinite())
    throw DomainError("fringe values must be finite and non-negative");
  const double hi = fringe.value.maxCoeff();
  const double lo = fringe.value.minCoeff();
  if (hi + lo <= 0) throw DegenerateInputError("visibility undefined for an all-zero fringe");
  return (hi - lo) / (hi + lo);
}

}  // namespace bell_lab
