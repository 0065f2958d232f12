#include "bell_lab/fringe_fit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace bell_lab {

FringeFit fit_fringe(const Fringe& points) {
  const Eigen::Index n = points.size();
  if (points.value.size() != n) throw DomainError("fringe angle/value size mismatch");
  if (n < 4) throw DomainError("fringe fit needs at least 4 points");
  if (!points.angle_deg.allFinite() || !points.value.allFinite() || (points.value < 0).any())
    throw DomainError("fringe fit needs finite angles and non-negative values");

  const double lo = points.angle_deg.minCoeff();
  const double hi = points.angle_deg.maxCoeff();
  if (hi == lo) throw DegenerateInputError("fringe fit design is singular: all angles identical");
  if (hi - lo < 90.0) throw DomainError("fringe fit needs points spanning at least 90 degrees");

  // A cos^2(t - phi) + B = (B + A/2) + (A/2) cos 2phi cos 2t + (A/2) sin 2phi sin 2t
  const Eigen::ArrayXd two_t = points.angle_deg * (std::numbers::pi / 90.0);
  Eigen::MatrixXd design(n, 3);
  design.col(0).setOnes();
  design.col(1) = two_t.cos().matrix();
  design.col(2) = two_t.sin().matrix();
  const Eigen::ArrayXd weight = 1.0 / points.value.max(1.0);

  const Eigen::MatrixXd wd = design.array().colwise() * weight;
  const Eigen::Matrix3d normal = design.transpose() * wd;
  const Eigen::Vector3d rhs = wd.transpose() * points.value.matrix();
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-12 * normal.trace()).all())
    throw DegenerateInputError("fringe fit design is singular");
  const Eigen::Vector3d c = ldlt.solve(rhs);
  const Eigen::Matrix3d cov = ldlt.solve(Eigen::Matrix3d::Identity());

  const double half_amp = std::hypot(c(1), c(2));
  FringeFit fit{};
  fit.amplitude = 2.0 * half_amp;
  fit.offset = c(0) - half_amp;
  double phase = 0.5 * std::atan2(c(2), c(1)) * 180.0 / std::numbers::pi;
  fit.phase_deg = AnalyzerAngle::reduce(phase);
  if (!(c(0) > 0)) throw DegenerateInputError("fringe fit has non-positive mean level");
  // A / (A + 2B) = half_amp / c0
  fit.visibility = half_amp / c(0);
  Eigen::Vector3d grad(-half_amp / (c(0) * c(0)), 0.0, 0.0);
  if (half_amp > 0) grad.tail<2>() = c.tail<2>() / (half_amp * c(0));
  fit.sigma_visibility = std::sqrt(std::max(0.0, grad.dot(cov * grad)));

  const Eigen::ArrayXd resid = points.value - (design * c).array();
  fit.chi2 = (resid.square() * weight).sum();
  fit.dof = static_cast<int>(n - 3);
  return fit;
}

}  // namespace bell_lab
