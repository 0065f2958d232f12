#include "bell_lab/bell_metrics.hpp"

#include <cmath>

namespace bell_lab {

double AnalyzerQuad::max_distance(const AnalyzerQuad& other) const {
  const Eigen::Array4d d = (angles_ - other.angles_).array().abs();
  return d.min(180.0 - d).maxCoeff();
}

CountsSextet::CountsSextet(const Vector6d& values, std::optional<Vector6d> sigma)
    : values_(values), sigma_(std::move(sigma)) {
  if (!values_.allFinite() || (values_.array() < 0).any())
    throw DomainError("counts must be finite and non-negative");
  if (sigma_ && (!sigma_->allFinite() || (sigma_->array() < 0).any()))
    throw DomainError("count uncertainties must be finite and non-negative");
}

CountsSextet CountsSextet::with_poisson(const Vector6d& values) {
  if ((values.array() < 0).any()) throw DomainError("counts must be non-negative");
  return CountsSextet(values, Vector6d(values.cwiseSqrt()));
}

const CountsSextet::Vector6d& CountsSextet::ch_coefficients() {
  static const Vector6d c = (Vector6d() << 1, -1, 1, 1, -1, -1).finished();
  return c;
}

double CountsSextet::numerator() const { return values_.head<4>().dot(ch_coefficients().head<4>()); }

double CountsSextet::denominator() const { return values_(kApInf) + values_(kInfB); }

CHReport ch_sum(const CountsSextet& counts) {
  CHReport out;
  out.ch = counts.values().dot(CountsSextet::ch_coefficients());
  if (counts.sigma()) out.sigma_ch = std::sqrt(counts.sigma()->squaredNorm());
  if (counts.denominator() > 0) {
    const RatioEstimate r = ratio_r(counts);
    out.r = r.value;
    out.sigma_r = r.sigma;
  }
  return out;
}

RatioEstimate ratio_r(const CountsSextet& counts) {
  const double den = counts.denominator();
  if (!(den > 0)) throw DegenerateInputError("ratio R undefined: N(a',inf) + N(inf,b) is zero");
  const double r = counts.numerator() / den;
  RatioEstimate out{r, std::nullopt};
  if (counts.sigma()) {
    // First order: dR/dN_joint = +-1/D, dR/dN_inf = -R/D.
    const auto& s = *counts.sigma();
    const double var = (s.head<4>().squaredNorm() + r * r * s.tail<2>().squaredNorm()) / (den * den);
    out.sigma = std::sqrt(var);
  }
  return out;
}

CountsSextet qm_counts(const EntangledState<double>& state, const AnalyzerQuad& quad,
                       const PolarizerModel<double>& pol, const DetectionModel& det, CountMode mode,
                       double noise_mix) {
  const AnalyzerAngle a(quad.theta1()), b(quad.theta2());
  const AnalyzerAngle ap(quad.theta1_prime()), bp(quad.theta2_prime());
  const AnalyzerAngle none = AnalyzerAngle::absent();
  auto coinc = [&](const AnalyzerAngle& x, const AnalyzerAngle& y) {
    return coincidence_rate(state, x, y, pol, det, noise_mix) * det.duration;
  };

  CountsSextet::Vector6d n;
  n(CountsSextet::kAB) = coinc(a, b);
  n(CountsSextet::kABp) = coinc(a, bp);
  n(CountsSextet::kApB) = coinc(ap, b);
  n(CountsSextet::kApBp) = coinc(ap, bp);
  if (mode == CountMode::kCoincidenceNormalized) {
    n(CountsSextet::kApInf) = coinc(ap, none);
    n(CountsSextet::kInfB) = coinc(none, b);
  } else {
    n(CountsSextet::kApInf) = singles_rate(state, ap, 1, pol, det, noise_mix) * det.duration;
    n(CountsSextet::kInfB) = singles_rate(state, b, 2, pol, det, noise_mix) * det.duration;
  }
  return CountsSextet(n);
}

double lhv_ch_value(const LocalStrategy& s) {
  return s.a1 * s.b1 - s.a1 * s.b2 + s.a2 * s.b1 + s.a2 * s.b2 - s.a2 - s.b1;
}

std::array<LocalStrategy, 16> local_strategies() {
  std::array<LocalStrategy, 16> out{};
  for (int k = 0; k < 16; ++k)
    out[static_cast<std::size_t>(k)] = {(k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1};
  return out;
}

LhvExtrema lhv_extrema() {
  const auto strategies = local_strategies();
  LhvExtrema e{lhv_ch_value(strategies[0]), lhv_ch_value(strategies[0]), 0, 0};
  for (std::size_t k = 1; k < strategies.size(); ++k) {
    const double v = lhv_ch_value(strategies[k]);
    if (v > e.max) e.max = v, e.argmax = k;
    if (v < e.min) e.min = v, e.argmin = k;
  }
  return e;
}

double lhv_mixture_value(const Eigen::Matrix<double, 16, 1>& weights) {
  if ((weights.array() < 0).any() || !(weights.sum() > 0))
    throw DomainError("mixture weights must be non-negative with positive sum");
  const auto strategies = local_strategies();
  Eigen::Matrix<double, 16, 1> values;
  for (int k = 0; k < 16; ++k) values(k) = lhv_ch_value(strategies[static_cast<std::size_t>(k)]);
  return weights.dot(values) / weights.sum();
}

}  // namespace bell_lab
