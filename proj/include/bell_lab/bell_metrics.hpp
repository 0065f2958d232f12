#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>

#include "bell_lab/qm_model.hpp"

namespace bell_lab {

/// Analyzer settings (theta1, theta2, theta1', theta2') in degrees, each in [0, 180).
class AnalyzerQuad {
public:
  AnalyzerQuad() : angles_(Eigen::Vector4d::Zero()) {}
  AnalyzerQuad(double theta1, double theta2, double theta1_prime, double theta2_prime)
      : AnalyzerQuad(Eigen::Vector4d(theta1, theta2, theta1_prime, theta2_prime)) {}
  explicit AnalyzerQuad(const Eigen::Vector4d& degrees) : angles_(degrees.unaryExpr(&AnalyzerAngle::reduce)) {}

  double theta1() const { return angles_(0); }
  double theta2() const { return angles_(1); }
  double theta1_prime() const { return angles_(2); }
  double theta2_prime() const { return angles_(3); }
  const Eigen::Vector4d& degrees() const { return angles_; }

  /// Largest per-angle distance, taking the 180-degree period into account.
  double max_distance(const AnalyzerQuad& other) const;

private:
  Eigen::Vector4d angles_;
};

/// Terms of the CH sum in order: N(a,b), N(a,b'), N(a',b), N(a',b'), N(a',inf), N(inf,b).
class CountsSextet {
public:
  using Vector6d = Eigen::Matrix<double, 6, 1>;
  enum Term { kAB = 0, kABp, kApB, kApBp, kApInf, kInfB };

  CountsSextet() : values_(Vector6d::Zero()) {}
  explicit CountsSextet(const Vector6d& values, std::optional<Vector6d> sigma = std::nullopt);

  /// Attaches sqrt(N) as each term's standard deviation.
  static CountsSextet with_poisson(const Vector6d& values);

  const Vector6d& values() const { return values_; }
  const std::optional<Vector6d>& sigma() const { return sigma_; }
  double operator[](Term t) const { return values_(t); }

  /// Sum of the four joint terms with CH signs (+, -, +, +).
  double numerator() const;
  /// N(a',inf) + N(inf,b).
  double denominator() const;

  /// Coefficients of the CH sum over the six terms.
  static const Vector6d& ch_coefficients();

private:
  Vector6d values_;
  std::optional<Vector6d> sigma_;
};

struct RatioEstimate {
  double value;
  std::optional<double> sigma;
};

struct CHReport {
  double ch = 0;
  std::optional<double> sigma_ch;
  /// Absent when the denominator vanishes.
  std::optional<double> r;
  std::optional<double> sigma_r;
};

CHReport ch_sum(const CountsSextet& counts);

/// Throws DegenerateInputError if N(a',inf) + N(inf,b) is zero.
RatioEstimate ratio_r(const CountsSextet& counts);

enum class CountMode {
  /// The inf terms are coincidences with one analyzer removed.
  kCoincidenceNormalized,
  /// The inf terms are single-arm counts.
  kSingles,
};

/// Expected counts (rate times duration) of the six CH terms.
CountsSextet qm_counts(const EntangledState<double>& state, const AnalyzerQuad& quad,
                       const PolarizerModel<double>& pol, const DetectionModel& det, CountMode mode,
                       double noise_mix = 0.0);

/// Deterministic local strategy: pass (1) / fail (0) for settings a1, a2, b1, b2.
struct LocalStrategy {
  int a1, a2, b1, b2;
};

/// a1 b1 - a1 b2 + a2 b1 + a2 b2 - a2 - b1.
double lhv_ch_value(const LocalStrategy& s);

/// All 16 deterministic strategies in bit order (a1 a2 b1 b2, most significant first).
std::array<LocalStrategy, 16> local_strategies();

struct LhvExtrema {
  double max;
  double min;
  std::size_t argmax;  // index into local_strategies()
  std::size_t argmin;
};

LhvExtrema lhv_extrema();

/// CH value of a convex mixture of the 16 strategies; weights are normalized.
double lhv_mixture_value(const Eigen::Matrix<double, 16, 1>& weights);

}  // namespace bell_lab
