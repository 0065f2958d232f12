#pragma once

// Two-photon polarization model for states |HH> + f|VV>.
//
// Angle convention: an H-polarized photon passes an ideal analyzer set at
// theta with probability sin^2(theta); a V-polarized photon with cos^2(theta).
// Angles are carried in degrees and reduced modulo 180.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include "bell_lab/errors.hpp"

namespace bell_lab {

template <typename Scalar = double>
class EntangledState {
public:
  using Complex = std::complex<Scalar>;
  /// Amplitudes in the basis (HH, HV, VH, VV).
  using Amplitudes = Eigen::Matrix<Complex, 4, 1>;

  EntangledState() : EntangledState(Complex(1)) {}
  explicit EntangledState(Complex f) : f_(f) {
    if (!std::isfinite(f.real()) || !std::isfinite(f.imag()))
      throw DomainError("entangled state: f must be finite");
  }
  explicit EntangledState(Scalar f) : EntangledState(Complex(f)) {}

  static EntangledState maximal() { return EntangledState(Complex(1)); }
  static EntangledState product() { return EntangledState(Complex(0)); }

  const Complex& f() const { return f_; }
  Scalar f_norm2() const { return std::norm(f_); }

  /// 1 / (1 + |f|^2), the squared normalization of the raw superposition.
  Scalar normalization() const { return Scalar(1) / (Scalar(1) + std::norm(f_)); }

  /// f + f*, the only combination of the phase that reaches a probability.
  Scalar interference() const { return Scalar(2) * f_.real(); }

  bool is_product() const { return std::norm(f_) == Scalar(0); }

  Amplitudes amplitudes() const {
    const Scalar n = std::sqrt(normalization());
    Amplitudes a;
    a << Complex(n), Complex(0), Complex(0), f_ * n;
    return a;
  }

private:
  Complex f_;
};

/// Pass-axis transmittances of one analyzer: `par` for light polarized along
/// the pass axis, `perp` for light normal to it.
template <typename Scalar = double>
struct Transmittance {
  Scalar par = 1;
  Scalar perp = 0;
};

template <typename Scalar = double>
class PolarizerModel {
public:
  PolarizerModel() = default;
  PolarizerModel(Transmittance<Scalar> arm1, Transmittance<Scalar> arm2) : arms_{arm1, arm2} {
    validate();
  }
  PolarizerModel(Scalar eps_par_1, Scalar eps_perp_1, Scalar eps_par_2, Scalar eps_perp_2)
      : PolarizerModel(Transmittance<Scalar>{eps_par_1, eps_perp_1},
                       Transmittance<Scalar>{eps_par_2, eps_perp_2}) {}

  static PolarizerModel ideal() { return PolarizerModel(); }

  /// arm is 1 or 2.
  const Transmittance<Scalar>& arm(int arm) const { return arms_.at(index(arm)); }

  bool is_arm_symmetric() const {
    return arms_[0].par == arms_[1].par && arms_[0].perp == arms_[1].perp;
  }

  static std::size_t index(int arm) {
    if (arm != 1 && arm != 2) throw DomainError("arm must be 1 or 2");
    return static_cast<std::size_t>(arm - 1);
  }

private:
  void validate() const {
    for (const auto& t : arms_) {
      if (!std::isfinite(t.par) || !std::isfinite(t.perp) || t.perp < 0 || t.par < t.perp ||
          t.par > 1)
        throw DomainError("polarizer model requires 0 <= eps_perp <= eps_par <= 1");
    }
  }

  std::array<Transmittance<Scalar>, 2> arms_{};
};

/// Analyzer setting in degrees, or absent (no polarization selection).
class AnalyzerAngle {
public:
  static constexpr double kEqualityTolDeg = 1e-9;

  AnalyzerAngle() = default;  // absent
  AnalyzerAngle(double degrees) : degrees_(reduce(degrees)) {}  // NOLINT(implicit)

  static AnalyzerAngle absent() { return AnalyzerAngle(); }

  bool is_absent() const { return !degrees_.has_value(); }
  double degrees() const {
    if (!degrees_) throw DomainError("analyzer angle is absent");
    return *degrees_;
  }

  /// Modulo-180 reduction into [0, 180).
  static double reduce(double degrees) {
    if (!std::isfinite(degrees)) throw DomainError("analyzer angle must be finite");
    double r = std::fmod(degrees, 180.0);
    if (r < 0) r += 180.0;
    if (r >= 180.0) r = 0.0;
    return r + 0.0;  // no negative zero
  }

  friend bool operator==(const AnalyzerAngle& a, const AnalyzerAngle& b) {
    if (a.is_absent() || b.is_absent()) return a.is_absent() == b.is_absent();
    const double d = std::abs(*a.degrees_ - *b.degrees_);
    return std::min(d, 180.0 - d) <= kEqualityTolDeg;
  }

  std::string to_string() const;

private:
  std::optional<double> degrees_;
};

inline std::string AnalyzerAngle::to_string() const {
  return degrees_ ? std::to_string(*degrees_) : std::string("inf");
}

/// Counting chain shared by both arms' detectors and the source.
struct DetectionModel {
  std::array<double, 2> eta{1.0, 1.0};   // quantum efficiency per arm
  std::array<double, 2> dark{0.0, 0.0};  // dark counts / s per arm
  double pair_rate = 1.0;                // pairs / s
  double window = 0.0;                   // coincidence window, s
  double duration = 1.0;                 // integration time, s

  static DetectionModel ideal() { return DetectionModel{}; }

  static DetectionModel symmetric(double efficiency, double dark_per_arm = 0.0) {
    DetectionModel d;
    d.eta = {efficiency, efficiency};
    d.dark = {dark_per_arm, dark_per_arm};
    d.validate();
    return d;
  }

  void validate() const {
    auto bad = [](double v) { return !std::isfinite(v) || v < 0; };
    for (int i = 0; i < 2; ++i) {
      if (bad(eta[i]) || eta[i] > 1) throw DomainError("detector efficiency must lie in [0, 1]");
      if (bad(dark[i])) throw DomainError("dark-count rate must be non-negative");
    }
    if (bad(pair_rate) || bad(window) || bad(duration))
      throw DomainError("pair rate, window and duration must be non-negative");
  }

  bool is_arm_symmetric() const { return eta[0] == eta[1] && dark[0] == dark[1]; }
};

/// Response of one analyzer to the H/V basis: pass probabilities for H and V
/// and the off-diagonal element <H|M|V> of its pass operator.
template <typename Scalar = double>
struct ArmResponse {
  Scalar h;
  Scalar v;
  Scalar coherence;

  /// Pass probability for a fully unpolarized photon.
  Scalar unpolarized() const { return (h + v) / Scalar(2); }
};

template <typename Scalar = double>
ArmResponse<Scalar> arm_response(const AnalyzerAngle& angle, const Transmittance<Scalar>& t) {
  if (angle.is_absent()) return {Scalar(1), Scalar(1), Scalar(0)};
  const Scalar rad = Scalar(angle.degrees()) * std::numbers::pi_v<Scalar> / Scalar(180);
  const Scalar s = std::sin(rad);
  const Scalar c = std::cos(rad);
  return {t.par * s * s + t.perp * c * c, t.par * c * c + t.perp * s * s, (t.par - t.perp) * s * c};
}

/// Probability that both photons pass, with absent analyzers treated as transparent.
template <typename Scalar>
Scalar pass_probability(const EntangledState<Scalar>& state, const AnalyzerAngle& theta1,
                        const AnalyzerAngle& theta2, const PolarizerModel<Scalar>& pol) {
  const auto a = arm_response(theta1, pol.arm(1));
  const auto b = arm_response(theta2, pol.arm(2));
  const Scalar p = (a.h * b.h + state.f_norm2() * a.v * b.v +
                    state.interference() * a.coherence * b.coherence) *
                   state.normalization();
  // Cancellation at crossed settings can leave a rounding-level negative.
  return std::clamp(p, Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar joint_pass_probability(const EntangledState<Scalar>& state, const AnalyzerAngle& theta1,
                              const AnalyzerAngle& theta2, const PolarizerModel<Scalar>& pol) {
  if (theta1.is_absent() || theta2.is_absent())
    throw DomainError("joint_pass_probability needs two numeric angles");
  return pass_probability(state, theta1, theta2, pol);
}

/// Marginal pass probability on one arm; the other photon is traced out.
template <typename Scalar>
Scalar single_pass_probability(const EntangledState<Scalar>& state, const AnalyzerAngle& theta,
                               int arm, const PolarizerModel<Scalar>& pol) {
  if (theta.is_absent()) throw DomainError("single_pass_probability needs a numeric angle");
  const auto r = arm_response(theta, pol.arm(arm));
  return (r.h + state.f_norm2() * r.v) * state.normalization();
}

/// Joint pass probability of the state mixed with a fraction `noise_mix` of
/// white noise (maximally mixed two-photon state).
template <typename Scalar>
Scalar mixed_pass_probability(const EntangledState<Scalar>& state, const AnalyzerAngle& theta1,
                              const AnalyzerAngle& theta2, const PolarizerModel<Scalar>& pol,
                              Scalar noise_mix) {
  if (!(noise_mix >= 0 && noise_mix <= 1)) throw DomainError("noise_mix must lie in [0, 1]");
  const Scalar white = arm_response(theta1, pol.arm(1)).unpolarized() *
                       arm_response(theta2, pol.arm(2)).unpolarized();
  return (Scalar(1) - noise_mix) * pass_probability(state, theta1, theta2, pol) + noise_mix * white;
}

/// Singles rate on one arm: detected pairs whose photon passes plus darks.
double singles_rate(const EntangledState<double>& state, const AnalyzerAngle& theta, int arm,
                    const PolarizerModel<double>& pol, const DetectionModel& det,
                    double noise_mix = 0.0);

/// Coincidence rate (counts/s): true coincidences plus accidentals S1*S2*window.
double coincidence_rate(const EntangledState<double>& state, const AnalyzerAngle& theta1,
                        const AnalyzerAngle& theta2, const PolarizerModel<double>& pol,
                        const DetectionModel& det, double noise_mix = 0.0);

/// Sampled interference fringe; angles in degrees.
struct Fringe {
  Eigen::ArrayXd angle_deg;
  Eigen::ArrayXd value;

  Eigen::Index size() const { return angle_deg.size(); }
};

/// Joint pass probability while the analyzer on the other arm sweeps [0, 180).
Fringe fringe_scan(const EntangledState<double>& state, const AnalyzerAngle& theta_fixed,
                   int arm_fixed, const PolarizerModel<double>& pol, int n_points);

/// (max - min) / (max + min) of the fringe values.
double visibility(const Fringe& fringe);

}  // namespace bell_lab
