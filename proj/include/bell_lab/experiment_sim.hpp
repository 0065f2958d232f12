#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bell_lab/bell_metrics.hpp"

namespace bell_lab {

/// Everything that determines a simulated counting run.
struct SimConfig {
  EntangledState<double> state = EntangledState<double>::maximal();
  PolarizerModel<double> pol;
  DetectionModel det;
  AnalyzerQuad quad{67.5, 45.0, 22.5, 0.0};
  std::uint64_t seed = 0;
  double noise_mix = 0.0;  // white-noise fraction in [0, 1]
  CountMode mode = CountMode::kCoincidenceNormalized;

  void validate() const;
};

/// Stable 64-bit digest (hex) of every field of the config.
std::string config_digest(const SimConfig& config);

/// Seed of the independent random stream for one unit (setting, fringe point, ...).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t unit);

struct RunRecord {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::array<std::int64_t, 6> counts{};  // CountsSextet term order
  CountsSextet expected;                 // Poisson means
  double duration = 0;                   // per setting, s
  double pair_rate = 0;
  CHReport report;

  /// The integer counts with Poisson uncertainties attached.
  CountsSextet sextet() const;
};

/// Poisson counts for the six CH settings, each measured for det.duration.
RunRecord simulate_run(const SimConfig& config);

/// Expected coincidence counts while the other arm's analyzer sweeps [0, 180).
Fringe expected_fringe(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                       int n_points, double per_point_duration);

/// Poisson-sampled version of expected_fringe; values are integer counts.
Fringe simulate_fringe(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                       int n_points, double per_point_duration);

/// noise_mix in [0, 1] whose expected fringe (1-degree sampling) has the
/// target visibility. Throws DomainError if the target is out of reach.
double calibrate_noise_mix(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                           double target_visibility);

/// Coincidences in the two product bases: N(90, 90) (HH) and N(0, 0) (VV).
struct BasisCounts {
  double n_hh = 0;
  double n_vv = 0;
};

BasisCounts simulate_basis_counts(const SimConfig& config, double duration);

struct FEstimate {
  double f_hat;
  double sigma_f;
};

/// f = sqrt(N_VV / N_HH) with Poisson-propagated uncertainty.
FEstimate estimate_f(const BasisCounts& counts);

}  // namespace bell_lab
