#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bell_lab/bell_metrics.hpp"

namespace bell_lab {

struct OptimizerOptions {
  double grid_step_deg = 5.0;
  int starts = 8;  // grid cells refined by the simplex
  /// Objective evaluations available to the simplex refinements (grid excluded).
  long budget = 20000;
  double x_tol_deg = 1e-6;
  double f_tol = 1e-12;
  /// Two quads whose CH differs by less than this are treated as equivalent optima.
  double tie_tol = 1e-9;
  /// Extra refinement starts, tried before the grid cells.
  std::vector<AnalyzerQuad> seeds;
};

struct OptimizationResult {
  AnalyzerQuad quad;
  double ch_max = 0;
  std::optional<double> r_at_max;
  long evaluations = 0;  // simplex evaluations
  long grid_points = 0;
  bool converged = false;
};

/// CH sum of the expected counts at `quad`.
double ch_objective(const EntangledState<double>& state, const AnalyzerQuad& quad,
                    const PolarizerModel<double>& pol, const DetectionModel& det, CountMode mode);

/// Global maximizer of the CH sum over the four analyzer angles: exhaustive
/// grid, simplex refinement of the best grid-local maxima, then reduction to a
/// canonical representative (theta2' in [0, 45], preferring theta2' = 0 when
/// that slice attains the optimum, lexicographically smallest otherwise).
OptimizationResult optimize_angles(const EntangledState<double>& state,
                                   const PolarizerModel<double>& pol,
                                   const DetectionModel& det = DetectionModel::ideal(),
                                   CountMode mode = CountMode::kCoincidenceNormalized,
                                   const OptimizerOptions& options = {});

struct FScanEntry {
  double f;
  OptimizationResult result;
};

struct FScan {
  std::vector<FScanEntry> entries;
  /// ch_max is non-decreasing in the concurrence 2f/(1+f^2) across the entries.
  bool monotone_in_entanglement = true;
};

FScan scan_f(std::span<const double> f_values, const PolarizerModel<double>& pol,
             CountMode mode = CountMode::kCoincidenceNormalized,
             const OptimizerOptions& options = {});

struct EfficiencyThreshold {
  double f;
  double background;
  double eta_star;
  double tol;
  AnalyzerQuad quad_at_threshold;
  double g_below;  // max CH at eta_star - tol
  double g_above;  // max CH at eta_star + tol
  int iterations;
};

/// Max-over-angles CH in singles mode with both detectors at `eta` and a dark
/// rate of `background` per emitted pair on each arm.
OptimizationResult max_ch_at_efficiency(double f, double background, double eta,
                                        const OptimizerOptions& options = {});

/// Smallest symmetric detection efficiency for which the CH sum can exceed zero.
/// Throws NoThresholdError when no violation exists even at eta = 1.
EfficiencyThreshold critical_efficiency(double f, double background = 0.0, double tol = 1e-4,
                                        const OptimizerOptions& options = {});

}  // namespace bell_lab
