#include "bell_lab/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "bell_lab/nelder_mead.hpp"

namespace bell_lab {
namespace {

// Anything at or below this is "no violation"; CH is an exact zero on the
// LHV-reachable plateau, so this only absorbs rounding.
constexpr double kViolationFloor = 1e-13;
constexpr double kAngleTol = 1e-9;
constexpr int kMaxRestarts = 3;

using Cell = std::array<int, 4>;

struct GridCandidate {
  double value;
  Cell cell;
};

// Keeps the `capacity` best candidates; earlier insertions win ties.
class TopK {
public:
  explicit TopK(std::size_t capacity) : capacity_(capacity) {}

  bool admits(double value) const {
    return items_.size() < capacity_ || value > items_.back().value;
  }
  void insert(const GridCandidate& c) {
    auto pos = std::upper_bound(items_.begin(), items_.end(), c.value,
                                [](double v, const GridCandidate& x) { return v > x.value; });
    items_.insert(pos, c);
    if (items_.size() > capacity_) items_.pop_back();
  }
  const std::vector<GridCandidate>& items() const { return items_; }

private:
  std::size_t capacity_;
  std::vector<GridCandidate> items_;
};

struct CandidateQuad {
  AnalyzerQuad quad;
  double value;
  bool converged;
};

// theta2' inside [0, 45] first, then smaller theta2', then lexicographic.
bool canonical_less(const AnalyzerQuad& a, const AnalyzerQuad& b) {
  const bool a_in = a.theta2_prime() <= 45.0 + kAngleTol;
  const bool b_in = b.theta2_prime() <= 45.0 + kAngleTol;
  if (a_in != b_in) return a_in;
  const Eigen::Vector4d& x = a.degrees();
  const Eigen::Vector4d& y = b.degrees();
  for (int i : {3, 0, 1, 2}) {
    if (std::abs(x(i) - y(i)) > kAngleTol) return x(i) < y(i);
  }
  return false;
}

// Images of `q` under joint reflection, arm exchange and a global rotation
// taking theta2' to 0. Which of these are symmetries depends on the state and
// models, so the caller re-evaluates every image.
std::vector<AnalyzerQuad> symmetry_images(const AnalyzerQuad& q) {
  std::vector<AnalyzerQuad> out;
  for (int swap = 0; swap < 2; ++swap) {
    for (int reflect = 0; reflect < 2; ++reflect) {
      for (int rotate = 0; rotate < 2; ++rotate) {
        Eigen::Vector4d x = q.degrees();
        if (swap) x = Eigen::Vector4d(x(3), x(2), x(1), x(0));
        if (reflect) x = -x;
        if (rotate) x.array() -= x(3);
        out.emplace_back(x);
      }
    }
  }
  return out;
}

class ChLandscape {
public:
  ChLandscape(const EntangledState<double>& state, const PolarizerModel<double>& pol,
              const DetectionModel& det, CountMode mode)
      : state_(state), pol_(pol), det_(det), mode_(mode) {
    det_.validate();
  }

  double operator()(const AnalyzerQuad& q) const { return ch_objective(state_, q, pol_, det_, mode_); }

  // One simplex run plus restarts from its best point, within `cap` evaluations.
  template <int N, typename Embed>
  CandidateQuad refine(const Eigen::Matrix<double, N, 1>& start, Embed embed, const OptimizerOptions& o,
                       long cap, long& used) const {
    auto objective = [&](const Eigen::Matrix<double, N, 1>& x) { return (*this)(embed(x)); };
    SimplexOptions so{o.grid_step_deg, o.x_tol_deg, o.f_tol, cap};
    SimplexResult<N> r = maximize_simplex<N>(objective, start, so);
    long spent = r.evaluations;
    for (int k = 0; k < kMaxRestarts && r.converged && spent < cap; ++k) {
      so.max_evaluations = cap - spent;
      SimplexResult<N> again = maximize_simplex<N>(objective, r.x, so);
      spent += again.evaluations;
      const bool improved = again.value > r.value + o.f_tol;
      if (again.value >= r.value) r = again;
      if (!improved) break;
    }
    used += spent;
    const AnalyzerQuad q = embed(r.x);
    return {q, (*this)(q), r.converged};
  }

private:
  EntangledState<double> state_;
  PolarizerModel<double> pol_;
  DetectionModel det_;
  CountMode mode_;
};

struct GridScan {
  std::vector<GridCandidate> global;
  std::vector<GridCandidate> pinned;  // slice theta2' = 0
  long points = 0;
  double step = 0;
};

GridScan scan_grid(const EntangledState<double>& state, const PolarizerModel<double>& pol,
                   const DetectionModel& det, CountMode mode, const OptimizerOptions& o) {
  const int n = std::max(2, static_cast<int>(std::lround(180.0 / o.grid_step_deg)));
  const double step = 180.0 / n;
  const AnalyzerAngle none = AnalyzerAngle::absent();

  // joint(i, j): N(theta_i, theta_j); ainf(k): N(theta_k, inf); binf(j): N(inf, theta_j).
  Eigen::MatrixXd joint(n, n);
  Eigen::VectorXd ainf(n), binf(n);
  for (int i = 0; i < n; ++i) {
    const AnalyzerAngle ti(i * step);
    for (int j = 0; j < n; ++j)
      joint(i, j) = coincidence_rate(state, ti, AnalyzerAngle(j * step), pol, det) * det.duration;
    if (mode == CountMode::kCoincidenceNormalized) {
      ainf(i) = coincidence_rate(state, ti, none, pol, det) * det.duration;
      binf(i) = coincidence_rate(state, none, ti, pol, det) * det.duration;
    } else {
      ainf(i) = singles_rate(state, ti, 1, pol, det) * det.duration;
      binf(i) = singles_rate(state, ti, 2, pol, det) * det.duration;
    }
  }

  auto wrap = [n](int i) { return (i % n + n) % n; };
  auto ch = [&](int i, int j, int k, int l) {
    return joint(i, j) - joint(i, l) + joint(k, j) + joint(k, l) - ainf(k) - binf(j);
  };
  auto is_local_max = [&](const Cell& c, double v, int dims) {
    for (int d = 0; d < dims; ++d) {
      for (int s : {-1, 1}) {
        Cell nb = c;
        nb[static_cast<std::size_t>(d)] = wrap(nb[static_cast<std::size_t>(d)] + s);
        if (ch(nb[0], nb[1], nb[2], nb[3]) > v) return false;
      }
    }
    return true;
  };

  const auto k_best = static_cast<std::size_t>(std::max(1, o.starts));
  TopK global(k_best), pinned(k_best);
  Eigen::VectorXd row(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      row = joint.row(k).transpose() - joint.row(i).transpose();  // -N(i,l) + N(k,l)
      for (int j = 0; j < n; ++j) {
        const double base = joint(i, j) + joint(k, j) - ainf(k) - binf(j);
        for (int l = 0; l < n; ++l) {
          const double v = base + row(l);
          const Cell c{i, j, k, l};
          if (global.admits(v) && is_local_max(c, v, 4)) global.insert({v, c});
          if (l == 0 && pinned.admits(v) && is_local_max(c, v, 3)) pinned.insert({v, c});
        }
      }
    }
  }
  return {global.items(), pinned.items(), static_cast<long>(n) * n * n * n, step};
}

}  // namespace

double ch_objective(const EntangledState<double>& state, const AnalyzerQuad& quad,
                    const PolarizerModel<double>& pol, const DetectionModel& det, CountMode mode) {
  return qm_counts(state, quad, pol, det, mode).values().dot(CountsSextet::ch_coefficients());
}

OptimizationResult optimize_angles(const EntangledState<double>& state,
                                   const PolarizerModel<double>& pol, const DetectionModel& det,
                                   CountMode mode, const OptimizerOptions& options) {
  if (!(options.grid_step_deg > 0 && options.grid_step_deg <= 90))
    throw DomainError("grid step must lie in (0, 90] degrees");
  if (options.budget <= 0 || options.starts <= 0) throw DomainError("budget and starts must be positive");

  const ChLandscape landscape(state, pol, det, mode);
  const GridScan grid = scan_grid(state, pol, det, mode, options);

  const long runs = static_cast<long>(options.seeds.size() + grid.global.size() + grid.pinned.size());
  const long cap = std::max<long>(1, options.budget / std::max<long>(1, runs));
  long used = 0;
  std::vector<CandidateQuad> found;

  auto full = [](const Eigen::Vector4d& x) { return AnalyzerQuad(x); };
  auto pinned = [](const Eigen::Vector3d& x) { return AnalyzerQuad(x(0), x(1), x(2), 0.0); };

  for (const AnalyzerQuad& s : options.seeds)
    found.push_back(landscape.refine<4>(s.degrees(), full, options, cap, used));
  for (const GridCandidate& g : grid.global) {
    const Eigen::Vector4d x(g.cell[0] * grid.step, g.cell[1] * grid.step, g.cell[2] * grid.step,
                            g.cell[3] * grid.step);
    found.push_back(landscape.refine<4>(x, full, options, cap, used));
  }
  for (const GridCandidate& g : grid.pinned) {
    const Eigen::Vector3d x(g.cell[0] * grid.step, g.cell[1] * grid.step, g.cell[2] * grid.step);
    found.push_back(landscape.refine<3>(x, pinned, options, cap, used));
  }

  std::vector<CandidateQuad> pool;
  for (const CandidateQuad& c : found) {
    for (const AnalyzerQuad& img : symmetry_images(c.quad)) pool.push_back({img, landscape(img), c.converged});
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const CandidateQuad& c : pool) best = std::max(best, c.value);

  const CandidateQuad* chosen = nullptr;
  for (const CandidateQuad& c : pool) {
    if (c.value < best - options.tie_tol) continue;
    if (!chosen || canonical_less(c.quad, chosen->quad)) chosen = &c;
  }

  OptimizationResult out;
  out.quad = chosen->quad;
  out.ch_max = chosen->value;
  out.converged = chosen->converged;
  out.evaluations = used;
  out.grid_points = grid.points;
  const CountsSextet sextet = qm_counts(state, out.quad, pol, det, mode);
  if (sextet.denominator() > 0) out.r_at_max = ratio_r(sextet).value;
  return out;
}

FScan scan_f(std::span<const double> f_values, const PolarizerModel<double>& pol, CountMode mode,
             const OptimizerOptions& options) {
  FScan scan;
  for (double f : f_values) {
    if (!(f >= 0) || !std::isfinite(f)) throw DomainError("scan_f expects finite f >= 0");
    scan.entries.push_back({f, optimize_angles(EntangledState<double>(f), pol, DetectionModel::ideal(), mode, options)});
  }

  auto concurrence = [](double f) { return 2.0 * f / (1.0 + f * f); };
  std::vector<std::size_t> order(scan.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return concurrence(scan.entries[a].f) < concurrence(scan.entries[b].f);
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (scan.entries[order[i]].result.ch_max < scan.entries[order[i - 1]].result.ch_max - options.tie_tol)
      scan.monotone_in_entanglement = false;
  }
  return scan;
}

OptimizationResult max_ch_at_efficiency(double f, double background, double eta,
                                        const OptimizerOptions& options) {
  const DetectionModel det = DetectionModel::symmetric(eta, background);
  return optimize_angles(EntangledState<double>(f), PolarizerModel<double>::ideal(), det,
                         CountMode::kSingles, options);
}

EfficiencyThreshold critical_efficiency(double f, double background, double tol,
                                        const OptimizerOptions& options) {
  if (!std::isfinite(f) || f < 0 || f > 1) throw DomainError("critical efficiency expects 0 < f <= 1");
  if (!(background >= 0) || !std::isfinite(background)) throw DomainError("background must be >= 0");
  if (!(tol > 0)) throw DomainError("tolerance must be positive");

  OptimizerOptions o = options;
  const OptimizationResult at_one = max_ch_at_efficiency(f, background, 1.0, o);
  if (!(at_one.ch_max > kViolationFloor))
    throw NoThresholdError("no CH violation at unit efficiency; no threshold exists");

  // Bisection keeps g(lo) <= 0 < g(hi). The last violating optimum seeds the
  // next inner search, since the maximizer drifts continuously with eta.
  double lo = 0.0, hi = 1.0;
  AnalyzerQuad last = at_one.quad;
  int iterations = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    o.seeds = {last};
    const OptimizationResult r = max_ch_at_efficiency(f, background, mid, o);
    if (r.ch_max > kViolationFloor) {
      hi = mid;
      last = r.quad;
    } else {
      lo = mid;
    }
    ++iterations;
  }

  EfficiencyThreshold out{};
  out.f = f;
  out.background = background;
  out.tol = tol;
  out.eta_star = 0.5 * (lo + hi);
  out.iterations = iterations;
  o.seeds = {last};
  out.g_below = max_ch_at_efficiency(f, background, std::max(0.0, out.eta_star - tol), o).ch_max;
  const OptimizationResult above = max_ch_at_efficiency(f, background, std::min(1.0, out.eta_star + tol), o);
  out.g_above = above.ch_max;
  out.quad_at_threshold = above.quad;
  return out;
}

}  // namespace bell_lab
