#include "bell_lab/experiment_sim.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <random>

namespace bell_lab {
namespace {

// Stream units. Settings of a run use 0..5.
constexpr std::uint64_t kFringeUnitBase = 1000;
constexpr std::uint64_t kBasisUnitBase = 2000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t draw_poisson(double mean, std::uint64_t seed) {
  if (!(mean >= 0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
  if (mean == 0) return 0;
  std::mt19937_64 gen(seed);
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(gen);
}

}  // namespace

void SimConfig::validate() const {
  det.validate();
  if (!(noise_mix >= 0 && noise_mix <= 1)) throw DomainError("noise_mix must lie in [0, 1]");
  if (!(det.duration > 0)) throw DomainError("integration time must be positive");
}

std::string config_digest(const SimConfig& c) {
  char buf[1024];
  const auto& p1 = c.pol.arm(1);
  const auto& p2 = c.pol.arm(2);
  const int n = std::snprintf(
      buf, sizeof buf,
      "f=%.17g,%.17g;pol=%.17g,%.17g,%.17g,%.17g;eta=%.17g,%.17g;dark=%.17g,%.17g;"
      "pair_rate=%.17g;window=%.17g;duration=%.17g;quad=%.17g,%.17g,%.17g,%.17g;seed=%" PRIu64
      ";noise=%.17g;mode=%d",
      c.state.f().real(), c.state.f().imag(), p1.par, p1.perp, p2.par, p2.perp, c.det.eta[0],
      c.det.eta[1], c.det.dark[0], c.det.dark[1], c.det.pair_rate, c.det.window, c.det.duration,
      c.quad.theta1(), c.quad.theta2(), c.quad.theta1_prime(), c.quad.theta2_prime(), c.seed,
      c.noise_mix, static_cast<int>(c.mode));
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < n && i < static_cast<int>(sizeof buf); ++i) {
    h ^= static_cast<unsigned char>(buf[i]);
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  return hex;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t unit) {
  return splitmix64(splitmix64(seed) ^ splitmix64(unit + 0x632be59bd9b4e019ULL));
}

CountsSextet RunRecord::sextet() const {
  CountsSextet::Vector6d v;
  for (int i = 0; i < 6; ++i) v(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]);
  return CountsSextet::with_poisson(v);
}

RunRecord simulate_run(const SimConfig& config) {
  config.validate();
  RunRecord rec;
  rec.config_digest = config_digest(config);
  rec.seed = config.seed;
  rec.expected = qm_counts(config.state, config.quad, config.pol, config.det, config.mode, config.noise_mix);
  for (std::size_t i = 0; i < 6; ++i)
    rec.counts[i] = draw_poisson(rec.expected.values()(static_cast<Eigen::Index>(i)), stream_seed(config.seed, i));
  rec.duration = config.det.duration;
  rec.pair_rate = config.det.pair_rate;
  rec.report = ch_sum(rec.sextet());
  return rec;
}

Fringe expected_fringe(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                       int n_points, double per_point_duration) {
  config.validate();
  if (theta_fixed.is_absent()) throw DomainError("fringe needs a numeric fixed angle");
  if (!(per_point_duration >= 0)) throw DomainError("per-point duration must be >= 0");
  if (n_points < 3) throw DomainError("fringe needs at least 3 points");
  PolarizerModel<double>::index(arm_fixed);

  Fringe out;
  out.angle_deg = Eigen::ArrayXd::LinSpaced(n_points, 0.0, 180.0 * (n_points - 1) / n_points);
  out.value.resize(n_points);
  for (Eigen::Index k = 0; k < n_points; ++k) {
    const AnalyzerAngle scanned(out.angle_deg(k));
    const double rate = arm_fixed == 1
                            ? coincidence_rate(config.state, theta_fixed, scanned, config.pol, config.det, config.noise_mix)
                            : coincidence_rate(config.state, scanned, theta_fixed, config.pol, config.det, config.noise_mix);
    out.value(k) = rate * per_point_duration;
  }
  return out;
}

Fringe simulate_fringe(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                       int n_points, double per_point_duration) {
  if (n_points < 8) throw DomainError("simulated fringe needs at least 8 points");
  Fringe out = expected_fringe(config, theta_fixed, arm_fixed, n_points, per_point_duration);
  for (Eigen::Index k = 0; k < out.size(); ++k)
    out.value(k) = static_cast<double>(
        draw_poisson(out.value(k), stream_seed(config.seed, kFringeUnitBase + static_cast<std::uint64_t>(k))));
  return out;
}

double calibrate_noise_mix(const SimConfig& config, const AnalyzerAngle& theta_fixed, int arm_fixed,
                           double target_visibility) {
  if (!(target_visibility >= 0 && target_visibility <= 1))
    throw DomainError("target visibility must lie in [0, 1]");
  SimConfig c = config;
  auto vis_at = [&](double m) {
    c.noise_mix = m;
    return visibility(expected_fringe(c, theta_fixed, arm_fixed, 180, 1.0));
  };
  const double v_clean = vis_at(0.0);
  const double v_white = vis_at(1.0);
  if (target_visibility > v_clean || target_visibility < v_white)
    throw DomainError("target visibility outside the range reachable by noise mixing");

  // Visibility falls monotonically as white noise is added.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (vis_at(mid) > target_visibility ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BasisCounts simulate_basis_counts(const SimConfig& config, double duration) {
  config.validate();
  auto mean = [&](double angle) {
    return coincidence_rate(config.state, AnalyzerAngle(angle), AnalyzerAngle(angle), config.pol,
                            config.det, config.noise_mix) *
           duration;
  };
  BasisCounts out;
  out.n_hh = static_cast<double>(draw_poisson(mean(90.0), stream_seed(config.seed, kBasisUnitBase)));
  out.n_vv = static_cast<double>(draw_poisson(mean(0.0), stream_seed(config.seed, kBasisUnitBase + 1)));
  return out;
}

FEstimate estimate_f(const BasisCounts& counts) {
  if (!(counts.n_hh >= 0 && counts.n_vv >= 0)) throw DomainError("basis counts must be non-negative");
  if (counts.n_hh == 0) throw DegenerateInputError("estimate_f: N(90,90) is zero");
  const double f = std::sqrt(counts.n_vv / counts.n_hh);
  // df/f = (dN_vv/N_vv - dN_hh/N_hh) / 2 with Poisson variances.
  const double rel2 = (counts.n_vv > 0 ? 1.0 / counts.n_vv : 0.0) + 1.0 / counts.n_hh;
  return {f, 0.5 * f * std::sqrt(rel2)};
}

}  // namespace bell_lab
