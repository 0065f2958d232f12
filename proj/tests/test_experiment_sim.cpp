#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "bell_lab/experiment_sim.hpp"
#include "bell_lab/fringe_fit.hpp"

using namespace bell_lab;

namespace {

SimConfig lab_config(double f, double duration) {
  SimConfig c;
  c.state = EntangledState<double>(f);
  c.det.pair_rate = 1e4;
  c.det.duration = duration;
  c.seed = 7;
  return c;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

}  // namespace

TEST_CASE("zero rates give zero counts") {
  SimConfig c;
  c.det.pair_rate = 0;
  const RunRecord rec = simulate_run(c);
  for (auto n : rec.counts) CHECK(n == 0);
  CHECK(rec.report.ch == 0.0);
  CHECK_FALSE(rec.report.r);
}

TEST_CASE("runs are deterministic in the seed") {
  const SimConfig c = lab_config(0.4, 1.0);
  const RunRecord a = simulate_run(c);
  const RunRecord b = simulate_run(c);
  CHECK(a.counts == b.counts);
  CHECK(a.config_digest == b.config_digest);
  SimConfig other = c;
  other.seed = 8;
  CHECK(simulate_run(other).counts != a.counts);
  CHECK(config_digest(other) != a.config_digest);
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
}

TEST_CASE("every config field reaches the digest") {
  const SimConfig base = lab_config(0.4, 1.0);
  const std::string d0 = config_digest(base);
  std::vector<SimConfig> variants(6, base);
  variants[0].noise_mix = 0.01;
  variants[1].det.window = 1e-9;
  variants[2].quad = AnalyzerQuad(67.5, 45.0, 22.5, 1.0);
  variants[3].mode = CountMode::kSingles;
  variants[4].pol = PolarizerModel<double>(0.99, 0.0, 1.0, 0.0);
  variants[5].state = EntangledState<double>({0.4, 1e-3});
  for (const auto& v : variants) CHECK(config_digest(v) != d0);
  CHECK(d0.size() == 16);
}

TEST_CASE("maximal entanglement run is consistent with the ideal ratio") {
  const RunRecord rec = simulate_run(lab_config(1.0, 10.0));
  REQUIRE(rec.report.r);
  REQUIRE(rec.report.sigma_r);
  CHECK(std::abs(*rec.report.r - (std::sqrt(2.0) + 1) / 2) < 3 * *rec.report.sigma_r);
  CHECK(rec.duration == 10.0);
  CHECK(rec.pair_rate == 1e4);
}

TEST_CASE("large-count limit approaches the expected sextet") {
  const RunRecord rec = simulate_run(lab_config(0.4, 1e3));
  for (std::size_t i = 0; i < 6; ++i) {
    const double mu = rec.expected.values()(static_cast<Eigen::Index>(i));
    CHECK(std::abs(double(rec.counts[i]) - mu) < 5 * std::sqrt(mu));
  }
}

TEST_CASE("Poisson sigma of CH matches the spread over repeated runs") {
  SimConfig c = lab_config(0.4, 0.5);
  std::vector<double> ch, sig;
  for (std::uint64_t s = 0; s < 200; ++s) {
    c.seed = 1000 + s;
    const RunRecord rec = simulate_run(c);
    ch.push_back(rec.report.ch);
    sig.push_back(*rec.report.sigma_ch);
  }
  CHECK(stddev(ch) == doctest::Approx(mean(sig)).epsilon(0.15));
}

TEST_CASE("config validation") {
  SimConfig c;
  c.noise_mix = -0.1;
  CHECK_THROWS_AS(simulate_run(c), DomainError);
  c = SimConfig{};
  c.det.duration = 0;
  CHECK_THROWS_AS(simulate_run(c), DomainError);
  c = SimConfig{};
  c.det.pair_rate = 1e9;
  c.det.window = 1e-6;
  CHECK_THROWS_AS(simulate_run(c), SaturationError);
}

TEST_CASE("fringe visibility limits") {
  SimConfig c = lab_config(1.0, 1.0);
  const Fringe clean = expected_fringe(c, 45.0, 1, 36, 1.0);
  CHECK(visibility(clean) == doctest::Approx(1.0));
  c.noise_mix = 1.0;
  CHECK(visibility(expected_fringe(c, 45.0, 1, 36, 1.0)) == doctest::Approx(0.0).epsilon(1e-12));
  c.noise_mix = 0.2;
  const double v = visibility(expected_fringe(c, 45.0, 1, 36, 1.0));
  CHECK(v > 0.0);
  CHECK(v < 1.0);
  CHECK_THROWS_AS(simulate_fringe(c, 45.0, 1, 4, 1.0), DomainError);
}

TEST_CASE("simulated fringe is integral and reproducible") {
  const SimConfig c = lab_config(0.4, 1.0);
  const Fringe a = simulate_fringe(c, 90.0, 1, 36, 1.0);
  const Fringe b = simulate_fringe(c, 90.0, 1, 36, 1.0);
  CHECK((a.value == b.value).all());
  CHECK((a.value == a.value.round()).all());
  CHECK((a.value >= 0).all());
}

TEST_CASE("noise calibration hits the target visibility") {
  const SimConfig c = lab_config(0.4, 1.0);
  const double m = calibrate_noise_mix(c, 90.0, 1, 0.973);
  CHECK(m > 0.0);
  CHECK(m < 0.1);
  SimConfig cal = c;
  cal.noise_mix = m;
  CHECK(visibility(expected_fringe(cal, 90.0, 1, 180, 1.0)) == doctest::Approx(0.973).epsilon(1e-6));
  CHECK_THROWS_AS(calibrate_noise_mix(c, 90.0, 1, 1.5), DomainError);
}

TEST_CASE("fringe fit recovers exact sinusoids") {
  const Eigen::ArrayXd angles = Eigen::ArrayXd::LinSpaced(36, 0.0, 175.0);
  const double r = std::numbers::pi / 180;
  SUBCASE("no offset") {
    const Fringe fr{angles, 100.0 * (angles * r - 30.0 * r).cos().square()};
    const FringeFit fit = fit_fringe(fr);
    CHECK(fit.visibility == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.amplitude == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(fit.offset == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.phase_deg == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(fit.dof == 33);
    CHECK(fit.chi2 == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("A = 2B") {
    const Fringe fr{angles, 200.0 * (angles * r - 120.0 * r).cos().square() + 100.0};
    const FringeFit fit = fit_fringe(fr);
    CHECK(fit.visibility == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.phase_deg == doctest::Approx(120.0).epsilon(1e-9));
  }
}

TEST_CASE("fringe fit of Poisson data") {
  SimConfig c = lab_config(1.0, 1.0);
  c.noise_mix = 0.1;
  const Fringe sim = simulate_fringe(c, 45.0, 1, 36, 2.0);
  const double truth = visibility(expected_fringe(c, 45.0, 1, 36, 2.0));
  const FringeFit fit = fit_fringe(sim);
  CHECK(std::abs(fit.visibility - truth) < 4 * fit.sigma_visibility);
  CHECK(fit.sigma_visibility > 0);
  CHECK(fit.chi2 / fit.dof < 3.0);
}

TEST_CASE("fringe fit rejects degenerate input") {
  Fringe few{Eigen::ArrayXd::LinSpaced(3, 0, 120), Eigen::ArrayXd::Ones(3)};
  CHECK_THROWS_AS(fit_fringe(few), DomainError);
  Fringe same{Eigen::ArrayXd::Constant(6, 10.0), Eigen::ArrayXd::Ones(6)};
  CHECK_THROWS_AS(fit_fringe(same), DegenerateInputError);
  Fringe narrow{Eigen::ArrayXd::LinSpaced(6, 0, 50), Eigen::ArrayXd::Ones(6)};
  CHECK_THROWS_AS(fit_fringe(narrow), DomainError);
}

TEST_CASE("estimating f from product-basis counts") {
  const FEstimate e = estimate_f({10000, 1600});
  CHECK(e.f_hat == doctest::Approx(0.4));
  CHECK(e.sigma_f == doctest::Approx(0.5 * 0.4 * std::sqrt(1.0 / 1600 + 1.0 / 10000)));
  CHECK_THROWS_AS(estimate_f({0, 10}), DegenerateInputError);

  SimConfig c = lab_config(0.4, 1.0);
  const BasisCounts counts = simulate_basis_counts(c, 100.0);
  const FEstimate sim = estimate_f(counts);
  CHECK(std::abs(sim.f_hat - 0.4) < 4 * sim.sigma_f);
}
