// Acceptance checks. Prints one PASS/FAIL line per criterion and writes the
// measured numbers to acceptance_results.json (or the path given as argv[1]).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "bell_lab/experiment_sim.hpp"
#include "bell_lab/fringe_fit.hpp"
#include "bell_lab/optimizer.hpp"
#include "cli_runner.hpp"
#include "oracles.hpp"

using namespace bell_lab;
using Json = nlohmann::ordered_json;

namespace {

using State = EntangledState<double>;
using Pol = PolarizerModel<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
  Json data = Json::object();
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double sample_sd(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

Json quad_json(const Json& q) {
  return Json::array({q["theta1"], q["theta2"], q["theta1_prime"], q["theta2_prime"]});
}

// 1 ------------------------------------------------------------------------

Outcome maximal_optimum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto o = cli::run("--format json optimize --f 1");
  const double secs = seconds_since(t0);
  Outcome out;
  if (o.status != 0) return {false, "optimize exited with status " + std::to_string(o.status)};
  const Json res = Json::parse(o.out)["result"];
  const double r = res["r_at_max"].get<double>();
  const Json q = res["quad"];
  const AnalyzerQuad quad(q["theta1"], q["theta2"], q["theta1_prime"], q["theta2_prime"]);
  const double dev = quad.max_distance(AnalyzerQuad(67.5, 45.0, 22.5, 0.0));
  const double target = (std::sqrt(2.0) + 1) / 2;
  out.pass = std::abs(r - 1.2071) <= 1e-4 && dev <= 0.05 && secs < 10.0;
  out.detail = fmt("R=%.6f (target 1.2071 +- 1e-4, reference 1.207), max angle deviation %.2e deg, %.2f s", r, dev, secs);
  out.data = {{"r", r},           {"r_closed_form", target}, {"reference_r", 1.207}, {"quad", quad_json(q)},
              {"max_angle_deviation_deg", dev}, {"runtime_s", secs}};
  return out;
}

// 2 ------------------------------------------------------------------------

Outcome weak_optimum() {
  const auto o = cli::run("--format json optimize --f 0.4");
  if (o.status != 0) return {false, "optimize exited with status " + std::to_string(o.status)};
  const Json res = Json::parse(o.out)["result"];
  const double r = res["r_at_max"].get<double>();
  const double ch = res["ch_max"].get<double>();
  const Json q = res["quad"];
  const AnalyzerQuad quad(q["theta1"], q["theta2"], q["theta1_prime"], q["theta2_prime"]);
  const double dev = quad.max_distance(AnalyzerQuad(72.24, 45.0, 17.76, 0.0));

  // Oracle: 3-degree grid, refined by golden-section ascent. The maximal CH set
  // is not isolated, so R is taken on the theta2' = 0 slice like the canonical quad.
  const auto grid = oracle::grid_max_ch(0.4L, 3.0);
  const auto full = oracle::refine(0.4L, grid);
  const auto slice = oracle::refine(0.4L, oracle::grid_max_ch(0.4L, 3.0, true), true);
  const double oracle_ch = static_cast<double>(full.ch);
  const double oracle_r = static_cast<double>(oracle::ratio(0.4L, slice.t1, slice.t2, slice.t1p, 0.0));
  const double r_at_reference = static_cast<double>(oracle::ratio(0.4L, 72.24, 45.0, 17.76, 0.0));
  const double gap = r - 1.16;

  Outcome out;
  out.pass = dev <= 0.5 && std::abs(ch - oracle_ch) <= 1e-6 && std::abs(r - oracle_r) <= 1e-6 &&
             ch >= static_cast<double>(grid.ch) - 1e-6;
  out.detail = fmt("quad deviation %.3f deg, R=%.6f vs oracle %.6f, CH diff %.1e", dev, r, oracle_r,
                   std::abs(ch - oracle_ch));
  out.detail += fmt(", gap to reference 1.16 = %+.4f", gap);
  if (std::abs(gap) > 0.01) out.detail += " (documented)";
  out.data = {{"quad", quad_json(q)},
              {"reference_quad", {72.24, 45.0, 17.76, 0.0}},
              {"max_angle_deviation_deg", dev},
              {"r", r},
              {"ch_max", ch},
              {"oracle_grid_step_deg", 3.0},
              {"oracle_grid_ch", static_cast<double>(grid.ch)},
              {"oracle_refined_ch", oracle_ch},
              {"oracle_r_on_slice", oracle_r},
              {"reference_r", 1.16},
              {"gap_to_reference_r", gap},
              {"r_at_reference_quad", r_at_reference},
              {"gap_note",
               "The model evaluated at the reference angles gives R = " + fmt("%.4f", r_at_reference) +
                   " and the optimum on the theta2' = 0 slice gives " + fmt("%.4f", r) +
                   "; neither reaches the reference 1.16. The difference is below 0.01."}};
  if (std::abs(gap) > 0.01)
    out.data["gap_note"] = "Gap to the reference 1.16 exceeds 0.01; the optimizer agrees with the independent oracle.";
  return out;
}

// 3 ------------------------------------------------------------------------

Outcome lhv_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  const LhvExtrema e = lhv_extrema();
  std::mt19937_64 rng(20240611);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<int> support(1, 16);
  double worst = -2;
  long violations = 0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) {
    Eigen::Matrix<double, 16, 1> w;
    for (int k = 0; k < 16; ++k) w(k) = expo(rng);
    // Half of the draws are sparse so the faces of the polytope are sampled too.
    if (i % 2) {
      const int keep = support(rng);
      for (int k = keep; k < 16; ++k) w((k * 7 + i) % 16) = 0;
      if (w.sum() == 0) w(0) = 1;
    }
    const double v = lhv_mixture_value(w);
    worst = std::max(worst, v);
    if (v > 1e-12) ++violations;
  }
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = e.max == 0.0 && e.min == -1.0 && violations == 0 && secs < 5.0;
  out.detail = fmt("max=%g min=%g over 16 strategies; largest of %g mixtures %.3g", e.max, e.min, double(n), worst) +
               fmt("; %.2f s", secs);
  out.data = {{"max", e.max}, {"min", e.min}, {"mixtures", n}, {"largest_mixture_value", worst},
              {"violations", violations}, {"runtime_s", secs}};
  return out;
}

// 4 ------------------------------------------------------------------------

Outcome thresholds() {
  const auto t0 = std::chrono::steady_clock::now();
  const double weak = critical_efficiency(0.01).eta_star;
  const std::vector<double> fs = {1.0, 0.7, 0.4, 0.2, 0.05};
  std::vector<double> etas;
  for (double f : fs) etas.push_back(critical_efficiency(f).eta_star);
  const double secs = seconds_since(t0);
  bool monotone = true;
  for (std::size_t i = 1; i < etas.size(); ++i)
    if (etas[i] > etas[i - 1]) monotone = false;
  const double maximal = etas[0];
  Outcome out;
  out.pass = std::abs(weak - 2.0 / 3.0) <= 0.01 && maximal >= 0.80 && maximal <= 0.84 && monotone && secs < 120;
  out.detail = fmt("eta*(0.01)=%.4f (2/3, reference 0.67), eta*(1)=%.4f (reference 0.81)", weak, maximal) +
               (monotone ? ", non-increasing in f" : ", NOT monotone in f") + fmt(", %.1f s", secs);
  Json curve = Json::array();
  for (std::size_t i = 0; i < fs.size(); ++i) curve.push_back({{"f", fs[i]}, {"eta_star", etas[i]}});
  out.data = {{"eta_star_f_0_01", weak},
              {"reference_weak_limit", 0.67},
              {"eta_star_f_1", maximal},
              {"reference_maximal", 0.81},
              {"closed_form_maximal", 2 * (std::sqrt(2.0) - 1)},
              {"gap_maximal_to_reference", maximal - 0.81},
              {"curve", curve},
              {"non_increasing", monotone},
              {"runtime_s", secs}};
  return out;
}

// 5 ------------------------------------------------------------------------

SimConfig lab_run_config() {
  SimConfig c;
  c.state = State(0.4);
  c.quad = AnalyzerQuad(72.24, 45.0, 17.76, 0.0);
  c.det.pair_rate = 5e4;
  c.det.eta = {0.15, 0.15};
  c.det.dark = {500.0, 500.0};
  c.det.window = 5e-9;
  c.det.duration = 1000.0;
  return c;
}

struct OverlapStats {
  int overlaps;
  double mean_r;
  double mean_sigma;
};

OverlapStats overlap_rate(SimConfig c, int reps, std::uint64_t base_seed) {
  OverlapStats s{0, 0, 0};
  for (int i = 0; i < reps; ++i) {
    c.seed = base_seed + static_cast<std::uint64_t>(i);
    const RunRecord rec = simulate_run(c);
    const double r = *rec.report.r, sr = *rec.report.sigma_r;
    if (std::abs(r - 1.082) <= sr + 0.031) ++s.overlaps;
    s.mean_r += r / reps;
    s.mean_sigma += sr / reps;
  }
  return s;
}

Outcome measured_ratio_compatibility() {
  SimConfig c = lab_run_config();
  // White noise calibrated on the H-basis fringe: arm 1 fixed at 90 degrees.
  const double mix = calibrate_noise_mix(c, 90.0, 1, 0.973);
  c.noise_mix = mix;
  c.seed = 4242;
  const FringeFit fit = fit_fringe(simulate_fringe(c, 90.0, 1, 36, 100.0));
  const bool calibrated = std::abs(fit.visibility - 0.973) <= 0.005;

  const OverlapStats s = overlap_rate(c, 100, 1);
  const double r_expected = ratio_r(qm_counts(c.state, c.quad, c.pol, c.det, c.mode, c.noise_mix)).value;

  // Informational: the same state with statistics comparable to the reference error bar.
  SimConfig coarse = c;
  coarse.det.duration = 2.5;
  const OverlapStats s_coarse = overlap_rate(coarse, 100, 1);

  Outcome out;
  out.pass = calibrated && s.overlaps >= 90;
  out.detail = fmt("noise_mix=%.4f, fitted V=%.4f, expected R=%.4f, overlap with 1.082+-0.031 in %g/100 runs", mix,
                   fit.visibility, r_expected, s.overlaps);
  out.data = {{"detection",
               {{"pair_rate", c.det.pair_rate},
                {"eta", c.det.eta[0]},
                {"dark", c.det.dark[0]},
                {"window", c.det.window},
                {"duration_per_setting", c.det.duration}}},
              {"calibration_fringe", {{"arm_fixed", 1}, {"theta_fixed_deg", 90.0}, {"points", 36}, {"point_duration", 100.0}}},
              {"noise_mix", mix},
              {"fitted_visibility", fit.visibility},
              {"fitted_visibility_sigma", fit.sigma_visibility},
              {"expected_r", r_expected},
              {"mean_r", s.mean_r},
              {"mean_sigma_r", s.mean_sigma},
              {"overlaps_of_100", s.overlaps},
              {"informational_short_runs",
               {{"duration_per_setting", coarse.det.duration},
                {"mean_sigma_r", s_coarse.mean_sigma},
                {"overlaps_of_100", s_coarse.overlaps}}}};
  return out;
}

// 6 ------------------------------------------------------------------------

Outcome probability_properties() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> angle(-180.0, 180.0), mag(0.0, 3.0), phase(-3.14159, 3.14159), unit(0.0, 1.0);
  const int n = 20000;
  long fail[5] = {0, 0, 0, 0, 0};
  const Pol ideal = Pol::ideal();
  for (int i = 0; i < n; ++i) {
    const std::complex<double> f = std::polar(mag(rng), phase(rng));
    const State s(f);
    const double t1 = angle(rng), t2 = angle(rng);
    const double par1 = unit(rng), par2 = unit(rng);
    const Pol pol(par1, par1 * unit(rng), par2, par2 * unit(rng));

    const double total = joint_pass_probability(s, t1, t2, ideal) + joint_pass_probability(s, t1 + 90, t2, ideal) +
                         joint_pass_probability(s, t1, t2 + 90, ideal) +
                         joint_pass_probability(s, t1 + 90, t2 + 90, ideal);
    if (std::abs(total - 1) > 1e-10) ++fail[0];

    const double traced = joint_pass_probability(s, t1, t2, ideal) + joint_pass_probability(s, t1, t2 + 90, ideal);
    if (std::abs(single_pass_probability(s, t1, 1, ideal) - traced) > 1e-10) ++fail[1];

    if (std::abs(f) > 1e-3) {
      const double p = joint_pass_probability(s, t1, t2, pol);
      const double q = joint_pass_probability(State(1.0 / std::conj(f)), 90 - t1, 90 - t2, pol);
      if (std::abs(p - q) > 1e-10) ++fail[2];
    }

    const State prod = State::product();
    const double factor =
        single_pass_probability(prod, t1, 1, pol) * single_pass_probability(prod, t2, 2, pol);
    if (std::abs(joint_pass_probability(prod, t1, t2, pol) - factor) > 1e-10) ++fail[3];

    const double joint = joint_pass_probability(s, t1, t2, pol);
    if (joint > std::min(single_pass_probability(s, t1, 1, pol), single_pass_probability(s, t2, 2, pol)) + 1e-10)
      ++fail[4];
  }
  const long total_fail = fail[0] + fail[1] + fail[2] + fail[3] + fail[4];
  Outcome out;
  out.pass = total_fail == 0;
  out.detail = fmt("%g draws per property; failures: normalization %g, marginal %g, f<->1/f* %g", n, double(fail[0]),
                   double(fail[1]), double(fail[2]));
  out.detail += fmt(", factorization %g, joint<=singles %g", double(fail[3]), double(fail[4]));
  out.data = {{"draws", n},
              {"failures",
               {{"normalization", fail[0]},
                {"marginal_trace", fail[1]},
                {"f_inverse_symmetry", fail[2]},
                {"product_factorization", fail[3]},
                {"joint_below_singles", fail[4]}}},
              {"tolerance", 1e-10}};
  return out;
}

// 7 ------------------------------------------------------------------------

Outcome monte_carlo_statistics() {
  SimConfig c;
  c.state = State(0.4);
  c.quad = AnalyzerQuad(72.24, 45.0, 17.76, 0.0);
  c.det.pair_rate = 1e4;
  const int runs = 50;
  auto spread = [&](double duration, std::uint64_t base, std::vector<double>& ch, std::vector<double>& sig_ch) {
    c.det.duration = duration;
    std::vector<double> r;
    for (int i = 0; i < runs; ++i) {
      c.seed = base + static_cast<std::uint64_t>(i);
      const RunRecord rec = simulate_run(c);
      r.push_back(*rec.report.r);
      ch.push_back(rec.report.ch);
      sig_ch.push_back(*rec.report.sigma_ch);
    }
    return sample_sd(r);
  };
  std::vector<double> ch_short, sig_short, ch_long, sig_long;
  const double sd_short = spread(1.0, 70000, ch_short, sig_short);
  const double sd_long = spread(10.0, 71000, ch_long, sig_long);
  const double scaling = (sd_short / sd_long) / std::sqrt(10.0);
  const double ch_ratio_short = sample_sd(ch_short) / mean_of(sig_short);
  const double ch_ratio_long = sample_sd(ch_long) / mean_of(sig_long);

  // Context only, not part of the pass rule: the same comparison with 2000 runs,
  // and how often an independent block of 50 runs leaves the 15% band.
  std::vector<double> ch_big, sig_big;
  for (int b = 0; b < 40; ++b) spread(10.0, 800000 + 50 * static_cast<std::uint64_t>(b), ch_big, sig_big);
  const double ch_ratio_big = sample_sd(ch_big) / mean_of(sig_big);
  int blocks_outside = 0;
  for (int b = 0; b < 40; ++b) {
    const std::vector<double> ch_b(ch_big.begin() + 50 * b, ch_big.begin() + 50 * (b + 1));
    const std::vector<double> sig_b(sig_big.begin() + 50 * b, sig_big.begin() + 50 * (b + 1));
    if (std::abs(sample_sd(ch_b) / mean_of(sig_b) - 1) > 0.15) ++blocks_outside;
  }

  Outcome out;
  out.pass = std::abs(scaling - 1) <= 0.2 && std::abs(ch_ratio_long - 1) <= 0.15;
  out.detail = fmt("sd(R) ratio over a decade / sqrt(10) = %.3f; empirical/Poisson sd(CH) = %.3f (duration 10), %.3f "
                   "(duration 1)",
                   scaling, ch_ratio_long, ch_ratio_short);
  out.data = {{"runs", runs},
              {"durations", {1.0, 10.0}},
              {"sd_r", {sd_short, sd_long}},
              {"scaling_ratio", scaling},
              {"empirical_over_poisson_sd_ch", {ch_ratio_short, ch_ratio_long}},
              {"criterion_uses_duration", 10.0},
              {"context_runs", ch_big.size()},
              {"context_empirical_over_poisson_sd_ch", ch_ratio_big},
              {"context_blocks_of_50_outside_15_percent", blocks_outside},
              {"context_blocks", 40}};
  out.detail += fmt("; with 2000 runs the ratio is %.3f and %g of 40 blocks of 50 fall outside 15%%", ch_ratio_big,
                    double(blocks_outside));
  return out;
}

// 8 ------------------------------------------------------------------------

Outcome reproducibility(const std::string& scratch) {
  const std::string fringe = scratch + "/acceptance_fringe.csv";
  const std::string run = scratch + "/acceptance_run.json";
  cli::run("--format csv --seed 3 fringe --f 0.4 > '" + fringe + "'");
  cli::run("--format json --seed 3 simulate --f 0.4 > '" + run + "'");
  const std::vector<std::string> cases = {
      "--format json predict --f 0.4 --angles 72.24,45,17.76,0",
      "--format csv predict --f 0.4 --mode singles --eta-1 0.8 --eta-2 0.8",
      "--format json optimize --f 0.4",
      "--format json scan-f --f-values 0,0.2,0.4,1",
      "--format json critical-eta --f 0.4",
      "--format json lhv",
      "--format json --seed 9 simulate --f 0.4 --noise-mix 0.05",
      "--format csv --seed 9 simulate --f 1",
      "--format csv --seed 9 fringe --f 0.4 --theta-fixed 90",
      "--format json calibrate-noise --f 0.4",
      "--format json fit --input '" + fringe + "'",
      "--format json analyze --input '" + run + "'",
      "--format json --seed 9 estimate-f --f 0.4",
      "--format table --seed 9 simulate --f 0.4",
  };
  int identical = 0;
  Json failed = Json::array();
  for (const auto& args : cases) {
    const auto a = cli::run(args);
    const auto b = cli::run(args);
    if (a.status == 0 && !a.out.empty() && a.out == b.out)
      ++identical;
    else
      failed.push_back(args);
  }
  std::remove(fringe.c_str());
  std::remove(run.c_str());
  Outcome out;
  out.pass = identical == static_cast<int>(cases.size());
  out.detail = fmt("%g/%g subcommand invocations byte-identical across two runs", identical, double(cases.size()));
  out.data = {{"invocations", cases.size()}, {"identical", identical}, {"failed", failed}};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string results_path = argc > 1 ? argv[1] : "acceptance_results.json";
  const std::string scratch = BELL_LAB_TMP;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"maximal-entanglement optimum", maximal_optimum},
      {"non-maximal optimum", weak_optimum},
      {"local hidden-variable bound", lhv_bound},
      {"detection-efficiency thresholds", thresholds},
      {"compatibility with the measured ratio", measured_ratio_compatibility},
      {"probability-model properties", probability_properties},
      {"Monte Carlo statistics", monte_carlo_statistics},
      {"reproducibility", [&] { return reproducibility(scratch); }},
  };

  Json results = Json::array();
  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    passed += o.pass;
    results.push_back({{"criterion", i + 1}, {"name", criteria[i].first}, {"pass", o.pass}, {"detail", o.detail},
                       {"data", o.data}});
  }
  std::ofstream(results_path) << Json{{"passed", passed}, {"total", criteria.size()}, {"criteria", results}}.dump(2)
                              << '\n';
  std::printf("%d/%zu criteria passed; details in %s\n", passed, criteria.size(), results_path.c_str());
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
