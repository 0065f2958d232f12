// bell-lab: command-line front end to the Bell-test library.
//
// Exit codes: 0 success, 1 usage error, 2 model/domain error, 3 non-convergence.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bell_lab/serialization.hpp"

namespace {

using bell_lab::Json;

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitNonConvergence = 3;

constexpr double kMaximalEntanglementThreshold = 0.81;
constexpr double kWeakEntanglementThreshold = 0.67;

struct GlobalFlags {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string format = "table";
  int precision = 6;
};

struct StateFlags {
  double f = 1.0;
  double f_imag = 0.0;
  void add(CLI::App* app) {
    app->add_option("--f", f, "amplitude ratio f of |HH> + f|VV> (real part)")->capture_default_str();
    app->add_option("--f-imag", f_imag, "imaginary part of f")->capture_default_str();
  }
  bell_lab::EntangledState<double> state() const { return bell_lab::EntangledState<double>({f, f_imag}); }
};

struct PolFlags {
  double par1 = 1, perp1 = 0, par2 = 1, perp2 = 0;
  void add(CLI::App* app) {
    app->add_option("--eps-par-1", par1, "arm 1 transmittance along the pass axis")->capture_default_str();
    app->add_option("--eps-perp-1", perp1, "arm 1 transmittance normal to the pass axis")->capture_default_str();
    app->add_option("--eps-par-2", par2, "arm 2 transmittance along the pass axis")->capture_default_str();
    app->add_option("--eps-perp-2", perp2, "arm 2 transmittance normal to the pass axis")->capture_default_str();
  }
  bell_lab::PolarizerModel<double> model() const { return {par1, perp1, par2, perp2}; }
};

struct DetFlags {
  double eta1 = 1, eta2 = 1, dark1 = 0, dark2 = 0;
  double pair_rate = 1, window = 0, duration = 1;
  void add(CLI::App* app) {
    app->add_option("--eta-1", eta1, "arm 1 detector efficiency")->capture_default_str();
    app->add_option("--eta-2", eta2, "arm 2 detector efficiency")->capture_default_str();
    app->add_option("--dark-1", dark1, "arm 1 dark-count rate (1/s)")->capture_default_str();
    app->add_option("--dark-2", dark2, "arm 2 dark-count rate (1/s)")->capture_default_str();
    app->add_option("--pair-rate", pair_rate, "pair production rate (1/s)")->capture_default_str();
    app->add_option("--window", window, "coincidence window (s)")->capture_default_str();
    app->add_option("--duration", duration, "integration time per setting (s)")->capture_default_str();
  }
  bell_lab::DetectionModel model() const {
    bell_lab::DetectionModel d;
    d.eta = {eta1, eta2};
    d.dark = {dark1, dark2};
    d.pair_rate = pair_rate;
    d.window = window;
    d.duration = duration;
    d.validate();
    return d;
  }
};

Json pol_json(const PolFlags& p) {
  return Json{{"eps_par_1", p.par1}, {"eps_perp_1", p.perp1}, {"eps_par_2", p.par2}, {"eps_perp_2", p.perp2}};
}

Json det_json(const DetFlags& d) {
  return Json{{"eta_1", d.eta1}, {"eta_2", d.eta2},         {"dark_1", d.dark1},     {"dark_2", d.dark2},
              {"pair_rate", d.pair_rate}, {"window", d.window}, {"duration", d.duration}};
}

bell_lab::AnalyzerQuad quad_from(const std::vector<double>& a) {
  if (a.size() != 4) throw CLI::ValidationError("--angles", "expects four comma-separated angles");
  return bell_lab::AnalyzerQuad(a[0], a[1], a[2], a[3]);
}

std::string format_number(const Json& v, int precision) {
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(precision) << v.get<double>();
    return os.str();
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out.emplace_back(prefix, j);
  }
}

/// Prints the resolved configuration and the result in the requested format.
/// `csv_body`, when set, replaces the key/value listing for csv output.
void emit(const GlobalFlags& g, const std::string& command, const Json& config, const Json& result,
          const std::function<void(std::ostream&)>& csv_body = {}) {
  std::ostream& os = std::cout;
  if (g.format == "json") {
    Json doc{{"command", command}, {"config", config}, {"result", result}};
    os << doc.dump(2) << '\n';
    return;
  }
  std::vector<std::pair<std::string, Json>> cfg, res;
  flatten(config, "", cfg);
  flatten(result, "", res);
  if (g.format == "csv") {
    os << "# command=" << command << '\n';
    for (const auto& [k, v] : cfg) os << "# " << k << '=' << format_number(v, 17) << '\n';
    if (csv_body) {
      csv_body(os);
    } else {
      os << "key,value\n";
      for (const auto& [k, v] : res) os << k << ',' << format_number(v, g.precision) << '\n';
    }
    return;
  }
  std::size_t width = 0;
  for (const auto& kv : cfg) width = std::max(width, kv.first.size());
  for (const auto& kv : res) width = std::max(width, kv.first.size());
  os << "bell-lab " << command << "\n\n[config]\n";
  for (const auto& [k, v] : cfg) os << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << format_number(v, g.precision) << '\n';
  os << "\n[result]\n";
  for (const auto& [k, v] : res) os << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << format_number(v, g.precision) << '\n';
}

Json global_json(const GlobalFlags& g) {
  return Json{{"seed", g.seed}, {"format", g.format}, {"precision", g.precision}};
}

std::string read_input(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path);
    if (!in) throw bell_lab::DomainError("cannot open input file '" + path + "'");
    ss << in.rdbuf();
  }
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bell-lab: Clauser-Horne analysis of |HH> + f|VV> photon pairs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "random seed (falls back to BELL_LAB_SEED, then 0)")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"json", "csv", "table"}))
      ->capture_default_str();
  app.add_option("--precision", g.precision, "significant digits for table/csv output")
      ->check(CLI::Range(1, 17))
      ->capture_default_str();

  int exit_code = 0;
  std::function<void()> action;

  // predict
  auto* predict = app.add_subcommand("predict", "expected CH terms, CH sum and R for given angles");
  StateFlags p_state;
  PolFlags p_pol;
  DetFlags p_det;
  std::vector<double> p_angles{67.5, 45.0, 22.5, 0.0};
  std::string p_mode = "coincidence";
  double p_noise = 0;
  p_state.add(predict);
  p_pol.add(predict);
  p_det.add(predict);
  predict->add_option("--angles", p_angles, "theta1,theta2,theta1',theta2' in degrees")->delimiter(',')->expected(4);
  predict->add_option("--mode", p_mode, "coincidence | singles")->check(CLI::IsMember({"coincidence", "singles"}));
  predict->add_option("--noise-mix", p_noise, "white-noise fraction")->capture_default_str();
  predict->callback([&] {
    action = [&] {
      const auto quad = quad_from(p_angles);
      const auto counts = bell_lab::qm_counts(p_state.state(), quad, p_pol.model(), p_det.model(),
                                              bell_lab::parse_mode(p_mode), p_noise);
      const auto report = bell_lab::ch_sum(counts);
      Json cfg = global_json(g);
      cfg["f_re"] = p_state.f;
      cfg["f_im"] = p_state.f_imag;
      cfg["quad"] = bell_lab::to_json(quad);
      cfg["polarizers"] = pol_json(p_pol);
      cfg["detection"] = det_json(p_det);
      cfg["mode"] = p_mode;
      cfg["noise_mix"] = p_noise;
      emit(g, "predict", cfg, Json{{"counts", bell_lab::to_json(counts)}, {"report", bell_lab::to_json(report)}});
    };
  });

  // optimize
  auto* optimize = app.add_subcommand("optimize", "CH-maximizing analyzer angles");
  StateFlags o_state;
  PolFlags o_pol;
  DetFlags o_det;
  std::string o_mode = "coincidence";
  bell_lab::OptimizerOptions o_opts;
  o_state.add(optimize);
  o_pol.add(optimize);
  o_det.add(optimize);
  optimize->add_option("--mode", o_mode, "coincidence | singles")->check(CLI::IsMember({"coincidence", "singles"}));
  optimize->add_option("--grid-step", o_opts.grid_step_deg, "coarse grid spacing (deg)")->capture_default_str();
  optimize->add_option("--starts", o_opts.starts, "grid cells refined")->capture_default_str();
  optimize->add_option("--budget", o_opts.budget, "simplex evaluation budget")->capture_default_str();
  optimize->callback([&] {
    action = [&] {
      const auto r = bell_lab::optimize_angles(o_state.state(), o_pol.model(), o_det.model(),
                                               bell_lab::parse_mode(o_mode), o_opts);
      Json cfg = global_json(g);
      cfg["f_re"] = o_state.f;
      cfg["f_im"] = o_state.f_imag;
      cfg["polarizers"] = pol_json(o_pol);
      cfg["detection"] = det_json(o_det);
      cfg["mode"] = o_mode;
      cfg["grid_step"] = o_opts.grid_step_deg;
      cfg["starts"] = o_opts.starts;
      cfg["budget"] = o_opts.budget;
      emit(g, "optimize", cfg, bell_lab::to_json(r));
      if (!r.converged) exit_code = kExitNonConvergence;
    };
  });

  // scan-f
  auto* scan = app.add_subcommand("scan-f", "optimum CH and R across a list of f values");
  std::vector<double> s_values{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  PolFlags s_pol;
  std::string s_mode = "coincidence";
  s_pol.add(scan);
  scan->add_option("--f-values", s_values, "comma-separated f values")->delimiter(',');
  scan->add_option("--mode", s_mode, "coincidence | singles")->check(CLI::IsMember({"coincidence", "singles"}));
  scan->callback([&] {
    action = [&] {
      const auto result = bell_lab::scan_f(s_values, s_pol.model(), bell_lab::parse_mode(s_mode));
      Json cfg = global_json(g);
      cfg["f_values"] = s_values;
      cfg["polarizers"] = pol_json(s_pol);
      cfg["mode"] = s_mode;
      Json entries = Json::array();
      bool all_converged = true;
      for (const auto& e : result.entries) {
        entries.push_back(Json{{"f", e.f}, {"optimum", bell_lab::to_json(e.result)}});
        all_converged = all_converged && e.result.converged;
      }
      Json res{{"entries", entries}, {"monotone_in_entanglement", result.monotone_in_entanglement}};
      emit(g, "scan-f", cfg, res, [&](std::ostream& os) {
        os << "f,theta1,theta2,theta1_prime,theta2_prime,ch_max,r_at_max,converged\n";
        os << std::setprecision(g.precision);
        for (const auto& e : result.entries) {
          const auto& q = e.result.quad;
          os << e.f << ',' << q.theta1() << ',' << q.theta2() << ',' << q.theta1_prime() << ','
             << q.theta2_prime() << ',' << e.result.ch_max << ',';
          if (e.result.r_at_max) os << *e.result.r_at_max;
          os << ',' << (e.result.converged ? 1 : 0) << '\n';
        }
      });
      if (!all_converged) exit_code = kExitNonConvergence;
    };
  });

  // critical-eta
  auto* crit = app.add_subcommand("critical-eta", "minimum symmetric detection efficiency for a CH violation");
  double c_f = 1.0, c_background = 0.0, c_tol = 1e-4;
  crit->add_option("--f", c_f, "real f in (0, 1]")->capture_default_str();
  crit->add_option("--background", c_background, "dark counts per emitted pair, per arm")->capture_default_str();
  crit->add_option("--tol", c_tol, "bisection tolerance on eta")->capture_default_str();
  crit->callback([&] {
    action = [&] {
      const auto t = bell_lab::critical_efficiency(c_f, c_background, c_tol);
      Json cfg = global_json(g);
      cfg["f"] = c_f;
      cfg["background"] = c_background;
      cfg["tol"] = c_tol;
      Json res = bell_lab::to_json(t);
      res["reference_threshold_maximal"] = kMaximalEntanglementThreshold;
      res["reference_threshold_weak_limit"] = kWeakEntanglementThreshold;
      emit(g, "critical-eta", cfg, res);
    };
  });

  // lhv
  auto* lhv = app.add_subcommand("lhv", "CH extrema over the 16 deterministic local strategies");
  lhv->callback([&] {
    action = [&] {
      const auto e = bell_lab::lhv_extrema();
      const auto strategies = bell_lab::local_strategies();
      Json list = Json::array();
      for (const auto& s : strategies)
        list.push_back(Json{{"a1", s.a1}, {"a2", s.a2}, {"b1", s.b1}, {"b2", s.b2}, {"ch", bell_lab::lhv_ch_value(s)}});
      Json res{{"max", e.max}, {"min", e.min}, {"argmax", e.argmax}, {"argmin", e.argmin}, {"strategies", list}};
      Json cfg = global_json(g);
      emit(g, "lhv", cfg, res, [&](std::ostream& os) {
        os << "a1,a2,b1,b2,ch\n";
        for (const auto& s : strategies)
          os << s.a1 << ',' << s.a2 << ',' << s.b1 << ',' << s.b2 << ',' << bell_lab::lhv_ch_value(s) << '\n';
      });
    };
  });

  // Shared by simulate / fringe / calibrate-noise / estimate-f.
  StateFlags m_state;
  PolFlags m_pol;
  DetFlags m_det;
  m_det.pair_rate = 1e4;
  m_det.duration = 10;
  std::vector<double> m_angles{67.5, 45.0, 22.5, 0.0};
  double m_noise = 0;
  std::string m_mode = "coincidence";
  auto add_sim_flags = [&](CLI::App* sub) {
    m_state.add(sub);
    m_pol.add(sub);
    m_det.add(sub);
    sub->add_option("--angles", m_angles, "theta1,theta2,theta1',theta2' in degrees")->delimiter(',')->expected(4);
    sub->add_option("--noise-mix", m_noise, "white-noise fraction")->capture_default_str();
    sub->add_option("--mode", m_mode, "coincidence | singles")->check(CLI::IsMember({"coincidence", "singles"}));
  };
  auto sim_config = [&] {
    bell_lab::SimConfig c;
    c.state = m_state.state();
    c.pol = m_pol.model();
    c.det = m_det.model();
    c.quad = quad_from(m_angles);
    c.seed = g.seed;
    c.noise_mix = m_noise;
    c.mode = bell_lab::parse_mode(m_mode);
    c.validate();
    return c;
  };
  auto sim_json = [&](const bell_lab::SimConfig& c) {
    Json cfg = global_json(g);
    cfg["simulation"] = bell_lab::to_json(c);
    return cfg;
  };

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo counting run over the six CH settings");
  add_sim_flags(simulate);
  simulate->callback([&] {
    action = [&] {
      const auto c = sim_config();
      const auto rec = bell_lab::simulate_run(c);
      emit(g, "simulate", sim_json(c), bell_lab::to_json(rec));
    };
  });

  auto* fringe = app.add_subcommand("fringe", "simulated fringe, one analyzer fixed");
  double fr_theta = 90.0, fr_point_duration = 1.0;
  int fr_arm = 1, fr_points = 36;
  add_sim_flags(fringe);
  fringe->add_option("--theta-fixed", fr_theta, "fixed analyzer angle (deg)")->capture_default_str();
  fringe->add_option("--arm-fixed", fr_arm, "arm holding the fixed analyzer")->check(CLI::IsMember({1, 2}))->capture_default_str();
  fringe->add_option("--points", fr_points, "number of scan points")->capture_default_str();
  fringe->add_option("--point-duration", fr_point_duration, "integration time per point (s)")->capture_default_str();
  fringe->callback([&] {
    action = [&] {
      const auto c = sim_config();
      const auto fr = bell_lab::simulate_fringe(c, bell_lab::AnalyzerAngle(fr_theta), fr_arm, fr_points, fr_point_duration);
      // Fringe data always uses the csv body for both csv and table output.
      if (g.format == "table") g.format = "csv";
      Json cfg = sim_json(c);
      cfg["theta_fixed"] = fr_theta;
      cfg["arm_fixed"] = fr_arm;
      cfg["points"] = fr_points;
      cfg["point_duration"] = fr_point_duration;
      Json pts = Json::array();
      for (Eigen::Index k = 0; k < fr.size(); ++k)
        pts.push_back(Json{{"angle_deg", fr.angle_deg(k)}, {"count", static_cast<std::int64_t>(fr.value(k))}});
      emit(g, "fringe", cfg, Json{{"points", pts}}, [&](std::ostream& os) { bell_lab::write_fringe_csv(os, fr); });
    };
  });

  auto* calibrate = app.add_subcommand("calibrate-noise", "noise_mix giving a target fringe visibility");
  double cal_target = 0.973, cal_theta = 90.0;
  int cal_arm = 1;
  add_sim_flags(calibrate);
  calibrate->add_option("--target-visibility", cal_target, "visibility to reproduce")->capture_default_str();
  calibrate->add_option("--theta-fixed", cal_theta, "fixed analyzer angle (deg)")->capture_default_str();
  calibrate->add_option("--arm-fixed", cal_arm, "arm holding the fixed analyzer")->check(CLI::IsMember({1, 2}))->capture_default_str();
  calibrate->callback([&] {
    action = [&] {
      const auto c = sim_config();
      const double m = bell_lab::calibrate_noise_mix(c, bell_lab::AnalyzerAngle(cal_theta), cal_arm, cal_target);
      Json cfg = sim_json(c);
      cfg["target_visibility"] = cal_target;
      cfg["theta_fixed"] = cal_theta;
      cfg["arm_fixed"] = cal_arm;
      emit(g, "calibrate-noise", cfg, Json{{"noise_mix", m}});
    };
  });

  auto* fit = app.add_subcommand("fit", "weighted cos^2 fit of a fringe CSV");
  std::string fit_input = "-";
  fit->add_option("--input", fit_input, "fringe CSV path, '-' for stdin")->capture_default_str();
  fit->callback([&] {
    action = [&] {
      std::istringstream in(read_input(fit_input));
      const auto fr = bell_lab::read_fringe_csv(in);
      const auto result = bell_lab::fit_fringe(fr);
      Json cfg = global_json(g);
      cfg["input"] = fit_input;
      cfg["points"] = fr.size();
      emit(g, "fit", cfg, bell_lab::to_json(result));
    };
  });

  auto* analyze = app.add_subcommand("analyze", "recompute CH and R from a simulate JSON record");
  std::string an_input = "-";
  analyze->add_option("--input", an_input, "run record JSON path, '-' for stdin")->capture_default_str();
  analyze->callback([&] {
    action = [&] {
      Json doc;
      try {
        doc = Json::parse(read_input(an_input));
      } catch (const nlohmann::json::exception& e) {
        throw bell_lab::DomainError(std::string("invalid JSON input: ") + e.what());
      }
      const auto rec = bell_lab::run_record_from_json(doc);
      const auto sextet = rec.sextet();
      const auto report = bell_lab::ch_sum(sextet);
      Json cfg = global_json(g);
      cfg["input"] = an_input;
      cfg["config_digest"] = rec.config_digest;
      emit(g, "analyze", cfg, Json{{"counts", bell_lab::to_json(sextet)}, {"report", bell_lab::to_json(report)}});
    };
  });

  auto* estimate = app.add_subcommand("estimate-f", "f from HH and VV coincidence counts");
  double e_hh = -1, e_vv = -1, e_duration = 10;
  add_sim_flags(estimate);
  estimate->add_option("--n-hh", e_hh, "coincidences at (90, 90); omit to simulate");
  estimate->add_option("--n-vv", e_vv, "coincidences at (0, 0); omit to simulate");
  estimate->add_option("--basis-duration", e_duration, "integration time per basis setting when simulating (s)")->capture_default_str();
  estimate->callback([&] {
    action = [&] {
      Json cfg = global_json(g);
      bell_lab::BasisCounts counts;
      if (e_hh >= 0 && e_vv >= 0) {
        counts = {e_hh, e_vv};
        cfg["source"] = "given";
      } else if (e_hh < 0 && e_vv < 0) {
        const auto c = sim_config();
        counts = bell_lab::simulate_basis_counts(c, e_duration);
        cfg = sim_json(c);
        cfg["source"] = "simulated";
        cfg["basis_duration"] = e_duration;
      } else {
        throw CLI::ValidationError("--n-hh/--n-vv", "give both counts or neither");
      }
      const auto est = bell_lab::estimate_f(counts);
      emit(g, "estimate-f", cfg,
           Json{{"n_hh", counts.n_hh}, {"n_vv", counts.n_vv}, {"f_hat", est.f_hat}, {"sigma_f", est.sigma_f}});
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e, std::cerr, std::cerr);
    return kExitUsage;
  }

  if (!g.seed_given) {
    if (const char* env = std::getenv("BELL_LAB_SEED")) {
      try {
        std::size_t used = 0;
        g.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        std::cerr << "error: BELL_LAB_SEED must be an unsigned integer\n";
        return kExitUsage;
      }
    }
  }

  try {
    action();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const bell_lab::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return exit_code;
}
