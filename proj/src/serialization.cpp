#include "bell_lab/serialization.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace bell_lab {
namespace {

constexpr std::array<const char*, 6> kTermNames = {"n_ab", "n_ab_prime", "n_a_prime_b",
                                                   "n_a_prime_b_prime", "n_a_prime_inf", "n_inf_b"};

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json sextet_values(const CountsSextet::Vector6d& v) {
  Json j = Json::object();
  for (std::size_t i = 0; i < 6; ++i) j[kTermNames[i]] = v(static_cast<Eigen::Index>(i));
  return j;
}

CountsSextet::Vector6d sextet_from(const Json& j) {
  CountsSextet::Vector6d v;
  for (std::size_t i = 0; i < 6; ++i) v(static_cast<Eigen::Index>(i)) = j.at(kTermNames[i]).get<double>();
  return v;
}

std::optional<double> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string mode_name(CountMode mode) {
  return mode == CountMode::kSingles ? "singles" : "coincidence";
}

CountMode parse_mode(const std::string& name) {
  if (name == "coincidence" || name == "coincidence-normalized") return CountMode::kCoincidenceNormalized;
  if (name == "singles") return CountMode::kSingles;
  throw DomainError("unknown count mode '" + name + "'");
}

Json to_json(const AnalyzerQuad& q) {
  return Json{{"theta1", q.theta1()}, {"theta2", q.theta2()}, {"theta1_prime", q.theta1_prime()},
              {"theta2_prime", q.theta2_prime()}};
}

Json to_json(const CountsSextet& counts) {
  Json j = sextet_values(counts.values());
  j["sigma"] = counts.sigma() ? sextet_values(*counts.sigma()) : Json(nullptr);
  return j;
}

Json to_json(const CHReport& r) {
  return Json{{"ch", r.ch}, {"sigma_ch", optional_number(r.sigma_ch)}, {"r", optional_number(r.r)},
              {"sigma_r", optional_number(r.sigma_r)}};
}

Json to_json(const OptimizationResult& r) {
  return Json{{"quad", to_json(r.quad)},
              {"ch_max", r.ch_max},
              {"r_at_max", optional_number(r.r_at_max)},
              {"evaluations", r.evaluations},
              {"grid_points", r.grid_points},
              {"converged", r.converged}};
}

Json to_json(const EfficiencyThreshold& t) {
  return Json{{"f", t.f},
              {"background", t.background},
              {"eta_star", t.eta_star},
              {"tol", t.tol},
              {"quad_at_threshold", to_json(t.quad_at_threshold)},
              {"g_below", t.g_below},
              {"g_above", t.g_above},
              {"iterations", t.iterations}};
}

Json to_json(const FringeFit& fit) {
  return Json{{"amplitude", fit.amplitude},
              {"offset", fit.offset},
              {"phase_deg", fit.phase_deg},
              {"visibility", fit.visibility},
              {"sigma_visibility", fit.sigma_visibility},
              {"chi2", fit.chi2},
              {"dof", fit.dof}};
}

Json to_json(const SimConfig& c) {
  const auto& p1 = c.pol.arm(1);
  const auto& p2 = c.pol.arm(2);
  return Json{{"f_re", c.state.f().real()},
              {"f_im", c.state.f().imag()},
              {"eps_par_1", p1.par},
              {"eps_perp_1", p1.perp},
              {"eps_par_2", p2.par},
              {"eps_perp_2", p2.perp},
              {"eta_1", c.det.eta[0]},
              {"eta_2", c.det.eta[1]},
              {"dark_1", c.det.dark[0]},
              {"dark_2", c.det.dark[1]},
              {"pair_rate", c.det.pair_rate},
              {"window", c.det.window},
              {"duration", c.det.duration},
              {"quad", to_json(c.quad)},
              {"seed", c.seed},
              {"noise_mix", c.noise_mix},
              {"mode", mode_name(c.mode)}};
}

Json to_json(const RunRecord& rec) {
  Json counts = Json::object();
  for (std::size_t i = 0; i < 6; ++i) counts[kTermNames[i]] = rec.counts[i];
  return Json{{"config_digest", rec.config_digest},
              {"seed", rec.seed},
              {"duration", rec.duration},
              {"pair_rate", rec.pair_rate},
              {"counts", counts},
              {"expected", sextet_values(rec.expected.values())},
              {"report", to_json(rec.report)}};
}

RunRecord run_record_from_json(const Json& doc) {
  const Json& j = doc.contains("result") ? doc.at("result") : doc;
  try {
    RunRecord rec;
    rec.config_digest = j.at("config_digest").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.duration = j.at("duration").get<double>();
    rec.pair_rate = j.at("pair_rate").get<double>();
    const Json& counts = j.at("counts");
    for (std::size_t i = 0; i < 6; ++i) {
      rec.counts[i] = counts.at(kTermNames[i]).get<std::int64_t>();
      if (rec.counts[i] < 0) throw DomainError("run record counts must be non-negative");
    }
    rec.expected = CountsSextet(sextet_from(j.at("expected")));
    const Json& r = j.at("report");
    rec.report.ch = r.at("ch").get<double>();
    rec.report.sigma_ch = optional_from(r, "sigma_ch");
    rec.report.r = optional_from(r, "r");
    rec.report.sigma_r = optional_from(r, "sigma_r");
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed run record: ") + e.what());
  }
}

void write_fringe_csv(std::ostream& os, const Fringe& fringe, int precision) {
  os << "angle_deg,count\n";
  std::ostringstream line;
  line << std::setprecision(precision);
  for (Eigen::Index k = 0; k < fringe.size(); ++k) {
    line.str("");
    line << fringe.angle_deg(k) << ',';
    const double v = fringe.value(k);
    if (v == std::floor(v) && std::abs(v) < 9e15)
      line << static_cast<long long>(v);
    else
      line << v;
    os << line.str() << '\n';
  }
}

Fringe read_fringe_csv(std::istream& is) {
  std::vector<double> angles, values;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("angle_deg,", 0) != 0) throw DomainError("fringe CSV must start with header angle_deg,count");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("malformed fringe CSV line: " + line);
    try {
      std::size_t used = 0;
      const double a = std::stod(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      const double v = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing characters");
      angles.push_back(a);
      values.push_back(v);
    } catch (const std::exception&) {
      throw DomainError("malformed fringe CSV line: " + line);
    }
  }
  if (!header_seen) throw DomainError("fringe CSV is empty");
  Fringe f;
  f.angle_deg = Eigen::Map<const Eigen::ArrayXd>(angles.data(), static_cast<Eigen::Index>(angles.size()));
  f.value = Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return f;
}

}  // namespace bell_lab
