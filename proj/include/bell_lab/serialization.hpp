#pragma once

// JSON and CSV forms of the library's records. JSON keys are snake_case and
// emitted in a fixed order.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "bell_lab/experiment_sim.hpp"
#include "bell_lab/fringe_fit.hpp"
#include "bell_lab/optimizer.hpp"

namespace bell_lab {

using Json = nlohmann::ordered_json;

Json to_json(const AnalyzerQuad& quad);
Json to_json(const CountsSextet& counts);
Json to_json(const CHReport& report);
Json to_json(const OptimizationResult& result);
Json to_json(const EfficiencyThreshold& threshold);
Json to_json(const FringeFit& fit);
Json to_json(const SimConfig& config);
Json to_json(const RunRecord& record);

/// Accepts either a bare run record or a document with the record under "result".
RunRecord run_record_from_json(const Json& doc);

std::string mode_name(CountMode mode);
CountMode parse_mode(const std::string& name);

/// CSV with header "angle_deg,count"; values are written as integers when integral.
void write_fringe_csv(std::ostream& os, const Fringe& fringe, int precision = 17);

/// Reads "angle_deg,<value>" CSV; lines starting with '#' are skipped.
Fringe read_fringe_csv(std::istream& is);

}  // namespace bell_lab
