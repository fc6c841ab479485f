#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrlink/protocol.hpp"
#include "corrlink/region.hpp"
#include "corrlink/verifier.hpp"

namespace corrlink {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

json census_to_json(const QueueCensus& census);
json report_to_json(const SimReport& report);
json region_to_json(const RateRegion& region);
json pmf_to_json(const std::array<double, 16>& prob); // keys "a11a12a21a22"
json rank_ratio_to_json(const RankRatioEstimate& est);
json stores_to_json(const std::vector<EquationStore>& stores);

/* Reproducibility sidecar embedded in JSON payloads and written next to CSV
 * outputs. The embedded form carries no timestamp so identical runs stay
 * byte-identical; the sidecar file adds one. */
json make_manifest(const std::string& subcommand, const json& parameters, uint64_t seed,
                   const std::vector<std::string>& outputs);
json with_timestamp(json manifest);

std::string render_json(const json& value); // pretty, trailing newline

/* Shortest decimal that parses back to the same double. */
std::string fmt_double(double value);

/* RFC-4180 style tables: CRLF line ends, header row first. */
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string boundary_to_csv(const std::vector<RatePoint>& points);

void write_text_file(const std::string& path, const std::string& content);

} // namespace corrlink
