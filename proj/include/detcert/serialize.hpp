#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "detcert/detectability.hpp"
#include "detcert/observer.hpp"

namespace detcert {

// Structured-text descriptions, e.g. {"variant":"power","a":2.0,"b":1.0},
// {"variant":"log_affine","a":1.0}, {"variant":"sum","weights":[..],
// "terms":[..]}, {"variant":"tabulated","csv":"knots.csv","tail_exponent":1.0}.
// Shorthand strings are accepted where a function is expected: "identity",
// "power:a:b", "log_affine:a". Tabulated knot tables live in two-column CSVs
// resolved relative to base_dir.
nlohmann::json comparison_to_json(const ComparisonFunction& f);
ComparisonFunction comparison_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

nlohmann::json ioss_certificate_to_json(const IossCertificate& c);
IossCertificate ioss_certificate_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

nlohmann::json lyap_certificate_to_json(const LyapCertificate& c);
LyapCertificate lyap_certificate_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

nlohmann::json rgas_certificate_to_json(const RgasCertificate& c);
RgasCertificate rgas_certificate_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

// witness scenario: states inline, signals as CSV references
void write_scenario(const std::string& dir, const std::string& tag, const TrajectoryPairScenario& sc);
TrajectoryPairScenario read_scenario(const std::string& json_path);

// FNV-1a over the canonical dump, hex-printed; used for run manifests
std::string json_hash(const nlohmann::json& j);

// 12 significant digits, the toolbox-wide numeric text format
std::string format_double(double v);

}  // namespace detcert
