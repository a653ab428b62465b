#pragma once

#include <iosfwd>

#include "chirpctl/explorer.hpp"
#include "chirpctl/geometry.hpp"
#include "chirpctl/robustness.hpp"
#include "json.hpp"

namespace chirpctl {

// Structured records. Pulse specs carry both dimensionless and physical views.
void to_json(nlohmann::json& j, const PulseSpec& spec);
void to_json(nlohmann::json& j, const RobustnessReport& report);
void to_json(nlohmann::json& j, const RobustPoint& point);
void to_json(nlohmann::json& j, const RobustLine& line);
void to_json(nlohmann::json& j, const LogisticFit& fit);
void to_json(nlohmann::json& j, const CuspReport& report);
void to_json(nlohmann::json& j, const GridMap2D& map);

// Delimited text. Numbers use fixed formats so reruns are byte-identical.
void write_fidelity_curve(std::ostream& os, const FidelityCurve& curve);
// First row: axis names then axis2 samples; each further row: axis1 sample
// then values. Masked nodes are written as nan.
void write_grid(std::ostream& os, const GridMap2D& map);
void write_robust_line(std::ostream& os, const RobustLine& line);

}  // namespace chirpctl
