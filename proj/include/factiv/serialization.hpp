#pragma once

#include <string>

#include <json.hpp>

#include "factiv/cell_table.hpp"
#include "factiv/oracle.hpp"

namespace factiv {

// Moments file: field names follow the published-table layout so reported
// numbers paste in directly. See README for the schema.
MomentsSpec moments_from_json(const nlohmann::json& j);
nlohmann::json moments_to_json(const MomentsSpec& spec);
MomentsSpec load_moments_file(const std::string& path);

namespace oracle {

PopulationSpec population_spec_from_json(const nlohmann::json& j);
nlohmann::json population_spec_to_json(const PopulationSpec& spec);
PopulationSpec load_population_spec_file(const std::string& path);

}  // namespace oracle

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace factiv
