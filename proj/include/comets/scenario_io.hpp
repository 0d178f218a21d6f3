// Scenario file reader/writer. Parsing is strict: unknown keys, wrong types
// and out-of-range structural ids are reported as ParseError with a JSON path.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "comets/network_model.hpp"

namespace comets {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace comets
