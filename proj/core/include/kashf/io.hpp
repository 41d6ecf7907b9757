#pragma once

#include <filesystem>
#include <string>

#include "kashf/ecosystem.hpp"

namespace kashf {

std::string scenario_to_json(const Scenario& scenario);
/// Throws Error("parse") on malformed input and Error("invalid_scenario") when
/// the decoded scenario violates an invariant.
Scenario scenario_from_json(const std::string& text);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace kashf
