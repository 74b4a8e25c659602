#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "tfe/network.h"

namespace tfe {

// Network document: stops[], lines[], grid, wait_weight, congestion.
// All times in the document are minutes.
network_spec parse_network(nlohmann::json const& doc);
nlohmann::json to_json(network_spec const& spec);

network_spec read_network(std::filesystem::path const& path);
void write_network(std::filesystem::path const& path, network_spec const& spec);

}  // namespace tfe
