#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tfe/aum.h"
#include "tfe/equilibrium.h"
#include "tfe/measurement.h"
#include "tfe/scenario.h"

namespace tfe {

namespace fs = std::filesystem;

// Writes to a temporary sibling and renames on success, so a failed
// command never leaves a partial file behind.
void write_file_atomic(fs::path const& path, std::string const& content);

std::string format_flow(double v);

// Header row plus comma separated values, LF endings.
struct csv_table {
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};
csv_table read_csv(fs::path const& path);
std::string to_csv(csv_table const& t);

demand_vector read_demand(fs::path const& path);
void write_demand(fs::path const& path, demand_vector const& d,
                  char const* value_column = "quantity");

std::vector<measurement> read_counts(fs::path const& path);
void write_counts(fs::path const& path, std::vector<measurement> const& rows);

std::vector<segment_flow> read_ridership(fs::path const& path);
void write_ridership(fs::path const& path,
                     std::vector<segment_flow> const& rows);

void write_gap_log(fs::path const& path,
                   std::vector<iteration_record> const& log);
void write_trajectory(fs::path const& path,
                      std::vector<aum_record> const& traj);

// Scenario bundle: network.json, demand.csv, scenario.json (noise, seed,
// measured stops, channels, candidate window).
void write_bundle(fs::path const& dir, scenario const& sc);
scenario read_bundle(fs::path const& dir);

}  // namespace tfe
