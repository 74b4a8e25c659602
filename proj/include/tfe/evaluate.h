#pragma once

#include <span>
#include <vector>

#include "json.hpp"

#include "tfe/scenario.h"

namespace tfe {

// Totals per physical segment (from, to) over all runs and times.
struct segment_total {
  stop_idx from_{0};
  stop_idx to_{0};
  double truth_{0.0};
  double estimate_{0.0};
};

struct evaluation_report {
  int n_segments_{0};
  double mean_truth_{0.0};
  double mean_estimate_{0.0};
  double std_error_{0.0};
  double are_{0.0};  // over segments with positive truth
  double mse_minute_od_{0.0};
  double mse_hourly_od_{0.0};
  double mse_ridership_{0.0};
  std::vector<segment_total> segments_;

  nlohmann::json to_json() const;
};

// Ridership lists must cover the same run segments and demand vectors the
// same ODs (missing ODs count as zero). `hour_units` is the number of time
// units per hour. Throws input_error on mismatched segment sets.
evaluation_report evaluate(std::span<segment_flow const> estimated_ridership,
                           std::span<segment_flow const> true_ridership,
                           demand_vector const& estimated_demand,
                           demand_vector const& true_demand, int hour_units);

}  // namespace tfe
