#pragma once

#include <vector>

#include "tfe/loading.h"
#include "tfe/strategy.h"

namespace tfe {

struct oracle_config {
  int steps_{200};          // simplex grid resolution 1/steps
  int refine_passes_{2};    // each pass zooms 10x around the incumbent
  long max_points_{200000};  // refusal threshold per pass
  int max_strategies_{6};   // per OD
};

struct oracle_result {
  strategy_pool pool_;
  hyperpath_flow flow_;
  load_result load_;
  // Largest cost advantage any used strategy leaves to a unilateral switch.
  double score_{0.0};
};

// Enumerates mixtures of the given candidate strategies per OD on a simplex
// grid, loads each one, and keeps the mixture with the smallest deviation
// advantage (ties: lexicographically smallest mixture). For tests only.
// Throws scenario_error when the instance is too large to enumerate.
oracle_result brute_force_equilibrium_oracle(
    te_network const& net, demand_vector const& demand,
    std::vector<std::vector<strategy>> const& candidates,
    oracle_config const& cfg = {});

}  // namespace tfe
