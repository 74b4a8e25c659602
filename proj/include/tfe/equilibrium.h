#pragma once

#include <map>
#include <vector>

#include "tfe/descent.h"
#include "tfe/loading.h"
#include "tfe/strategy.h"

namespace tfe {

// (1 - 1/n) f + (1/n) g. Throws contract_violation if f and g carry
// different demand.
hyperpath_flow msa_step(hyperpath_flow const& f, hyperpath_flow const& g,
                        int n);

// Sum over links of loaded cost times volume.
double total_cost(load_result const& load);

// |C_f - C_g| / C_f; 0 when both vanish, +inf when only C_f does.
double relative_gap(double c_f, double c_g);

// Expected cost of following s from (origin, departure) under the loading.
// +inf if part of the unit cannot reach the destination.
double strategy_cost(te_network const& net, strategy const& s,
                     load_result const& load, od_triple const& od);

struct iteration_record {
  int iteration_{0};
  double cost_f_{0.0};
  double cost_g_{0.0};
  double gap_{0.0};
};

struct equilibrium_config {
  double epsilon_{0.005};
  int max_inner_{200};
  bool per_od_{false};
  // Destinations that need a best-response strategy at the final loading
  // even without demand (probe columns for estimation).
  std::vector<stop_idx> extra_destinations_;
};

// Starting point carried across calls: strategy shares per OD plus a
// fallback strategy per destination for ODs without shares.
struct warm_start {
  strategy_pool pool_;
  std::vector<std::vector<std::pair<strategy_idx, double>>> shares_;
  std::map<stop_idx, strategy_idx> fallback_;
  int step_{1};
};

struct equilibrium_result {
  strategy_pool pool_;
  hyperpath_flow flow_;
  load_result load_;
  std::vector<iteration_record> log_;
  bool converged_{false};
  // Best response per destination at the final loading.
  std::map<stop_idx, strategy_idx> best_;
  std::map<stop_idx, value_function> phi_;
  // Shares after one more averaging step towards best_, and the step
  // index that step would use next. See continue_from.
  std::vector<std::vector<std::pair<strategy_idx, double>>> next_shares_;
  int next_step_{1};
};

// Warm start that resumes averaging where `r` stopped; consumes r's pool.
warm_start continue_from(equilibrium_result&& r);

equilibrium_result solve_equilibrium(te_network const& net,
                                     demand_vector const& demand,
                                     equilibrium_config const& cfg,
                                     warm_start const* start = nullptr);

// Physical path flows: stop sequence plus the boarded runs, per OD.
struct path_flow {
  std::size_t od_{0};
  std::vector<stop_idx> stops_;
  std::vector<std::pair<line_idx, int>> runs_;
  double flow_{0.0};
};
std::vector<path_flow> realize_paths(te_network const& net,
                                     strategy_pool const& pool,
                                     demand_vector const& demand,
                                     hyperpath_flow const& flow,
                                     load_result const& load);

}  // namespace tfe
