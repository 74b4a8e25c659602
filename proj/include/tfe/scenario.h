#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tfe/equilibrium.h"
#include "tfe/measurement.h"
#include "tfe/network.h"
#include "tfe/strategy.h"

namespace tfe {

// Perception noise on hyperpath costs: perceived c' = c exp(sigma Z) with
// sigma^2 = variance, then logit shares proportional to exp(-theta c').
struct noise_spec {
  bool enabled_{false};
  double variance_{0.0};
  double theta_{0.1};
};

struct scenario {
  std::string name_;
  network_spec network_;
  demand_vector demand_;  // ground truth
  noise_spec noise_;
  std::uint64_t seed_{1};
  std::vector<stop_idx> measured_;  // empty: every stop
  channel_mask channels_;
  // Candidate OD set for estimation; empty means every stop pair times
  // every departure in [demand_begin_, demand_end_).
  std::vector<od_triple> candidates_;
  time_idx demand_begin_{0};
  time_idx demand_end_{0};

  std::vector<od_triple> candidate_set() const;
};

scenario make_example41();

// Reads the route file (data/sioux_falls/network.json by default).
scenario make_sioux_falls();
scenario make_sioux_falls(std::filesystem::path const& network_file);

// One run segment with its load.
struct segment_flow {
  line_idx line_{0};
  int run_{0};
  stop_idx from_{0};
  stop_idx to_{0};
  time_idx depart_{0};
  double flow_{0.0};
};
std::vector<segment_flow> ridership(te_network const& net,
                                    load_result const& load);

struct ground_truth {
  equilibrium_result equilibrium_;
  point_counts counts_;
  std::vector<segment_flow> ridership_;
  demand_vector demand_;
};

struct simulate_config {
  double epsilon_{0.005};
  int max_inner_{200};
};

ground_truth forward_simulate(te_network const& net, scenario const& sc,
                              simulate_config const& cfg = {});

// Logit shares over strategies of one OD from perturbed costs.
std::vector<double> perturb_demand_choice(std::span<double const> costs,
                                          noise_spec const& noise,
                                          std::mt19937_64& rng);

}  // namespace tfe
