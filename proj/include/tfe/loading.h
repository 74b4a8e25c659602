#pragma once

#include <compare>
#include <span>
#include <vector>

#include "tfe/network.h"
#include "tfe/strategy.h"

namespace tfe {

// Flow identity on a link or at a node. `group_` is the OD index when the
// loading keeps ODs apart, -1 when ODs sharing a strategy are merged.
struct flow_key {
  std::int32_t group_{-1};
  strategy_idx strategy_{0};
  line_idx line_{kWaitLine};
  time_idx tau_{0};

  arrival_state state() const { return {line_, tau_}; }
  friend auto operator<=>(flow_key const&, flow_key const&) = default;
};

struct packet {
  flow_key key_;
  double flow_{0.0};
};

// One pass of the boarding rule over a cohort. Vectors are indexed by the
// node's outgoing run segments (out_links order).
struct loading_round {
  std::vector<double> remaining_;  // capacity left at round start
  std::vector<double> demand_;     // first-choice demand
  double delta_{kInf};
  link_idx saturated_{kNoLink};    // kNoLink: cohort fully served
};

struct cohort_trace {
  time_idx tau_{0};
  std::vector<loading_round> rounds_;
  std::vector<double> remaining_after_;
};

struct node_trace {
  std::vector<double> continuing_;  // continuance load per run segment
  std::vector<double> remaining_after_continuance_;
  std::vector<cohort_trace> cohorts_;  // ascending tau
};

struct load_result {
  std::vector<double> volume_;  // V_a
  std::vector<double> cost_;    // c_a(V_a)
  // Flow on each link, keyed by the state it arrives in at the head node.
  std::vector<std::vector<packet>> link_flows_;
  // Per node: fresh departures, flow absorbed at its destination, and flow
  // that cannot move on at the end of the horizon.
  std::vector<std::vector<packet>> departed_;
  std::vector<std::vector<packet>> absorbed_;
  std::vector<std::vector<packet>> unfinished_;
  std::vector<node_trace> trace_;
  bool per_od_{false};

  double total_unfinished() const;
  // Inflow plus departures at n, merged by key.
  std::vector<packet> node_flows(te_network const& net, node_idx n) const;
};

// Empty loading of a network: no flow, full capacities, free-flow costs.
load_result empty_load(te_network const& net);

struct load_options {
  bool per_od_{false};
};

// Hyperpath flow loading with continuance priority and FIFO cohorts.
load_result load_flows(te_network const& net, strategy_pool const& pool,
                       demand_vector const& demand, hyperpath_flow const& flow,
                       load_options opt = {});

// Below this remaining capacity a run segment counts as full.
inline constexpr double kFullEps = 1e-9;

// Split of an infinitesimal queuing user with FIFO rank tau over `prefs` at
// node n. The residual that cannot board goes to the waiting link, or to
// kNoLink at the last time point. Entries are in preference order, waiting
// link (or kNoLink) last, zero masses dropped.
std::vector<std::pair<link_idx, double>> access_probabilities(
    te_network const& net, load_result const& load, node_idx n, time_idx tau,
    std::span<link_idx const> prefs);

// How one unit in `state` at non-destination node n leaves it under s.
// Queuing users leaving by the waiting link keep rank queue_tau_.
struct node_split {
  time_idx queue_tau_{0};
  std::vector<std::pair<link_idx, double>> links_;
};
node_split split_unit(te_network const& net, strategy const& s,
                      load_result const& load, node_idx n,
                      arrival_state state);

// Where one unit of flow entering (n, state) under strategy s ends up. With
// all_or_nothing the unit follows the most likely link at every split.
struct unit_flow {
  std::vector<std::pair<link_idx, double>> links_;  // sorted by link
  std::vector<std::pair<node_idx, double>> arrivals_;  // at the destination
  double unfinished_{0.0};
};
unit_flow propagate_unit(te_network const& net, strategy const& s,
                         load_result const& load, node_idx n,
                         arrival_state state, bool all_or_nothing = false);

}  // namespace tfe
