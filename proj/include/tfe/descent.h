#pragma once

#include <vector>

#include "tfe/loading.h"
#include "tfe/network.h"
#include "tfe/strategy.h"

namespace tfe {

// Expected cost to one destination for every (node, arrival state).
// Queuing states exist for every tau in [0, h]; rider states for every line
// arriving at the node.
class value_function {
public:
  value_function() = default;
  value_function(te_network const& net, stop_idx destination);

  stop_idx destination() const { return destination_; }

  double wait(node_idx n, time_idx tau) const {
    return wait_[wait_begin_[n] + static_cast<std::size_t>(tau)];
  }
  double& wait(node_idx n, time_idx tau) {
    return wait_[wait_begin_[n] + static_cast<std::size_t>(tau)];
  }
  // phi for a rider of line l at n; l must arrive at n.
  double rider(node_idx n, line_idx l) const;
  double& rider(node_idx n, line_idx l);
  bool continues(node_idx n, line_idx l) const;
  void set_continues(node_idx n, line_idx l, bool c);

  double at(node_idx n, arrival_state s) const {
    return s.waiting() ? wait(n, s.tau_) : rider(n, s.line_);
  }

private:
  std::size_t rider_slot(node_idx n, line_idx l) const;

  te_network const* net_{nullptr};
  stop_idx destination_{0};
  std::vector<std::size_t> wait_begin_;
  std::vector<double> wait_;
  std::vector<std::size_t> rider_begin_;
  std::vector<double> rider_;
  std::vector<std::uint8_t> continue_;
};

struct descent_result {
  strategy strategy_;
  value_function phi_;
};

// Backward dynamic program over the loaded network with link costs frozen
// at load.cost_. Queuing users sort their outgoing links by expected cost
// and board in that order; riders compare staying aboard with alighting.
descent_result descent_direction(te_network const& net, load_result const& load,
                                 stop_idx destination);

// pi of a link for a user queuing with rank tau: link cost plus expected
// cost in the state the user enters at the head.
double link_value(te_network const& net, load_result const& load,
                  value_function const& phi, link_idx a, time_idx tau);

// Expected cost of a preference set given its access probabilities.
double expected_cost(te_network const& net, load_result const& load,
                     value_function const& phi, node_idx n, time_idx tau,
                     std::span<link_idx const> prefs);

}  // namespace tfe
