#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "tfe/network.h"
#include "tfe/types.h"

namespace tfe {

// Line the user arrived on (kWaitLine when queuing) and the FIFO rank tau.
struct arrival_state {
  line_idx line_{kWaitLine};
  time_idx tau_{0};

  bool waiting() const { return line_ == kWaitLine; }
  friend bool operator==(arrival_state, arrival_state) = default;
};

// Hyperpath towards one destination: for every (node, arrival state) an
// ordered preference set of outgoing links. Riders of a line may instead
// keep their seat (continuance priority); their set is then the singleton
// continuation link.
//
// Queuing states are stored run-length encoded over tau, since the
// preference set of a node rarely depends on how long the user has waited.
class strategy {
public:
  struct decision {
    bool defined_{false};
    bool continues_{false};
    std::span<link_idx const> prefs_;
  };

  stop_idx destination() const { return destination_; }
  node_idx n_nodes() const {
    return static_cast<node_idx>(wait_begin_.size()) - 1;
  }

  decision lookup(node_idx n, arrival_state s) const;

  std::size_t hash() const { return hash_; }
  friend bool operator==(strategy const&, strategy const&);

  // Debug export: [{node, line, tau_from, continues, links}].
  nlohmann::json to_json(te_network const& net) const;

  struct wait_entry {
    time_idx tau_begin_;
    std::uint32_t pref_;
  };
  struct line_entry {
    line_idx line_;
    std::uint32_t pref_;
    bool continues_;
  };
  static constexpr std::uint32_t kUndefined = UINT32_MAX;

  std::span<wait_entry const> wait_entries(node_idx n) const {
    return {wait_.data() + wait_begin_[n], wait_.data() + wait_begin_[n + 1]};
  }
  std::span<line_entry const> line_entries(node_idx n) const {
    return {line_.data() + line_begin_[n], line_.data() + line_begin_[n + 1]};
  }
  std::span<link_idx const> pref(std::uint32_t id) const {
    return {pool_.data() + pool_begin_[id], pool_.data() + pool_begin_[id + 1]};
  }

private:
  friend class strategy_builder;

  stop_idx destination_{0};
  std::vector<std::uint32_t> pool_begin_;
  std::vector<link_idx> pool_;
  std::vector<std::size_t> wait_begin_;
  std::vector<wait_entry> wait_;
  std::vector<std::size_t> line_begin_;
  std::vector<line_entry> line_;
  std::size_t hash_{0};
};

class strategy_builder {
public:
  strategy_builder(stop_idx destination, node_idx n_nodes);

  // Queuing states must be set with non-decreasing tau per node. An empty
  // preference set marks the state as undefined (unreachable / infinite).
  void set_wait(node_idx n, time_idx tau, std::span<link_idx const> prefs);
  void set_line(node_idx n, line_idx l, bool continues,
                std::span<link_idx const> prefs);

  strategy finish() &&;

private:
  std::uint32_t intern(std::span<link_idx const> prefs);

  struct vec_hash {
    std::size_t operator()(std::vector<link_idx> const& v) const;
  };

  stop_idx destination_;
  std::vector<std::vector<strategy::wait_entry>> wait_;
  std::vector<std::vector<strategy::line_entry>> line_;
  std::vector<std::vector<link_idx>> pool_;
  std::unordered_map<std::vector<link_idx>, std::uint32_t, vec_hash> ids_;
};

// Free-flow strategy: all outgoing links with finite uncongested distance to
// the destination, sorted by link cost plus downstream distance. Riders keep
// their seat when their own continuation link ranks first.
// Throws scenario_error if no node can reach the destination.
strategy initial_strategy(te_network const& net, stop_idx destination);

// Uncongested shortest cost from every node to the destination.
std::vector<double> free_flow_distance(te_network const& net,
                                       stop_idx destination);

// Time-invariant rule strategy: at a stop, riders of a line either stay or
// alight; queuing users board the first run of any listed line departing
// now, otherwise wait. Used to state candidate hyperpaths by hand.
struct line_rule {
  stop_idx stop_;
  line_idx line_;  // kWaitLine: rule for queuing users
  bool continues_{false};
  std::vector<line_idx> board_;  // for queuing users
};
strategy make_line_strategy(te_network const& net, stop_idx destination,
                            std::span<line_rule const> rules);

// Strategies deduplicated by structure.
class strategy_pool {
public:
  strategy_idx add(strategy s);
  strategy const& operator[](strategy_idx i) const { return strategies_[i]; }
  strategy_idx size() const {
    return static_cast<strategy_idx>(strategies_.size());
  }

private:
  std::vector<strategy> strategies_;
  std::unordered_multimap<std::size_t, strategy_idx> by_hash_;
};

struct demand_vector {
  std::vector<od_triple> ods_;
  std::vector<double> values_;

  std::size_t size() const { return ods_.size(); }
  double total() const;
};

// Flow per (OD index, strategy). Entries are kept sorted by strategy id.
struct hyperpath_flow {
  std::vector<std::vector<std::pair<strategy_idx, double>>> flows_;

  double od_total(std::size_t w) const;
  // Nonnegative and summing to demand per OD within tol.
  bool in_omega(demand_vector const& d, double tol = 1e-9) const;
};

}  // namespace tfe
