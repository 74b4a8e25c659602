#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfe/types.h"

namespace tfe {

struct stop {
  stop_idx id_{0};
  std::string label_;
};

// Timetable of one line. Times are in minutes as given by the user; they are
// converted to grid units by expand_timetable.
struct line {
  line_idx id_{0};
  std::string label_;
  std::vector<stop_idx> stops_;
  std::vector<int> segment_minutes_;
  std::vector<int> departure_minutes_;
  double capacity_{0.0};
  // Multiplier on in-vehicle cost per minute.
  double cost_factor_{1.0};
};

struct time_grid {
  int unit_minutes_{1};
  time_idx horizon_{0};
  time_idx window_begin_{0};
  time_idx window_end_{0};
  // h_0 < h_1 < ... < h_K; period k covers [h_{k-1}, h_k).
  std::vector<time_idx> boundaries_;

  int n_periods() const {
    return boundaries_.empty() ? 0 : static_cast<int>(boundaries_.size()) - 1;
  }
  // Period containing h, or -1 outside the measured window.
  int period_of(time_idx h) const;

  // Boundaries every `period` units across the window (last one may be short).
  static std::vector<time_idx> uniform_boundaries(time_idx begin, time_idx end,
                                                  time_idx period);
};

enum class congestion_model { kNone, kQuadratic };

struct network_spec {
  std::vector<stop> stops_;
  std::vector<line> lines_;
  time_grid grid_;
  double wait_weight_{1.001};
  congestion_model congestion_{congestion_model::kQuadratic};
};

struct run_event {
  stop_idx stop_{0};
  time_idx time_{0};
};

struct run {
  line_idx line_{0};
  int index_{0};
  std::vector<run_event> events_;
};

// One run per departure; events beyond the horizon are truncated.
std::vector<run> expand_timetable(std::span<line const> lines,
                                  time_grid const& grid);

enum class link_kind : std::uint8_t { kRunSegment, kWaiting };

struct te_node {
  stop_idx stop_{0};
  time_idx time_{0};
};

struct te_link {
  node_idx tail_{0};
  node_idx head_{0};
  link_kind kind_{link_kind::kWaiting};
  line_idx line_{kWaitLine};
  int run_{-1};
  time_idx travel_time_{1};
  double base_cost_{0.0};
  double capacity_{kInf};
  // Next segment of the same run, if any.
  link_idx next_in_run_{kNoLink};

  bool is_run() const { return kind_ == link_kind::kRunSegment; }
};

// ((V/C)^2 + 1) t. Throws contract_violation if V exceeds C.
double congestion_cost(double volume, double capacity, double base_time);

// Time-expanded network. Node index = time * n_stops + stop, which is the
// topological-and-chronological order (ties at equal time by stop id).
class te_network {
public:
  te_network() = default;

  node_idx n_nodes() const { return static_cast<node_idx>(nodes_.size()); }
  link_idx n_links() const { return static_cast<link_idx>(links_.size()); }
  stop_idx n_stops() const { return n_stops_; }
  line_idx n_lines() const { return static_cast<line_idx>(lines_.size()); }
  time_idx horizon() const { return grid_.horizon_; }
  time_grid const& grid() const { return grid_; }
  double wait_weight() const { return wait_weight_; }
  congestion_model congestion() const { return congestion_; }
  std::vector<stop> const& stops() const { return stops_; }
  std::vector<line> const& lines() const { return lines_; }
  std::vector<run> const& runs() const { return runs_; }

  node_idx node_of(stop_idx s, time_idx h) const { return h * n_stops_ + s; }
  te_node const& node(node_idx n) const { return nodes_[n]; }
  te_link const& link(link_idx l) const { return links_[l]; }
  std::vector<te_link> const& links() const { return links_; }

  // Outgoing links: run segments ordered by (line, run), then the waiting
  // link (absent at the last time point).
  std::span<link_idx const> out_links(node_idx n) const {
    return {out_.data() + out_begin_[n], out_.data() + out_begin_[n + 1]};
  }
  std::span<link_idx const> in_links(node_idx n) const {
    return {in_.data() + in_begin_[n], in_.data() + in_begin_[n + 1]};
  }
  // Number of run segments leaving n; they are the first entries of out_links.
  int n_out_runs(node_idx n) const { return n_out_runs_[n]; }
  link_idx waiting_link(node_idx n) const { return waiting_[n]; }

  // Incoming run segment of line l into node n, or kNoLink.
  link_idx arriving_link(node_idx n, line_idx l) const;
  // Lines with a run arriving at n, ascending.
  std::span<line_idx const> arriving_lines(node_idx n) const {
    return {arr_lines_.data() + in_begin_runs_[n],
            arr_lines_.data() + in_begin_runs_[n + 1]};
  }
  // Segment a rider of line l continues on when staying aboard at n.
  link_idx continuation(node_idx n, line_idx l) const;

  // Generalized cost of a link at the given on-link volume.
  double link_cost(link_idx l, double volume) const;
  // Costs of all links at the given volumes.
  std::vector<double> link_costs(std::span<double const> volumes) const;

  friend te_network build_te_network(std::span<stop const>,
                                     std::span<line const>,
                                     std::span<run const>, time_grid const&,
                                     double wait_weight, congestion_model);

private:
  std::vector<stop> stops_;
  std::vector<line> lines_;
  std::vector<run> runs_;
  time_grid grid_;
  double wait_weight_{1.001};
  congestion_model congestion_{congestion_model::kQuadratic};
  stop_idx n_stops_{0};
  std::vector<te_node> nodes_;
  std::vector<te_link> links_;
  std::vector<link_idx> out_, in_;
  std::vector<std::size_t> out_begin_, in_begin_;
  std::vector<int> n_out_runs_;
  std::vector<link_idx> waiting_;
  std::vector<line_idx> arr_lines_;
  std::vector<link_idx> arr_links_;
  std::vector<std::size_t> in_begin_runs_;
};

te_network build_te_network(std::span<stop const> stops,
                            std::span<line const> lines,
                            std::span<run const> runs, time_grid const& grid,
                            double wait_weight,
                            congestion_model congestion =
                                congestion_model::kQuadratic);

// Validates the network_spec, expands the timetable and builds the network.
te_network build_te_network(network_spec const& spec);

// Node sequence in T&C order; throws contract_violation on a cycle.
std::vector<node_idx> tc_order(te_network const& net);

}  // namespace tfe
