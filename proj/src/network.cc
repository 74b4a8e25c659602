#include "tfe/network.h"

#include <algorithm>
#include <queue>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

int time_grid::period_of(time_idx h) const {
  if (boundaries_.size() < 2 || h < boundaries_.front() ||
      h >= boundaries_.back()) {
    return -1;
  }
  auto const it = std::upper_bound(begin(boundaries_), end(boundaries_), h);
  return static_cast<int>(it - begin(boundaries_)) - 1;
}

std::vector<time_idx> time_grid::uniform_boundaries(time_idx begin,
                                                    time_idx end,
                                                    time_idx period) {
  if (period <= 0 || end <= begin) {
    throw input_error{fmt::format(
        "invalid measurement period {} for window [{}, {})", period, begin,
        end)};
  }
  std::vector<time_idx> b;
  for (auto h = begin; h < end; h += period) {
    b.push_back(h);
  }
  b.push_back(end);
  return b;
}

namespace {

time_idx to_units(int minutes, int unit, line const& l, char const* what) {
  if (minutes % unit != 0) {
    throw input_error{fmt::format(
        "line {}: {} {} min is not a multiple of the {} min time unit", l.id_,
        what, minutes, unit)};
  }
  return minutes / unit;
}

}  // namespace

std::vector<run> expand_timetable(std::span<line const> lines,
                                  time_grid const& grid) {
  if (grid.unit_minutes_ <= 0) {
    throw input_error{"time unit must be positive"};
  }
  std::vector<run> runs;
  for (auto const& l : lines) {
    std::vector<time_idx> seg;
    for (auto const m : l.segment_minutes_) {
      seg.push_back(to_units(m, grid.unit_minutes_, l, "segment time"));
    }
    auto idx = 0;
    for (auto const dep_min : l.departure_minutes_) {
      auto t = to_units(dep_min, grid.unit_minutes_, l, "departure");
      run r{.line_ = l.id_, .index_ = idx++, .events_ = {}};
      for (auto k = 0U; k < l.stops_.size(); ++k) {
        if (k != 0U) {
          t += seg[k - 1];
        }
        if (t >= grid.horizon_) {
          break;
        }
        r.events_.push_back({l.stops_[k], t});
      }
      runs.push_back(std::move(r));
    }
  }
  return runs;
}

double congestion_cost(double volume, double capacity, double base_time) {
  if (!(capacity > 0.0)) {
    throw contract_violation{"congestion_cost: capacity must be positive"};
  }
  if (volume > capacity * (1.0 + 1e-9) + 1e-9) {
    throw contract_violation{fmt::format(
        "congestion_cost: volume {} exceeds capacity {}", volume, capacity)};
  }
  auto const r = volume / capacity;
  return (r * r + 1.0) * base_time;
}

link_idx te_network::arriving_link(node_idx n, line_idx l) const {
  auto const lines = arriving_lines(n);
  auto const it = std::lower_bound(begin(lines), end(lines), l);
  if (it == end(lines) || *it != l) {
    return kNoLink;
  }
  return arr_links_[in_begin_runs_[n] +
                    static_cast<std::size_t>(it - begin(lines))];
}

link_idx te_network::continuation(node_idx n, line_idx l) const {
  auto const in = arriving_link(n, l);
  return in == kNoLink ? kNoLink : links_[in].next_in_run_;
}

double te_network::link_cost(link_idx l, double volume) const {
  auto const& a = links_[l];
  if (!a.is_run() || congestion_ == congestion_model::kNone) {
    return a.base_cost_;
  }
  return congestion_cost(std::min(volume, a.capacity_), a.capacity_,
                         a.base_cost_);
}

std::vector<double> te_network::link_costs(
    std::span<double const> volumes) const {
  std::vector<double> c(links_.size());
  for (auto l = link_idx{0}; l < n_links(); ++l) {
    c[l] = link_cost(l, volumes[l]);
  }
  return c;
}

te_network build_te_network(std::span<stop const> stops,
                            std::span<line const> lines,
                            std::span<run const> runs, time_grid const& grid,
                            double wait_weight, congestion_model congestion) {
  te_network net;
  net.stops_.assign(begin(stops), end(stops));
  net.lines_.assign(begin(lines), end(lines));
  net.runs_.assign(begin(runs), end(runs));
  net.grid_ = grid;
  net.wait_weight_ = wait_weight;
  net.congestion_ = congestion;
  net.n_stops_ = static_cast<stop_idx>(stops.size());

  auto const H = grid.horizon_;
  auto const N = net.n_stops_;
  auto const n_nodes = static_cast<std::size_t>(N) * static_cast<std::size_t>(H);
  net.nodes_.resize(n_nodes);
  for (auto h = 0; h < H; ++h) {
    for (auto s = 0; s < N; ++s) {
      net.nodes_[net.node_of(s, h)] = {s, h};
    }
  }

  auto const line_of = [&](line_idx id) -> line const& {
    for (auto const& l : lines) {
      if (l.id_ == id) {
        return l;
      }
    }
    throw input_error{fmt::format("run refers to unknown line {}", id)};
  };

  // Run segments grouped by tail node; runs are visited in (line, index)
  // order so each node's segments come out sorted.
  struct seg {
    node_idx tail_, head_;
    line_idx line_;
    int run_;
    time_idx t_;
    double cost_, cap_;
    std::size_t run_pos_, event_;
  };
  std::vector<run const*> sorted_runs;
  for (auto const& r : runs) {
    sorted_runs.push_back(&r);
  }
  std::stable_sort(begin(sorted_runs), end(sorted_runs),
                   [](run const* a, run const* b) {
                     return std::tie(a->line_, a->index_) <
                            std::tie(b->line_, b->index_);
                   });
  std::vector<std::vector<seg>> by_tail(n_nodes);
  for (auto const* r : sorted_runs) {
    auto const& l = line_of(r->line_);
    for (auto k = 1U; k < r->events_.size(); ++k) {
      auto const& a = r->events_[k - 1];
      auto const& b = r->events_[k];
      if (a.stop_ < 0 || a.stop_ >= N || b.stop_ < 0 || b.stop_ >= N) {
        throw input_error{
            fmt::format("line {}: stop id out of range", r->line_)};
      }
      auto const t = b.time_ - a.time_;
      if (t < 1) {
        throw input_error{
            fmt::format("line {}: segment time must be >= 1 unit", r->line_)};
      }
      auto const tail = net.node_of(a.stop_, a.time_);
      by_tail[tail].push_back(
          {tail, net.node_of(b.stop_, b.time_), r->line_, r->index_, t,
           static_cast<double>(t) * grid.unit_minutes_ * l.cost_factor_,
           l.capacity_, static_cast<std::size_t>(r - runs.data()), k});
    }
  }

  net.n_out_runs_.assign(n_nodes, 0);
  net.waiting_.assign(n_nodes, kNoLink);
  // (run position, event index of the segment head) -> link
  std::vector<std::vector<link_idx>> run_links(runs.size());
  for (auto i = 0U; i < runs.size(); ++i) {
    run_links[i].assign(runs[i].events_.size(), kNoLink);
  }
  for (auto n = node_idx{0}; n < static_cast<node_idx>(n_nodes); ++n) {
    for (auto const& s : by_tail[n]) {
      auto const id = static_cast<link_idx>(net.links_.size());
      net.links_.push_back({.tail_ = s.tail_,
                            .head_ = s.head_,
                            .kind_ = link_kind::kRunSegment,
                            .line_ = s.line_,
                            .run_ = s.run_,
                            .travel_time_ = s.t_,
                            .base_cost_ = s.cost_,
                            .capacity_ = s.cap_,
                            .next_in_run_ = kNoLink});
      run_links[s.run_pos_][s.event_] = id;
      ++net.n_out_runs_[n];
    }
    if (net.nodes_[n].time_ + 1 < H) {
      net.waiting_[n] = static_cast<link_idx>(net.links_.size());
      net.links_.push_back(
          {.tail_ = n,
           .head_ = net.node_of(net.nodes_[n].stop_, net.nodes_[n].time_ + 1),
           .kind_ = link_kind::kWaiting,
           .line_ = kWaitLine,
           .run_ = -1,
           .travel_time_ = 1,
           .base_cost_ = wait_weight * grid.unit_minutes_,
           .capacity_ = kInf,
           .next_in_run_ = kNoLink});
    }
  }
  for (auto const& rl : run_links) {
    for (auto k = 1U; k + 1 < rl.size(); ++k) {
      if (rl[k] != kNoLink && rl[k + 1] != kNoLink) {
        net.links_[rl[k]].next_in_run_ = rl[k + 1];
      }
    }
  }

  // Adjacency (CSR).
  std::vector<std::vector<link_idx>> out(n_nodes), in(n_nodes);
  for (auto l = link_idx{0}; l < net.n_links(); ++l) {
    out[net.links_[l].tail_].push_back(l);
    in[net.links_[l].head_].push_back(l);
  }
  net.out_begin_.assign(1, 0);
  net.in_begin_.assign(1, 0);
  net.in_begin_runs_.assign(1, 0);
  for (auto n = 0U; n < n_nodes; ++n) {
    net.out_.insert(end(net.out_), begin(out[n]), end(out[n]));
    net.out_begin_.push_back(net.out_.size());
    net.in_.insert(end(net.in_), begin(in[n]), end(in[n]));
    net.in_begin_.push_back(net.in_.size());

    std::vector<std::pair<line_idx, link_idx>> arr;
    for (auto const l : in[n]) {
      if (net.links_[l].is_run()) {
        arr.emplace_back(net.links_[l].line_, l);
      }
    }
    std::sort(begin(arr), end(arr));
    for (auto i = 1U; i < arr.size(); ++i) {
      if (arr[i].first == arr[i - 1].first) {
        throw input_error{fmt::format(
            "line {}: two runs reach stop {} at time {}", arr[i].first,
            net.nodes_[n].stop_, net.nodes_[n].time_)};
      }
    }
    for (auto const& [ln, lk] : arr) {
      net.arr_lines_.push_back(ln);
      net.arr_links_.push_back(lk);
    }
    net.in_begin_runs_.push_back(net.arr_lines_.size());
  }
  return net;
}

te_network build_te_network(network_spec const& spec) {
  auto const& g = spec.grid_;
  if (g.horizon_ < 1) {
    throw input_error{"horizon must be at least one time point"};
  }
  if (g.window_begin_ < 0 || g.window_end_ > g.horizon_ ||
      g.window_begin_ >= g.window_end_) {
    throw input_error{"analysis window must lie inside the horizon"};
  }
  for (auto k = 1U; k < g.boundaries_.size(); ++k) {
    if (g.boundaries_[k] <= g.boundaries_[k - 1]) {
      throw input_error{"measurement boundaries must be strictly increasing"};
    }
  }
  if (!g.boundaries_.empty() &&
      (g.boundaries_.front() < 0 || g.boundaries_.back() > g.horizon_)) {
    throw input_error{"measurement boundaries must lie inside the horizon"};
  }
  if (!(spec.wait_weight_ > 0.0)) {
    throw input_error{"wait_weight must be positive"};
  }
  for (auto i = 0U; i < spec.stops_.size(); ++i) {
    if (spec.stops_[i].id_ != static_cast<stop_idx>(i)) {
      throw input_error{"stop ids must be dense and ordered 0..N-1"};
    }
  }
  for (auto i = 0U; i < spec.lines_.size(); ++i) {
    auto const& l = spec.lines_[i];
    if (l.id_ != static_cast<line_idx>(i)) {
      throw input_error{"line ids must be dense and ordered 0..L-1"};
    }
    if (l.stops_.size() < 2 ||
        l.segment_minutes_.size() + 1 != l.stops_.size()) {
      throw input_error{fmt::format(
          "line {}: need one segment time per consecutive stop pair", l.id_)};
    }
    for (auto const s : l.stops_) {
      if (s < 0 || s >= static_cast<stop_idx>(spec.stops_.size())) {
        throw input_error{
            fmt::format("line {}: unknown stop id {}", l.id_, s)};
      }
    }
    if (!(l.capacity_ > 0.0)) {
      throw input_error{fmt::format("line {}: capacity must be > 0", l.id_)};
    }
    if (!(l.cost_factor_ > 0.0)) {
      throw input_error{fmt::format("line {}: cost factor must be > 0", l.id_)};
    }
    for (auto const m : l.segment_minutes_) {
      if (m < g.unit_minutes_) {
        throw input_error{fmt::format(
            "line {}: segment time must be at least one time unit", l.id_)};
      }
    }
    for (auto k = 1U; k < l.departure_minutes_.size(); ++k) {
      if (l.departure_minutes_[k] <= l.departure_minutes_[k - 1]) {
        throw input_error{fmt::format(
            "line {}: departures must be strictly increasing", l.id_)};
      }
    }
  }
  auto const runs = expand_timetable(spec.lines_, g);
  return build_te_network(spec.stops_, spec.lines_, runs, g, spec.wait_weight_,
                          spec.congestion_);
}

std::vector<node_idx> tc_order(te_network const& net) {
  auto const n = net.n_nodes();
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (auto const& l : net.links()) {
    ++indeg[l.head_];
  }
  std::priority_queue<node_idx, std::vector<node_idx>, std::greater<>> ready;
  for (auto i = node_idx{0}; i < n; ++i) {
    if (indeg[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<node_idx> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    auto const v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto const l : net.out_links(v)) {
      if (--indeg[net.link(l).head_] == 0) {
        ready.push(net.link(l).head_);
      }
    }
  }
  if (static_cast<node_idx>(order.size()) != n) {
    throw contract_violation{"time-expanded network contains a cycle"};
  }
  return order;
}

}  // namespace tfe
