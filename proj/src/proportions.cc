#include "tfe/proportions.h"

#include <algorithm>
#include <tuple>
#include <unordered_map>

namespace tfe {

namespace {

void add_unit(te_network const& net, unit_flow const& u, double share,
              std::vector<proportion_entry>& col) {
  for (auto const& [n, m] : u.arrivals_) {
    col.push_back({channel::kExit, net.node(n).stop_, net.node(n).time_,
                   share * m});
  }
  for (auto const& [a, m] : u.links_) {
    auto const& l = net.link(a);
    if (l.is_run()) {
      auto const& t = net.node(l.tail_);
      col.push_back({channel::kPassby, t.stop_, t.time_, share * m});
    }
  }
}

void compact(std::vector<proportion_entry>& col) {
  auto const key = [](proportion_entry const& e) {
    return std::tuple{e.channel_, e.stop_, e.time_};
  };
  std::sort(begin(col), end(col),
            [&](auto const& a, auto const& b) { return key(a) < key(b); });
  std::vector<proportion_entry> out;
  for (auto const& e : col) {
    if (!out.empty() && key(out.back()) == key(e)) {
      out.back().value_ += e.value_;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](auto const& e) { return e.value_ <= 1e-15; });
  col = std::move(out);
}

}  // namespace

proportion_matrix extract_proportions(
    te_network const& net, strategy_pool const& pool,
    demand_vector const& demand, hyperpath_flow const& flow,
    load_result const& load, std::map<stop_idx, strategy_idx> const& probe) {
  proportion_matrix p;
  p.columns_.resize(demand.size());
  for (auto w = 0U; w < demand.size(); ++w) {
    auto const& od = demand.ods_[w];
    auto& col = p.columns_[w];
    col.push_back({channel::kEntry, od.origin_, od.depart_, 1.0});
    auto const start = net.node_of(od.origin_, od.depart_);
    arrival_state const st{kWaitLine, od.depart_};
    auto const d = w < flow.flows_.size() ? flow.od_total(w) : 0.0;
    if (d > 0.0) {
      for (auto const& [s, f] : flow.flows_[w]) {
        add_unit(net, propagate_unit(net, pool[s], load, start, st), f / d,
                 col);
      }
    } else if (auto const it = probe.find(od.destination_); it != end(probe)) {
      add_unit(net,
               propagate_unit(net, pool[it->second], load, start, st, true),
               1.0, col);
    }
    compact(col);
  }
  return p;
}

Eigen::SparseMatrix<double> design_matrix(proportion_matrix const& p,
                                          std::span<measurement const> rows,
                                          time_grid const& grid) {
  struct key_hash {
    std::size_t operator()(std::tuple<int, stop_idx, int> const& k) const {
      auto const [c, s, q] = k;
      return (static_cast<std::size_t>(c) * 1000003U +
              static_cast<std::size_t>(s)) * 1000003U +
             static_cast<std::size_t>(q);
    }
  };
  std::unordered_map<std::tuple<int, stop_idx, int>, int, key_hash> row_of;
  for (auto r = 0U; r < rows.size(); ++r) {
    row_of.emplace(std::tuple{static_cast<int>(rows[r].channel_),
                              rows[r].stop_, rows[r].period_},
                   static_cast<int>(r));
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (auto w = 0U; w < p.columns_.size(); ++w) {
    for (auto const& e : p.columns_[w]) {
      auto const k = grid.period_of(e.time_);
      if (k < 0) {
        continue;
      }
      auto const it = row_of.find(
          std::tuple{static_cast<int>(e.channel_), e.stop_, k});
      if (it != end(row_of)) {
        trip.emplace_back(it->second, static_cast<int>(w), e.value_);
      }
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(rows.size()),
                                static_cast<Eigen::Index>(p.columns_.size()));
  a.setFromTriplets(begin(trip), end(trip));
  return a;
}

}  // namespace tfe
