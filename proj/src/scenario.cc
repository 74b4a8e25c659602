#include "tfe/scenario.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fmt/format.h"

#include "tfe/aum.h"
#include "tfe/errors.h"
#include "tfe/network_io.h"

#ifndef TFE_DATA_DIR
#define TFE_DATA_DIR "data"
#endif

namespace tfe {

std::vector<od_triple> scenario::candidate_set() const {
  if (!candidates_.empty()) {
    return candidates_;
  }
  return all_candidates(static_cast<stop_idx>(network_.stops_.size()),
                        demand_begin_, demand_end_);
}

// Reconstructed timetable. Target quantities it meets:
//  1. first l2 run passes N3 at 35, the next one 10 min later;
//  2. iteration-1 boarding probability at N3 is 0.5 (50 seats left of 200
//     after 150 N5 riders, 100 N1 users arrive);
//  3. arrival costs via the first and second l2 run are 45 and 55;
//  4. equilibrium total cost 50 * 55 + 200 * 45 = 11750;
//  5. N1 users shift transfer stop N3 -> N4 -> N5 over the iterations.
// Riding l1 costs slightly more than riding l2 and waiting slightly more
// than riding, so the free-flow strategy transfers at N3 and detours only
// pay off once seats are rationed.
scenario make_example41() {
  scenario sc;
  sc.name_ = "example41";
  auto& spec = sc.network_;
  for (auto i = 0; i < 5; ++i) {
    spec.stops_.push_back({i, fmt::format("N{}", i + 1)});
  }
  spec.lines_.push_back({.id_ = 0,
                         .label_ = "l1",
                         .stops_ = {0, 2, 3, 4},
                         .segment_minutes_ = {10, 5, 5},
                         .departure_minutes_ = {0},
                         .capacity_ = 200.0,
                         .cost_factor_ = 1.0 + 1e-4});
  spec.lines_.push_back({.id_ = 1,
                         .label_ = "l2",
                         .stops_ = {4, 3, 2, 1},
                         .segment_minutes_ = {5, 5, 10},
                         .departure_minutes_ = {25, 35},
                         .capacity_ = 200.0,
                         .cost_factor_ = 1.0});
  auto& g = spec.grid_;
  g.unit_minutes_ = 1;
  g.horizon_ = 60;
  g.window_begin_ = 0;
  g.window_end_ = 60;
  g.boundaries_ = time_grid::uniform_boundaries(0, 60, 1);
  spec.wait_weight_ = 1.0 + 1e-5;
  spec.congestion_ = congestion_model::kNone;
  sc.demand_.ods_ = {{0, 1, 0}, {4, 1, 0}};
  sc.demand_.values_ = {100.0, 150.0};
  sc.demand_begin_ = 0;
  sc.demand_end_ = 1;
  return sc;
}

scenario make_sioux_falls() {
  return make_sioux_falls(std::filesystem::path{TFE_DATA_DIR} / "sioux_falls" /
                          "network.json");
}

scenario make_sioux_falls(std::filesystem::path const& network_file) {
  if (!std::filesystem::exists(network_file)) {
    throw input_error{fmt::format("Sioux Falls route file not found: {}",
                                  network_file.string())};
  }
  scenario sc;
  sc.name_ = "sioux-falls";
  sc.network_ = read_network(network_file);
  auto const index_of = [&](std::string const& label) {
    for (auto const& s : sc.network_.stops_) {
      if (s.label_ == label) {
        return s.id_;
      }
    }
    throw input_error{fmt::format("{}: stop {} missing",
                                  network_file.string(), label)};
  };
  auto const n5 = index_of("N5");
  auto const n6 = index_of("N6");
  auto const n15 = index_of("N15");
  auto const n21 = index_of("N21");
  auto const n23 = index_of("N23");
  auto const u = sc.network_.grid_.unit_minutes_;
  // Minute profiles; first 20 minutes at the lower rate.
  auto const add = [&](stop_idx q, stop_idx r, double early, double late) {
    for (auto m = 0; m < 60; m += u) {
      sc.demand_.ods_.push_back({q, r, m / u});
      sc.demand_.values_.push_back((m < 20 ? early : late) * u);
    }
  };
  add(n5, n15, 4.0, 8.0);
  add(n5, n21, 6.0, 7.0);
  add(n6, n23, 8.0, 6.0);
  sc.demand_begin_ = 0;
  sc.demand_end_ = 60 / u;
  return sc;
}

std::vector<segment_flow> ridership(te_network const& net,
                                    load_result const& load) {
  std::vector<segment_flow> out;
  for (auto a = link_idx{0}; a < net.n_links(); ++a) {
    auto const& l = net.link(a);
    if (!l.is_run()) {
      continue;
    }
    out.push_back({l.line_, l.run_, net.node(l.tail_).stop_,
                   net.node(l.head_).stop_, net.node(l.tail_).time_,
                   load.volume_[a]});
  }
  std::sort(begin(out), end(out), [](auto const& x, auto const& y) {
    return std::tie(x.line_, x.run_, x.depart_) <
           std::tie(y.line_, y.run_, y.depart_);
  });
  return out;
}

std::vector<double> perturb_demand_choice(std::span<double const> costs,
                                          noise_spec const& noise,
                                          std::mt19937_64& rng) {
  std::vector<double> perceived(costs.begin(), costs.end());
  if (noise.variance_ > 0.0) {
    std::normal_distribution<double> z{0.0, std::sqrt(noise.variance_)};
    for (auto& c : perceived) {
      c *= std::exp(z(rng));
    }
  }
  std::vector<double> share(perceived.size(), 0.0);
  auto lo = kInf;
  for (auto const c : perceived) {
    lo = std::min(lo, c);
  }
  if (!(lo < kInf)) {
    return share;
  }
  auto sum = 0.0;
  for (auto i = 0U; i < perceived.size(); ++i) {
    if (perceived[i] < kInf) {
      share[i] = std::exp(-noise.theta_ * (perceived[i] - lo));
      sum += share[i];
    }
  }
  for (auto& s : share) {
    s /= sum;
  }
  return share;
}

ground_truth forward_simulate(te_network const& net, scenario const& sc,
                              simulate_config const& cfg) {
  ground_truth gt;
  gt.demand_ = sc.demand_;
  equilibrium_config ec;
  ec.epsilon_ = cfg.epsilon_;
  ec.max_inner_ = cfg.max_inner_;
  gt.equilibrium_ = solve_equilibrium(net, sc.demand_, ec);
  auto& eq = gt.equilibrium_;

  if (sc.noise_.enabled_) {
    std::map<stop_idx, std::set<strategy_idx>> used;
    for (auto w = 0U; w < sc.demand_.size(); ++w) {
      auto const r = sc.demand_.ods_[w].destination_;
      for (auto const& [s, f] : eq.flow_.flows_[w]) {
        used[r].insert(s);
      }
    }
    for (auto const& [r, s] : eq.best_) {
      used[r].insert(s);
    }
    std::mt19937_64 rng{sc.seed_};
    hyperpath_flow f;
    f.flows_.resize(sc.demand_.size());
    for (auto w = 0U; w < sc.demand_.size(); ++w) {
      auto const d = sc.demand_.values_[w];
      if (d <= 0.0) {
        continue;
      }
      auto const& od = sc.demand_.ods_[w];
      std::vector<strategy_idx> const cand(begin(used[od.destination_]),
                                           end(used[od.destination_]));
      std::vector<double> costs;
      for (auto const s : cand) {
        costs.push_back(strategy_cost(net, eq.pool_[s], eq.load_, od));
      }
      auto const share = perturb_demand_choice(costs, sc.noise_, rng);
      for (auto i = 0U; i < cand.size(); ++i) {
        if (share[i] > 0.0) {
          f.flows_[w].emplace_back(cand[i], share[i] * d);
        }
      }
      if (f.flows_[w].empty()) {
        f.flows_[w] = eq.flow_.flows_[w];
      }
    }
    eq.flow_ = std::move(f);
    eq.load_ = load_flows(net, eq.pool_, sc.demand_, eq.flow_);
  }
  gt.counts_ = counts_from_load(net, eq.load_);
  gt.ridership_ = ridership(net, eq.load_);
  return gt;
}

}  // namespace tfe
