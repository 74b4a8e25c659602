#include "tfe/equilibrium.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

namespace {

constexpr double kPrune = 1e-12;

}  // namespace

hyperpath_flow msa_step(hyperpath_flow const& f, hyperpath_flow const& g,
                        int n) {
  if (n < 1) {
    throw contract_violation{"msa_step: step index must be >= 1"};
  }
  if (f.flows_.size() != g.flows_.size()) {
    throw contract_violation{"msa_step: flows cover different OD sets"};
  }
  auto const beta = 1.0 / n;
  hyperpath_flow out;
  out.flows_.resize(f.flows_.size());
  for (auto w = 0U; w < f.flows_.size(); ++w) {
    auto const df = f.od_total(w);
    auto const dg = g.od_total(w);
    if (std::abs(df - dg) > 1e-9 * std::max(1.0, std::abs(df))) {
      throw contract_violation{fmt::format(
          "msa_step: OD {} carries demand {} in f but {} in g", w, df, dg)};
    }
    auto& o = out.flows_[w];
    auto const& a = f.flows_[w];
    auto const& b = g.flows_[w];
    auto i = 0U;
    auto j = 0U;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        o.emplace_back(a[i].first, (1.0 - beta) * a[i].second);
        ++i;
      } else if (i == a.size() || b[j].first < a[i].first) {
        o.emplace_back(b[j].first, beta * b[j].second);
        ++j;
      } else {
        o.emplace_back(a[i].first,
                       (1.0 - beta) * a[i].second + beta * b[j].second);
        ++i;
        ++j;
      }
    }
    std::erase_if(o, [](auto const& e) { return e.second < kPrune; });
  }
  return out;
}

double total_cost(load_result const& load) {
  auto sum = 0.0;
  for (auto a = 0U; a < load.volume_.size(); ++a) {
    if (load.volume_[a] != 0.0) {
      sum += load.cost_[a] * load.volume_[a];
    }
  }
  return sum;
}

double relative_gap(double c_f, double c_g) {
  if (c_f == 0.0) {
    return c_g == 0.0 ? 0.0 : kInf;
  }
  return std::abs(c_f - c_g) / c_f;
}

double strategy_cost(te_network const& net, strategy const& s,
                     load_result const& load, od_triple const& od) {
  auto const u = propagate_unit(net, s, load, net.node_of(od.origin_, od.depart_),
                                {kWaitLine, od.depart_});
  if (u.unfinished_ > 1e-12) {
    return kInf;
  }
  auto sum = 0.0;
  for (auto const& [a, m] : u.links_) {
    sum += m * load.cost_[a];
  }
  return sum;
}

warm_start continue_from(equilibrium_result&& r) {
  warm_start ws;
  ws.pool_ = std::move(r.pool_);
  ws.shares_ = std::move(r.next_shares_);
  ws.fallback_ = r.best_;
  ws.step_ = r.next_step_;
  return ws;
}

equilibrium_result solve_equilibrium(te_network const& net,
                                     demand_vector const& demand,
                                     equilibrium_config const& cfg,
                                     warm_start const* start) {
  if (cfg.max_inner_ < 1) {
    throw input_error{"inner iteration budget must be >= 1"};
  }
  for (auto const v : demand.values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw input_error{"demand must be finite and nonnegative"};
    }
  }
  equilibrium_result res;
  if (start != nullptr) {
    res.pool_ = start->pool_;
  }
  auto& pool = res.pool_;

  std::set<stop_idx> dests;
  for (auto w = 0U; w < demand.size(); ++w) {
    if (demand.values_[w] > 0.0) {
      dests.insert(demand.ods_[w].destination_);
    }
  }
  std::map<stop_idx, strategy_idx> fallback;
  for (auto const r : dests) {
    if (start != nullptr && start->fallback_.contains(r)) {
      fallback[r] = start->fallback_.at(r);
    } else {
      fallback[r] = pool.add(initial_strategy(net, r));
    }
  }

  auto& f = res.flow_;
  f.flows_.resize(demand.size());
  for (auto w = 0U; w < demand.size(); ++w) {
    auto const d = demand.values_[w];
    if (d <= 0.0) {
      continue;
    }
    if (start != nullptr && w < start->shares_.size() &&
        !start->shares_[w].empty()) {
      for (auto const& [s, sh] : start->shares_[w]) {
        f.flows_[w].emplace_back(s, sh * d);
      }
    } else {
      f.flows_[w].emplace_back(fallback[demand.ods_[w].destination_], d);
    }
  }

  auto step = start != nullptr ? start->step_ : 1;
  auto const best_response = [&](hyperpath_flow const& cur) {
    hyperpath_flow g;
    g.flows_.resize(demand.size());
    for (auto w = 0U; w < demand.size(); ++w) {
      auto const d = cur.od_total(w);
      if (d > 0.0) {
        g.flows_[w].emplace_back(res.best_.at(demand.ods_[w].destination_), d);
      }
    }
    return g;
  };
  auto const run_descent = [&](stop_idx r) {
    auto dr = descent_direction(net, res.load_, r);
    res.best_[r] = pool.add(std::move(dr.strategy_));
    res.phi_.insert_or_assign(r, std::move(dr.phi_));
  };

  for (auto it = 1;; ++it) {
    res.load_ = load_flows(net, pool, demand, f, {cfg.per_od_});
    auto const c_f = total_cost(res.load_);
    res.best_.clear();
    res.phi_.clear();
    for (auto const r : dests) {
      run_descent(r);
    }
    auto c_g = 0.0;
    for (auto w = 0U; w < demand.size(); ++w) {
      auto const d = demand.values_[w];
      if (d > 0.0) {
        auto const& od = demand.ods_[w];
        c_g += d * res.phi_.at(od.destination_)
                       .wait(net.node_of(od.origin_, od.depart_), od.depart_);
      }
    }
    auto const gap = relative_gap(c_f, c_g);
    res.log_.push_back({it, c_f, c_g, gap});
    if (gap <= cfg.epsilon_) {
      res.converged_ = true;
      break;
    }
    if (it >= cfg.max_inner_) {
      break;
    }
    ++step;
    f = msa_step(f, best_response(f), step);
  }

  for (auto const r : cfg.extra_destinations_) {
    if (!res.best_.contains(r)) {
      run_descent(r);
    }
  }

  auto const next = msa_step(f, best_response(f), step + 1);
  res.next_step_ = step + 1;
  res.next_shares_.resize(demand.size());
  for (auto w = 0U; w < demand.size(); ++w) {
    auto const d = next.od_total(w);
    for (auto const& [s, v] : next.flows_[w]) {
      res.next_shares_[w].emplace_back(s, v / d);
    }
  }
  return res;
}

std::vector<path_flow> realize_paths(te_network const& net,
                                     strategy_pool const& pool,
                                     demand_vector const& demand,
                                     hyperpath_flow const& flow,
                                     load_result const& load) {
  std::map<std::tuple<std::size_t, std::vector<stop_idx>,
                      std::vector<std::pair<line_idx, int>>>,
           double>
      acc;
  for (auto w = 0U; w < demand.size(); ++w) {
    auto const& od = demand.ods_[w];
    for (auto const& [sid, fv] : flow.flows_[w]) {
      auto const& s = pool[sid];
      std::vector<stop_idx> stops{od.origin_};
      std::vector<std::pair<line_idx, int>> runs;
      std::function<void(node_idx, arrival_state, double)> walk =
          [&](node_idx n, arrival_state st, double m) {
            if (m < kPrune) {
              return;
            }
            if (net.node(n).stop_ == s.destination()) {
              acc[{w, stops, runs}] += m;
              return;
            }
            auto const sp = split_unit(net, s, load, n, st);
            for (auto const& [a, p] : sp.links_) {
              if (a == kNoLink) {
                continue;
              }
              auto const& l = net.link(a);
              if (!l.is_run()) {
                walk(l.head_, {kWaitLine, sp.queue_tau_}, m * p);
                continue;
              }
              auto const new_run =
                  runs.empty() || runs.back() != std::pair{l.line_, l.run_};
              if (new_run) {
                runs.emplace_back(l.line_, l.run_);
              }
              stops.push_back(net.node(l.head_).stop_);
              walk(l.head_, {l.line_, net.node(l.head_).time_}, m * p);
              stops.pop_back();
              if (new_run) {
                runs.pop_back();
              }
            }
          };
      walk(net.node_of(od.origin_, od.depart_), {kWaitLine, od.depart_}, fv);
    }
  }
  std::vector<path_flow> out;
  for (auto& [k, v] : acc) {
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  }
  return out;
}

}  // namespace tfe
