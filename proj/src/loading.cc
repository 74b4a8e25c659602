#include "tfe/loading.h"

#include <algorithm>
#include <map>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

namespace {

constexpr double kFullDelta = 1.0 - 1e-12;

void merge_packets(std::vector<packet>& v) {
  if (v.size() < 2) {
    return;
  }
  std::sort(begin(v), end(v),
            [](packet const& a, packet const& b) { return a.key_ < b.key_; });
  auto out = 0U;
  for (auto i = 1U; i < v.size(); ++i) {
    if (v[i].key_ == v[out].key_) {
      v[out].flow_ += v[i].flow_;
    } else {
      v[++out] = v[i];
    }
  }
  v.resize(out + 1);
}

// State a user enters at the head of link a.
flow_key arrival_key(te_network const& net, link_idx a, flow_key k,
                     time_idx queue_tau) {
  auto const& l = net.link(a);
  if (l.is_run()) {
    return {k.group_, k.strategy_, l.line_, net.node(l.head_).time_};
  }
  return {k.group_, k.strategy_, kWaitLine, queue_tau};
}

// Preference set a user in `state` at n acts on, after resolving alighting
// (which turns the rider into a queuing user with tau = h).
struct resolved {
  bool continues_{false};
  link_idx continuation_{kNoLink};
  time_idx tau_{0};
  std::span<link_idx const> prefs_;
};

resolved resolve(te_network const& net, strategy const& s, node_idx n,
                 arrival_state state) {
  auto const h = net.node(n).time_;
  if (!state.waiting()) {
    auto const d = s.lookup(n, state);
    if (d.defined_ && d.continues_) {
      auto const c = net.continuation(n, state.line_);
      if (c != kNoLink) {
        return {true, c, h, {}};
      }
    }
    if (d.defined_ && !d.continues_) {
      return {false, kNoLink, h, d.prefs_};
    }
    auto const w = s.lookup(n, {kWaitLine, h});
    return {false, kNoLink, h, w.defined_ ? w.prefs_ : decltype(w.prefs_){}};
  }
  auto const d = s.lookup(n, state);
  return {false, kNoLink, state.tau_,
          d.defined_ ? d.prefs_ : decltype(d.prefs_){}};
}

struct cohort_item {
  flow_key key_;  // queue key (line = WAIT, tau = cohort)
  double flow_;
  std::span<link_idx const> prefs_;
  std::size_t pos_{0};
};

}  // namespace

double load_result::total_unfinished() const {
  auto sum = 0.0;
  for (auto const& v : unfinished_) {
    for (auto const& p : v) {
      sum += p.flow_;
    }
  }
  return sum;
}

std::vector<packet> load_result::node_flows(te_network const& net,
                                            node_idx n) const {
  auto v = departed_[n];
  for (auto const l : net.in_links(n)) {
    v.insert(end(v), begin(link_flows_[l]), end(link_flows_[l]));
  }
  merge_packets(v);
  return v;
}

load_result empty_load(te_network const& net) {
  load_result r;
  auto const nl = static_cast<std::size_t>(net.n_links());
  auto const nn = static_cast<std::size_t>(net.n_nodes());
  r.volume_.assign(nl, 0.0);
  r.cost_ = net.link_costs(r.volume_);
  r.link_flows_.resize(nl);
  r.departed_.resize(nn);
  r.absorbed_.resize(nn);
  r.unfinished_.resize(nn);
  r.trace_.resize(nn);
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    auto const k = static_cast<std::size_t>(net.n_out_runs(n));
    if (k == 0) {
      continue;
    }
    auto& t = r.trace_[n];
    t.continuing_.assign(k, 0.0);
    for (auto i = 0U; i < k; ++i) {
      t.remaining_after_continuance_.push_back(
          net.link(net.out_links(n)[i]).capacity_);
    }
  }
  return r;
}

load_result load_flows(te_network const& net, strategy_pool const& pool,
                       demand_vector const& demand, hyperpath_flow const& flow,
                       load_options opt) {
  if (flow.flows_.size() != demand.size()) {
    throw contract_violation{"load_flows: flow and demand sizes differ"};
  }
  auto r = empty_load(net);
  r.per_od_ = opt.per_od_;

  for (auto w = 0U; w < demand.size(); ++w) {
    auto const& od = demand.ods_[w];
    if (od.origin_ < 0 || od.origin_ >= net.n_stops() ||
        od.destination_ < 0 || od.destination_ >= net.n_stops() ||
        od.depart_ < 0 || od.depart_ >= net.horizon()) {
      throw contract_violation{fmt::format(
          "load_flows: OD ({}, {}, {}) outside the network", od.origin_,
          od.destination_, od.depart_)};
    }
    if (od.origin_ == od.destination_) {
      throw contract_violation{"load_flows: origin equals destination"};
    }
    auto const n = net.node_of(od.origin_, od.depart_);
    for (auto const& [s, f] : flow.flows_[w]) {
      if (f <= 0.0) {
        continue;
      }
      if (pool[s].destination() != od.destination_) {
        throw contract_violation{
            "load_flows: strategy destination differs from OD"};
      }
      auto const g = opt.per_od_ ? static_cast<std::int32_t>(w) : -1;
      r.departed_[n].push_back({{g, s, kWaitLine, od.depart_}, f});
    }
  }
  for (auto& d : r.departed_) {
    merge_packets(d);
  }

  std::vector<packet> in;
  std::vector<cohort_item> items;
  std::vector<std::vector<packet>> out_pk;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    auto const h = net.node(n).time_;
    auto const stop = net.node(n).stop_;
    auto const outs = net.out_links(n);
    auto const n_runs = static_cast<std::size_t>(net.n_out_runs(n));
    auto const first_link = outs.empty() ? 0 : outs[0];
    auto const wait_link = net.waiting_link(n);

    in = r.node_flows(net, n);
    if (in.empty()) {
      continue;
    }

    out_pk.assign(outs.size(), {});
    auto const local = [&](link_idx a) {
      return static_cast<std::size_t>(a - first_link);
    };
    auto const send = [&](link_idx a, flow_key k, time_idx queue_tau,
                          double f) {
      if (f <= 0.0) {
        return;
      }
      if (a == kNoLink) {
        r.unfinished_[n].push_back(
            {{k.group_, k.strategy_, kWaitLine, queue_tau}, f});
        return;
      }
      out_pk[local(a)].push_back({arrival_key(net, a, k, queue_tau), f});
    };

    std::vector<double> rem(n_runs);
    for (auto i = 0U; i < n_runs; ++i) {
      rem[i] = net.link(outs[i]).capacity_;
    }
    auto& tr = r.trace_[n];

    // Absorption, then continuance priority.
    items.clear();
    for (auto const& p : in) {
      auto const& s = pool[p.key_.strategy_];
      if (s.destination() == stop) {
        r.absorbed_[n].push_back(p);
        continue;
      }
      auto const res = resolve(net, s, n, p.key_.state());
      if (res.continues_) {
        tr.continuing_[local(res.continuation_)] += p.flow_;
        send(res.continuation_, p.key_, h, p.flow_);
      } else {
        items.push_back(
            {{p.key_.group_, p.key_.strategy_, kWaitLine, res.tau_},
             p.flow_,
             res.prefs_,
             0});
      }
    }
    for (auto i = 0U; i < n_runs; ++i) {
      rem[i] = std::max(0.0, rem[i] - tr.continuing_[i]);
    }
    if (n_runs != 0) {
      tr.remaining_after_continuance_ = rem;
    }

    // FIFO cohorts.
    std::stable_sort(begin(items), end(items),
                     [](cohort_item const& a, cohort_item const& b) {
                       return a.key_.tau_ < b.key_.tau_;
                     });
    std::vector<double> dem(n_runs);
    for (auto b = 0U; b < items.size();) {
      auto e = b;
      while (e < items.size() && items[e].key_.tau_ == items[b].key_.tau_) {
        ++e;
      }
      auto const tau = items[b].key_.tau_;
      std::span<cohort_item> co{items.data() + b, e - b};
      cohort_trace ct{tau, {}, {}};

      auto const available = [&](link_idx a) {
        return !net.link(a).is_run() || rem[local(a)] > kFullEps;
      };
      while (true) {
        std::fill(begin(dem), end(dem), 0.0);
        auto any_left = false;
        auto run_demand = false;
        for (auto& it : co) {
          if (it.flow_ <= 0.0) {
            continue;
          }
          while (it.pos_ < it.prefs_.size() && !available(it.prefs_[it.pos_])) {
            ++it.pos_;
          }
          if (it.pos_ == it.prefs_.size()) {
            send(wait_link, it.key_, tau, it.flow_);
            it.flow_ = 0.0;
            continue;
          }
          any_left = true;
          auto const a = it.prefs_[it.pos_];
          if (net.link(a).is_run()) {
            dem[local(a)] += it.flow_;
            run_demand = true;
          }
        }
        if (!any_left) {
          break;
        }
        if (!run_demand) {
          for (auto& it : co) {
            if (it.flow_ > 0.0) {
              send(it.prefs_[it.pos_], it.key_, tau, it.flow_);
              it.flow_ = 0.0;
            }
          }
          break;
        }
        auto delta = kInf;
        auto arg = std::size_t{0};
        for (auto i = 0U; i < n_runs; ++i) {
          if (dem[i] > 0.0) {
            auto const ratio = rem[i] / dem[i];
            if (ratio < delta) {
              delta = ratio;
              arg = i;
            }
          }
        }
        auto const full = delta >= kFullDelta;
        ct.rounds_.push_back(
            {rem, dem, delta, full ? kNoLink : outs[arg]});
        if (full) {
          for (auto& it : co) {
            if (it.flow_ > 0.0) {
              send(it.prefs_[it.pos_], it.key_, tau, it.flow_);
              it.flow_ = 0.0;
            }
          }
          for (auto i = 0U; i < n_runs; ++i) {
            rem[i] = std::max(0.0, rem[i] - dem[i]);
          }
          break;
        }
        for (auto& it : co) {
          if (it.flow_ <= 0.0) {
            continue;
          }
          auto const a = it.prefs_[it.pos_];
          if (!net.link(a).is_run()) {
            send(a, it.key_, tau, it.flow_);
            it.flow_ = 0.0;
          } else {
            send(a, it.key_, tau, delta * it.flow_);
            it.flow_ *= 1.0 - delta;
          }
        }
        for (auto i = 0U; i < n_runs; ++i) {
          rem[i] = std::max(0.0, rem[i] - delta * dem[i]);
        }
        rem[arg] = 0.0;
      }
      if (n_runs != 0) {
        ct.remaining_after_ = rem;
        tr.cohorts_.push_back(std::move(ct));
      }
      b = e;
    }
    merge_packets(r.unfinished_[n]);

    for (auto i = 0U; i < outs.size(); ++i) {
      auto& pk = out_pk[i];
      merge_packets(pk);
      auto sum = 0.0;
      for (auto const& p : pk) {
        sum += p.flow_;
      }
      r.volume_[outs[i]] = sum;
      r.link_flows_[outs[i]] = std::move(pk);
    }
  }
  r.cost_ = net.link_costs(r.volume_);
  return r;
}

std::vector<std::pair<link_idx, double>> access_probabilities(
    te_network const& net, load_result const& load, node_idx n, time_idx tau,
    std::span<link_idx const> prefs) {
  std::vector<std::pair<link_idx, double>> p;
  auto const wait_link = net.waiting_link(n);
  auto const outs = net.out_links(n);
  auto const& tr = load.trace_[n];
  auto const local = [&](link_idx a) {
    return static_cast<std::size_t>(a - outs[0]);
  };
  auto const add = [&](link_idx a, double m) {
    if (m <= 0.0) {
      return;
    }
    for (auto& e : p) {
      if (e.first == a) {
        e.second += m;
        return;
      }
    }
    p.emplace_back(a, m);
  };
  auto const first_available = [&](std::vector<double> const& rem,
                                   std::size_t from) {
    for (auto i = from; i < prefs.size(); ++i) {
      auto const a = prefs[i];
      if (!net.link(a).is_run() || rem.empty() || rem[local(a)] > kFullEps) {
        return i;
      }
    }
    return prefs.size();
  };

  auto mass = 1.0;
  auto pos = std::size_t{0};
  std::vector<double> const* rem_final = &tr.remaining_after_continuance_;
  for (auto const& co : tr.cohorts_) {
    if (co.tau_ < tau) {
      rem_final = &co.remaining_after_;
      continue;
    }
    if (co.tau_ > tau) {
      break;
    }
    for (auto const& rd : co.rounds_) {
      pos = first_available(rd.remaining_, pos);
      if (pos == prefs.size()) {
        break;
      }
      auto const a = prefs[pos];
      if (!net.link(a).is_run() || rd.demand_[local(a)] <= 0.0 ||
          rd.delta_ >= kFullDelta) {
        add(a, mass);
        return p;
      }
      auto const served = mass * rd.delta_;
      add(a, served);
      mass -= served;
    }
    rem_final = &co.remaining_after_;
    break;
  }
  pos = first_available(*rem_final, pos);
  if (pos < prefs.size()) {
    add(prefs[pos], mass);
  } else {
    add(wait_link, mass);
  }
  return p;
}

node_split split_unit(te_network const& net, strategy const& s,
                      load_result const& load, node_idx n,
                      arrival_state state) {
  auto const res = resolve(net, s, n, state);
  if (res.continues_) {
    return {res.tau_, {{res.continuation_, 1.0}}};
  }
  return {res.tau_, access_probabilities(net, load, n, res.tau_, res.prefs_)};
}

unit_flow propagate_unit(te_network const& net, strategy const& s,
                         load_result const& load, node_idx n0,
                         arrival_state state0, bool all_or_nothing) {
  unit_flow u;
  std::map<node_idx, std::vector<std::pair<arrival_state, double>>> frontier;
  std::map<link_idx, double> links;
  frontier[n0].emplace_back(state0, 1.0);
  while (!frontier.empty()) {
    auto node_it = frontier.begin();
    auto const n = node_it->first;
    auto states = std::move(node_it->second);
    frontier.erase(node_it);
    std::sort(begin(states), end(states), [](auto const& a, auto const& b) {
      return std::tie(a.first.line_, a.first.tau_) <
             std::tie(b.first.line_, b.first.tau_);
    });
    if (net.node(n).stop_ == s.destination()) {
      auto sum = 0.0;
      for (auto const& [st, m] : states) {
        sum += m;
      }
      u.arrivals_.emplace_back(n, sum);
      continue;
    }
    auto const push = [&](link_idx a, time_idx queue_tau, double m) {
      if (a == kNoLink) {
        u.unfinished_ += m;
        return;
      }
      links[a] += m;
      auto const& l = net.link(a);
      frontier[l.head_].emplace_back(
          l.is_run() ? arrival_state{l.line_, net.node(l.head_).time_}
                     : arrival_state{kWaitLine, queue_tau},
          m);
    };
    for (auto i = 0U; i < states.size(); ++i) {
      auto st = states[i].first;
      auto m = states[i].second;
      while (i + 1 < states.size() && states[i + 1].first == st) {
        m += states[++i].second;
      }
      auto const sp = split_unit(net, s, load, n, st);
      if (all_or_nothing && !sp.links_.empty()) {
        // Most likely outcome; earlier preference wins ties.
        auto const best = std::max_element(
            begin(sp.links_), end(sp.links_),
            [](auto const& x, auto const& y) { return x.second < y.second; });
        push(best->first, sp.queue_tau_, m);
        continue;
      }
      for (auto const& [a, pr] : sp.links_) {
        push(a, sp.queue_tau_, m * pr);
      }
    }
  }
  u.links_.assign(begin(links), end(links));
  return u;
}

}  // namespace tfe
