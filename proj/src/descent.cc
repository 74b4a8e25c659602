#include "tfe/descent.h"

#include <algorithm>

#include "tfe/errors.h"

namespace tfe {

value_function::value_function(te_network const& net, stop_idx destination)
    : net_{&net}, destination_{destination} {
  wait_begin_.reserve(static_cast<std::size_t>(net.n_nodes()) + 1);
  rider_begin_.reserve(static_cast<std::size_t>(net.n_nodes()) + 1);
  std::size_t w = 0;
  std::size_t r = 0;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    wait_begin_.push_back(w);
    rider_begin_.push_back(r);
    w += static_cast<std::size_t>(net.node(n).time_) + 1;
    r += net.arriving_lines(n).size();
  }
  wait_begin_.push_back(w);
  rider_begin_.push_back(r);
  wait_.assign(w, kInf);
  rider_.assign(r, kInf);
  continue_.assign(r, 0);
}

std::size_t value_function::rider_slot(node_idx n, line_idx l) const {
  auto const lines = net_->arriving_lines(n);
  auto const it = std::lower_bound(begin(lines), end(lines), l);
  if (it == end(lines) || *it != l) {
    throw contract_violation{"value_function: line does not arrive at node"};
  }
  return rider_begin_[n] + static_cast<std::size_t>(it - begin(lines));
}

double value_function::rider(node_idx n, line_idx l) const {
  return rider_[rider_slot(n, l)];
}
double& value_function::rider(node_idx n, line_idx l) {
  return rider_[rider_slot(n, l)];
}
bool value_function::continues(node_idx n, line_idx l) const {
  return continue_[rider_slot(n, l)] != 0;
}
void value_function::set_continues(node_idx n, line_idx l, bool c) {
  continue_[rider_slot(n, l)] = c ? 1 : 0;
}

double link_value(te_network const& net, load_result const& load,
                  value_function const& phi, link_idx a, time_idx tau) {
  auto const& l = net.link(a);
  auto const down =
      l.is_run() ? phi.rider(l.head_, l.line_) : phi.wait(l.head_, tau);
  return load.cost_[a] + down;
}

double expected_cost(te_network const& net, load_result const& load,
                     value_function const& phi, node_idx n, time_idx tau,
                     std::span<link_idx const> prefs) {
  auto sum = 0.0;
  for (auto const& [a, p] : access_probabilities(net, load, n, tau, prefs)) {
    if (a == kNoLink) {
      return kInf;
    }
    sum += p * link_value(net, load, phi, a, tau);
  }
  return sum;
}

descent_result descent_direction(te_network const& net, load_result const& load,
                                 stop_idx destination) {
  value_function phi{net, destination};
  strategy_builder b{destination, net.n_nodes()};

  struct cand {
    double pi_;
    time_idx head_time_;
    link_idx id_;
    bool operator<(cand const& o) const {
      return std::tie(pi_, head_time_, id_) <
             std::tie(o.pi_, o.head_time_, o.id_);
    }
  };
  std::vector<cand> runs, all;
  std::vector<link_idx> prefs, alight_prefs;

  for (auto n = net.n_nodes() - 1; n >= 0; --n) {
    auto const h = net.node(n).time_;
    if (net.node(n).stop_ == destination) {
      for (auto tau = 0; tau <= h; ++tau) {
        phi.wait(n, tau) = 0.0;
      }
      for (auto const l : net.arriving_lines(n)) {
        phi.rider(n, l) = 0.0;
      }
      continue;
    }

    runs.clear();
    auto const outs = net.out_links(n);
    for (auto i = 0; i < net.n_out_runs(n); ++i) {
      auto const a = outs[static_cast<std::size_t>(i)];
      auto const pi = link_value(net, load, phi, a, h);
      if (pi < kInf) {
        runs.push_back({pi, net.node(net.link(a).head_).time_, a});
      }
    }
    std::sort(begin(runs), end(runs));
    auto const w = net.waiting_link(n);

    for (auto tau = 0; tau <= h; ++tau) {
      all = runs;
      if (w != kNoLink) {
        auto const pi = link_value(net, load, phi, w, tau);
        if (pi < kInf) {
          all.insert(std::upper_bound(begin(all), end(all),
                                      cand{pi, h + 1, w}),
                     cand{pi, h + 1, w});
        }
      }
      prefs.clear();
      for (auto const& c : all) {
        prefs.push_back(c.id_);
        if (c.id_ == w) {
          break;
        }
      }
      phi.wait(n, tau) =
          prefs.empty() ? kInf : expected_cost(net, load, phi, n, tau, prefs);
      b.set_wait(n, tau, prefs);
      if (tau == h) {
        alight_prefs = prefs;
      }
    }

    for (auto const l : net.arriving_lines(n)) {
      auto const alight = phi.wait(n, h);
      auto const c = net.continuation(n, l);
      auto const stay = c == kNoLink ? kInf
                                     : load.cost_[c] +
                                           phi.rider(net.link(c).head_, l);
      if (stay < kInf && stay <= alight) {
        phi.rider(n, l) = stay;
        phi.set_continues(n, l, true);
        b.set_line(n, l, true, std::span{&c, 1});
      } else {
        phi.rider(n, l) = alight;
        b.set_line(n, l, false, alight_prefs);
      }
    }
  }
  return {std::move(b).finish(), std::move(phi)};
}

}  // namespace tfe
