#include "tfe/strategy.h"

#include <algorithm>
#include <numeric>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

namespace {

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6U) + (seed >> 2U);
}

}  // namespace

strategy::decision strategy::lookup(node_idx n, arrival_state s) const {
  auto const resolve = [&](std::uint32_t pref, bool cont) {
    if (pref == kUndefined) {
      return decision{};
    }
    return decision{true, cont, this->pref(pref)};
  };
  if (s.waiting()) {
    auto const entries = wait_entries(n);
    auto const it = std::upper_bound(
        begin(entries), end(entries), s.tau_,
        [](time_idx t, wait_entry const& e) { return t < e.tau_begin_; });
    if (it == begin(entries)) {
      return {};
    }
    return resolve(std::prev(it)->pref_, false);
  }
  for (auto const& e : line_entries(n)) {
    if (e.line_ == s.line_) {
      return resolve(e.pref_, e.continues_);
    }
  }
  return {};
}

bool operator==(strategy const& a, strategy const& b) {
  if (a.hash_ != b.hash_ || a.destination_ != b.destination_ ||
      a.wait_begin_ != b.wait_begin_ || a.line_begin_ != b.line_begin_) {
    return false;
  }
  auto const same_pref = [&](std::uint32_t x, std::uint32_t y) {
    if (x == strategy::kUndefined || y == strategy::kUndefined) {
      return x == y;
    }
    auto const px = a.pref(x);
    auto const py = b.pref(y);
    return std::equal(begin(px), end(px), begin(py), end(py));
  };
  for (auto i = 0U; i < a.wait_.size(); ++i) {
    if (a.wait_[i].tau_begin_ != b.wait_[i].tau_begin_ ||
        !same_pref(a.wait_[i].pref_, b.wait_[i].pref_)) {
      return false;
    }
  }
  for (auto i = 0U; i < a.line_.size(); ++i) {
    if (a.line_[i].line_ != b.line_[i].line_ ||
        a.line_[i].continues_ != b.line_[i].continues_ ||
        !same_pref(a.line_[i].pref_, b.line_[i].pref_)) {
      return false;
    }
  }
  return true;
}

nlohmann::json strategy::to_json(te_network const& net) const {
  auto out = nlohmann::json::array();
  auto const links = [&](std::uint32_t p) {
    return p == kUndefined ? std::vector<link_idx>{}
                           : std::vector<link_idx>(begin(pref(p)),
                                                   end(pref(p)));
  };
  for (auto n = node_idx{0}; n < n_nodes(); ++n) {
    auto const& nd = net.node(n);
    for (auto const& e : wait_entries(n)) {
      out.push_back({{"stop", nd.stop_},
                     {"time", nd.time_},
                     {"line", kWaitLine},
                     {"tau_from", e.tau_begin_},
                     {"continues", false},
                     {"links", links(e.pref_)}});
    }
    for (auto const& e : line_entries(n)) {
      out.push_back({{"stop", nd.stop_},
                     {"time", nd.time_},
                     {"line", e.line_},
                     {"tau_from", nd.time_},
                     {"continues", e.continues_},
                     {"links", links(e.pref_)}});
    }
  }
  return {{"destination", destination_}, {"states", std::move(out)}};
}

std::size_t strategy_builder::vec_hash::operator()(
    std::vector<link_idx> const& v) const {
  std::size_t h = v.size();
  for (auto const x : v) {
    hash_combine(h, static_cast<std::size_t>(x));
  }
  return h;
}

strategy_builder::strategy_builder(stop_idx destination, node_idx n_nodes)
    : destination_{destination},
      wait_(static_cast<std::size_t>(n_nodes)),
      line_(static_cast<std::size_t>(n_nodes)) {}

std::uint32_t strategy_builder::intern(std::span<link_idx const> prefs) {
  if (prefs.empty()) {
    return strategy::kUndefined;
  }
  std::vector<link_idx> key(begin(prefs), end(prefs));
  auto const [it, inserted] =
      ids_.try_emplace(key, static_cast<std::uint32_t>(pool_.size()));
  if (inserted) {
    pool_.push_back(std::move(key));
  }
  return it->second;
}

void strategy_builder::set_wait(node_idx n, time_idx tau,
                                std::span<link_idx const> prefs) {
  auto const id = intern(prefs);
  auto& entries = wait_[n];
  if (!entries.empty()) {
    if (tau < entries.back().tau_begin_) {
      throw contract_violation{"strategy_builder: tau must not decrease"};
    }
    if (entries.back().pref_ == id) {
      return;
    }
    if (entries.back().tau_begin_ == tau) {
      entries.back().pref_ = id;
      return;
    }
  } else if (id == strategy::kUndefined) {
    return;
  }
  entries.push_back({tau, id});
}

void strategy_builder::set_line(node_idx n, line_idx l, bool continues,
                                std::span<link_idx const> prefs) {
  auto& entries = line_[n];
  auto const id = intern(prefs);
  for (auto& e : entries) {
    if (e.line_ == l) {
      e = {l, id, continues && id != strategy::kUndefined};
      return;
    }
  }
  entries.push_back({l, id, continues && id != strategy::kUndefined});
}

strategy strategy_builder::finish() && {
  strategy s;
  s.destination_ = destination_;
  s.pool_begin_.push_back(0);
  for (auto const& p : pool_) {
    s.pool_.insert(end(s.pool_), begin(p), end(p));
    s.pool_begin_.push_back(static_cast<std::uint32_t>(s.pool_.size()));
  }
  s.wait_begin_.push_back(0);
  s.line_begin_.push_back(0);
  auto h = static_cast<std::size_t>(destination_);
  auto const hash_pref = [&](std::uint32_t id) {
    if (id == strategy::kUndefined) {
      hash_combine(h, 0x5bd1e995U);
      return;
    }
    hash_combine(h, vec_hash{}(pool_[id]));
  };
  for (auto n = 0U; n < wait_.size(); ++n) {
    hash_combine(h, n);
    for (auto const& e : wait_[n]) {
      s.wait_.push_back(e);
      hash_combine(h, static_cast<std::size_t>(e.tau_begin_));
      hash_pref(e.pref_);
    }
    s.wait_begin_.push_back(s.wait_.size());
    auto lines = line_[n];
    std::sort(begin(lines), end(lines),
              [](auto const& a, auto const& b) { return a.line_ < b.line_; });
    for (auto const& e : lines) {
      s.line_.push_back(e);
      hash_combine(h, static_cast<std::size_t>(e.line_) * 2U + e.continues_);
      hash_pref(e.pref_);
    }
    s.line_begin_.push_back(s.line_.size());
  }
  s.hash_ = h;
  return s;
}

std::vector<double> free_flow_distance(te_network const& net,
                                       stop_idx destination) {
  std::vector<double> dist(static_cast<std::size_t>(net.n_nodes()), kInf);
  for (auto n = net.n_nodes() - 1; n >= 0; --n) {
    if (net.node(n).stop_ == destination) {
      dist[n] = 0.0;
      continue;
    }
    for (auto const l : net.out_links(n)) {
      auto const& a = net.link(l);
      dist[n] = std::min(dist[n], a.base_cost_ + dist[a.head_]);
    }
  }
  return dist;
}

namespace {

// Ascending cost; ties: earlier head time, then smaller link id.
void sort_by_cost(te_network const& net, std::vector<link_idx>& links,
                  std::vector<double> const& cost_of_link_pos,
                  std::vector<link_idx> const& link_at_pos) {
  std::vector<std::size_t> idx(links.size());
  std::iota(begin(idx), end(idx), 0U);
  std::sort(begin(idx), end(idx), [&](std::size_t a, std::size_t b) {
    auto const ca = cost_of_link_pos[a];
    auto const cb = cost_of_link_pos[b];
    if (ca != cb) {
      return ca < cb;
    }
    auto const ha = net.node(net.link(link_at_pos[a]).head_).time_;
    auto const hb = net.node(net.link(link_at_pos[b]).head_).time_;
    if (ha != hb) {
      return ha < hb;
    }
    return link_at_pos[a] < link_at_pos[b];
  });
  for (auto i = 0U; i < idx.size(); ++i) {
    links[i] = link_at_pos[idx[i]];
  }
}

}  // namespace

strategy initial_strategy(te_network const& net, stop_idx destination) {
  auto const dist = free_flow_distance(net, destination);
  auto reachable = false;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    if (net.node(n).stop_ != destination && dist[n] < kInf) {
      reachable = true;
      break;
    }
  }
  if (!reachable) {
    throw scenario_error{fmt::format(
        "destination stop {} is unreachable from every node", destination)};
  }

  strategy_builder b{destination, net.n_nodes()};
  std::vector<link_idx> cand, prefs;
  std::vector<double> cost;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    if (net.node(n).stop_ == destination) {
      continue;
    }
    cand.clear();
    cost.clear();
    for (auto const l : net.out_links(n)) {
      auto const& a = net.link(l);
      auto const c = a.base_cost_ + dist[a.head_];
      if (c < kInf) {
        cand.push_back(l);
        cost.push_back(c);
      }
    }
    prefs = cand;
    sort_by_cost(net, prefs, cost, cand);
    b.set_wait(n, 0, prefs);
    for (auto const l : net.arriving_lines(n)) {
      auto const c = net.continuation(n, l);
      if (!prefs.empty() && c != kNoLink && prefs.front() == c) {
        b.set_line(n, l, true, std::span{&c, 1});
      } else {
        b.set_line(n, l, false, prefs);
      }
    }
  }
  return std::move(b).finish();
}

strategy make_line_strategy(te_network const& net, stop_idx destination,
                            std::span<line_rule const> rules) {
  auto const find_rule = [&](stop_idx s, line_idx l) -> line_rule const* {
    for (auto const& r : rules) {
      if (r.stop_ == s && r.line_ == l) {
        return &r;
      }
    }
    return nullptr;
  };

  strategy_builder b{destination, net.n_nodes()};
  std::vector<link_idx> queue_prefs;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    auto const stop = net.node(n).stop_;
    if (stop == destination) {
      continue;
    }
    queue_prefs.clear();
    if (auto const* r = find_rule(stop, kWaitLine); r != nullptr) {
      for (auto const bl : r->board_) {
        for (auto const l : net.out_links(n)) {
          if (net.link(l).is_run() && net.link(l).line_ == bl) {
            queue_prefs.push_back(l);
          }
        }
      }
    }
    if (net.waiting_link(n) != kNoLink) {
      queue_prefs.push_back(net.waiting_link(n));
    }
    b.set_wait(n, 0, queue_prefs);
    for (auto const l : net.arriving_lines(n)) {
      auto const c = net.continuation(n, l);
      auto const* r = find_rule(stop, l);
      auto const stay = r != nullptr ? r->continues_ : true;
      if (stay && c != kNoLink) {
        b.set_line(n, l, true, std::span{&c, 1});
      } else {
        b.set_line(n, l, false, queue_prefs);
      }
    }
  }
  return std::move(b).finish();
}

strategy_idx strategy_pool::add(strategy s) {
  auto const [lo, hi] = by_hash_.equal_range(s.hash());
  for (auto it = lo; it != hi; ++it) {
    if (strategies_[it->second] == s) {
      return it->second;
    }
  }
  auto const id = static_cast<strategy_idx>(strategies_.size());
  by_hash_.emplace(s.hash(), id);
  strategies_.push_back(std::move(s));
  return id;
}

double demand_vector::total() const {
  return std::accumulate(begin(values_), end(values_), 0.0);
}

double hyperpath_flow::od_total(std::size_t w) const {
  auto sum = 0.0;
  for (auto const& [s, f] : flows_[w]) {
    sum += f;
  }
  return sum;
}

bool hyperpath_flow::in_omega(demand_vector const& d, double tol) const {
  if (flows_.size() != d.size()) {
    return false;
  }
  for (auto w = 0U; w < d.size(); ++w) {
    for (auto const& [s, f] : flows_[w]) {
      if (f < 0.0) {
        return false;
      }
    }
    if (std::abs(od_total(w) - d.values_[w]) > tol) {
      return false;
    }
  }
  return true;
}

}  // namespace tfe
