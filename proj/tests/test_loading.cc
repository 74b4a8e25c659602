#include <map>
#include <random>

#include "gtest/gtest.h"

#include "tfe/loading.h"
#include "tfe/network.h"
#include "tfe/strategy.h"

#include "test_util.h"

using namespace tfe;
using tfe::test::make_line;
using tfe::test::make_spec;

namespace {

constexpr auto kInstances = 1000;
constexpr auto kTol = 1e-9;

std::size_t local(te_network const& net, node_idx n, link_idx a) {
  return static_cast<std::size_t>(a - net.out_links(n)[0]);
}

// Sum of packets per (group, strategy).
void accumulate(std::map<std::pair<int, strategy_idx>, double>& m,
                std::vector<packet> const& v, double sign) {
  for (auto const& p : v) {
    m[{p.key_.group_, p.key_.strategy_}] += sign * p.flow_;
  }
}

struct property_counts {
  int rounds_{0};
  int partial_rounds_{0};
  int continuing_nodes_{0};
};

void check_instance(test::instance const& in, property_counts& seen) {
  auto const& net = in.net_;
  auto const load =
      load_flows(net, in.pool_, in.demand_, in.flow_, {.per_od_ = true});
  auto const merged = load_flows(net, in.pool_, in.demand_, in.flow_);
  auto const ref =
      test::reference_loading(net, in.pool_, in.demand_, in.flow_);

  // Agreement with the reference loader and with the merged mode.
  for (auto a = link_idx{0}; a < net.n_links(); ++a) {
    ASSERT_NEAR(load.volume_[a], ref.volume_[static_cast<std::size_t>(a)],
                kTol)
        << "link " << a;
    ASSERT_NEAR(merged.volume_[a], load.volume_[a], kTol);
  }
  ASSERT_NEAR(load.total_unfinished(), ref.unfinished_, kTol);

  // Capacity feasibility.
  for (auto a = link_idx{0}; a < net.n_links(); ++a) {
    if (net.link(a).is_run()) {
      ASSERT_LE(load.volume_[a], net.link(a).capacity_ + kTol);
    }
  }

  auto total_absorbed = 0.0;
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    // Conservation per (OD, strategy).
    std::map<std::pair<int, strategy_idx>, double> bal;
    accumulate(bal, load.departed_[n], 1.0);
    for (auto const a : net.in_links(n)) {
      accumulate(bal, load.link_flows_[a], 1.0);
    }
    for (auto const a : net.out_links(n)) {
      accumulate(bal, load.link_flows_[a], -1.0);
    }
    accumulate(bal, load.absorbed_[n], -1.0);
    accumulate(bal, load.unfinished_[n], -1.0);
    for (auto const& [k, v] : bal) {
      ASSERT_NEAR(v, 0.0, kTol) << "node " << n;
    }
    for (auto const& p : load.absorbed_[n]) {
      total_absorbed += p.flow_;
    }

    auto const& tr = load.trace_[n];
    auto const n_runs = static_cast<std::size_t>(net.n_out_runs(n));
    if (n_runs == 0) {
      continue;
    }
    auto const outs = net.out_links(n);

    // Continuance priority: riders staying aboard are loaded before any
    // cohort and only reduce the capacity seen by the first round.
    ASSERT_EQ(tr.continuing_.size(), n_runs);
    auto any_cont = false;
    for (auto i = 0U; i < n_runs; ++i) {
      auto const cap = net.link(outs[i]).capacity_;
      ASSERT_NEAR(tr.continuing_[i],
                  ref.continuing_[static_cast<std::size_t>(n)][i], kTol);
      ASSERT_LE(tr.continuing_[i], cap + kTol);
      ASSERT_NEAR(tr.remaining_after_continuance_[i],
                  std::max(0.0, cap - tr.continuing_[i]), kTol);
      any_cont = any_cont || tr.continuing_[i] > 0.0;
    }
    seen.continuing_nodes_ += any_cont ? 1 : 0;
    if (!tr.cohorts_.empty() && !tr.cohorts_[0].rounds_.empty()) {
      auto const& first = tr.cohorts_[0].rounds_[0].remaining_;
      for (auto i = 0U; i < n_runs; ++i) {
        ASSERT_NEAR(first[i], tr.remaining_after_continuance_[i], kTol);
      }
    }

    // FIFO: once a cohort leaves a link full, no later cohort asks for it.
    std::vector<bool> full(n_runs, false);
    time_idx prev_tau = -1;
    for (auto const& co : tr.cohorts_) {
      ASSERT_GT(co.tau_, prev_tau);
      prev_tau = co.tau_;
      for (auto const& rd : co.rounds_) {
        for (auto i = 0U; i < n_runs; ++i) {
          if (full[i]) {
            ASSERT_EQ(rd.demand_[i], 0.0)
                << "cohort " << co.tau_ << " asks for a full link";
          }
        }
      }
      for (auto i = 0U; i < n_runs; ++i) {
        full[i] = full[i] || co.remaining_after_[i] <= kFullEps;
      }
    }

    // Served volume per link matches the trace: continuing plus the sum of
    // the served shares of every round.
    std::vector<double> boarded(n_runs, 0.0);
    for (auto const& co : tr.cohorts_) {
      for (auto const& rd : co.rounds_) {
        auto const frac = rd.saturated_ == kNoLink ? 1.0 : rd.delta_;
        for (auto i = 0U; i < n_runs; ++i) {
          boarded[i] += frac * rd.demand_[i];
        }
      }
    }
    for (auto i = 0U; i < n_runs; ++i) {
      ASSERT_NEAR(tr.continuing_[i] + boarded[i], load.volume_[outs[i]],
                  1e-8);
    }

    // delta is the smallest ratio, ties to the lowest link id.
    for (auto const& co : tr.cohorts_) {
      for (auto const& rd : co.rounds_) {
        ++seen.rounds_;
        auto best = kInf;
        auto arg = kNoLink;
        for (auto i = 0U; i < n_runs; ++i) {
          if (rd.demand_[i] > 0.0 && rd.remaining_[i] / rd.demand_[i] < best) {
            best = rd.remaining_[i] / rd.demand_[i];
            arg = outs[i];
          }
        }
        ASSERT_EQ(rd.delta_, best);
        if (rd.saturated_ == kNoLink) {
          ASSERT_GE(rd.delta_, 1.0 - 1e-12);
        } else {
          ++seen.partial_rounds_;
          ASSERT_LT(rd.delta_, 1.0);
          ASSERT_EQ(rd.saturated_, arg);
          // Each partial round removes its link for the rest of the cohort.
          ASSERT_LE(co.remaining_after_[local(net, n, arg)], kFullEps);
        }
      }
    }
  }
  ASSERT_NEAR(total_absorbed + load.total_unfinished(), in.demand_.total(),
              1e-8);
}

}  // namespace

TEST(LoadingProperties, RandomInstances) {
  std::mt19937_64 rng{20240601};
  property_counts seen;
  for (auto k = 0; k < kInstances; ++k) {
    auto const in = test::random_instance(rng);
    SCOPED_TRACE("instance " + std::to_string(k));
    check_instance(in, seen);
    if (HasFatalFailure()) {
      return;
    }
  }
  // The generator must actually exercise the congested branches.
  EXPECT_GT(seen.partial_rounds_, kInstances / 10);
  EXPECT_GT(seen.continuing_nodes_, kInstances / 10);
}

// Marginal user: the share of a tiny extra departure that boards each link
// converges to the virtual-flow probabilities.
TEST(LoadingProperties, AccessProbabilitiesMatchFiniteDifference) {
  std::mt19937_64 rng{99};
  auto checked = 0;
  for (auto k = 0; k < 300; ++k) {
    auto in = test::random_instance(rng);
    auto const& net = in.net_;
    auto const base = load_flows(net, in.pool_, in.demand_, in.flow_);
    auto const w = std::uniform_int_distribution<std::size_t>{
        0, in.demand_.size() - 1}(rng);
    auto const od = in.demand_.ods_[w];
    auto const s = in.flow_.flows_[w].front().first;
    auto const n = net.node_of(od.origin_, od.depart_);
    auto const d = in.pool_[s].lookup(n, {kWaitLine, od.depart_});
    if (!d.defined_) {
      continue;
    }
    auto const p =
        access_probabilities(net, base, n, od.depart_, d.prefs_);

    auto constexpr eps = 1e-7;
    in.demand_.ods_.push_back(od);
    in.demand_.values_.push_back(eps);
    in.flow_.flows_.push_back({{s, eps}});
    auto const probe = load_flows(net, in.pool_, in.demand_, in.flow_,
                                  {.per_od_ = true});
    auto const g = static_cast<std::int32_t>(in.demand_.size() - 1);
    std::map<link_idx, double> share;
    for (auto const a : net.out_links(n)) {
      for (auto const& pk : probe.link_flows_[a]) {
        if (pk.key_.group_ == g) {
          share[a] += pk.flow_ / eps;
        }
      }
    }
    for (auto const& pk : probe.unfinished_[n]) {
      if (pk.key_.group_ == g) {
        share[kNoLink] += pk.flow_ / eps;
      }
    }
    auto total = 0.0;
    for (auto const& [a, m] : p) {
      EXPECT_NEAR(share[a], m, 1e-5) << "link " << a;
      total += m;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (auto const& [a, m] : share) {
      auto const listed = std::ranges::any_of(
          p, [a = a](auto const& e) { return e.first == a; });
      if (!listed) {
        EXPECT_NEAR(m, 0.0, 1e-5);
      }
    }
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Loading, HalfOfCohortBoardsWhenHalfTheCapacityIsLeft) {
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {0, 4}, 50.0)}, 8));
  strategy_pool pool;
  auto const s = pool.add(initial_strategy(net, 1));
  demand_vector d{{{0, 1, 0}}, {100.0}};
  hyperpath_flow f{{{{s, 100.0}}}};
  auto const load = load_flows(net, pool, d, f);
  auto const n = net.node_of(0, 0);
  auto const& tr = load.trace_[n];
  ASSERT_EQ(tr.cohorts_.size(), 1U);
  ASSERT_EQ(tr.cohorts_[0].rounds_.size(), 1U);
  EXPECT_DOUBLE_EQ(tr.cohorts_[0].rounds_[0].delta_, 0.5);
  EXPECT_DOUBLE_EQ(load.volume_[net.out_links(n)[0]], 50.0);
  EXPECT_DOUBLE_EQ(load.volume_[net.waiting_link(n)], 50.0);
  // The remainder boards the second run at h = 4.
  EXPECT_DOUBLE_EQ(load.volume_[net.out_links(net.node_of(0, 4))[0]], 50.0);
}

TEST(Loading, UncongestedCohortBoardsFully) {
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {0}, 50.0)}, 4));
  strategy_pool pool;
  auto const s = pool.add(initial_strategy(net, 1));
  demand_vector d{{{0, 1, 0}}, {40.0}};
  hyperpath_flow f{{{{s, 40.0}}}};
  auto const load = load_flows(net, pool, d, f);
  auto const n = net.node_of(0, 0);
  auto const& rd = load.trace_[n].cohorts_[0].rounds_[0];
  EXPECT_GE(rd.delta_, 1.0);
  EXPECT_EQ(rd.saturated_, kNoLink);
  EXPECT_DOUBLE_EQ(load.volume_[net.out_links(n)[0]], 40.0);
}

TEST(Loading, EarlierCohortBoardsFirst) {
  // Run leaves stop 0 at h = 1; 30 users have queued since h = 0 and 40
  // arrive at h = 1.
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {1}, 50.0)}, 6));
  strategy_pool pool;
  auto const s = pool.add(initial_strategy(net, 1));
  demand_vector d{{{0, 1, 0}, {0, 1, 1}}, {30.0, 40.0}};
  hyperpath_flow f{{{{s, 30.0}}, {{s, 40.0}}}};
  auto const load = load_flows(net, pool, d, f);
  auto const ref = test::reference_loading(net, pool, d, f);
  auto const run = net.out_links(net.node_of(0, 1))[0];
  EXPECT_DOUBLE_EQ(ref.served_.at({run, 0}), 30.0);
  EXPECT_DOUBLE_EQ(ref.served_.at({run, 1}), 20.0);
  auto const& tr = load.trace_[net.node_of(0, 1)];
  ASSERT_EQ(tr.cohorts_.size(), 2U);
  EXPECT_EQ(tr.cohorts_[0].tau_, 0);
  EXPECT_DOUBLE_EQ(tr.cohorts_[0].rounds_[0].demand_[0], 30.0);
  EXPECT_EQ(tr.cohorts_[0].rounds_[0].saturated_, kNoLink);
  EXPECT_EQ(tr.cohorts_[1].tau_, 1);
  EXPECT_DOUBLE_EQ(tr.cohorts_[1].rounds_[0].delta_, 0.5);
  EXPECT_DOUBLE_EQ(load.volume_[run], 50.0);
}

TEST(Loading, StrandedFlowAtHorizonIsUnfinished) {
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {1}, {0}, 5.0)}, 2));
  strategy_pool pool;
  auto const s = pool.add(initial_strategy(net, 1));
  demand_vector d{{{0, 1, 0}}, {8.0}};
  hyperpath_flow f{{{{s, 8.0}}}};
  auto const load = load_flows(net, pool, d, f);
  EXPECT_DOUBLE_EQ(load.total_unfinished(), 3.0);
}

TEST(AccessProbabilities, SecondChoiceTakesTheOverflow) {
  // Lines 0 (capacity 50) and 1 (capacity 100) leave stop 0 at h = 0.
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {0}, 50.0),
                    make_line(1, {0, 1}, {2}, {0}, 100.0)},
                4));
  auto const n = net.node_of(0, 0);
  auto const outs = net.out_links(n);
  std::vector<link_idx> prefs{outs[0], outs[1], outs[2]};
  strategy_builder b{1, net.n_nodes()};
  b.set_wait(n, 0, prefs);
  for (auto h = 1; h < 4; ++h) {
    auto const m = net.node_of(0, h);
    auto const w = net.waiting_link(m);
    if (w != kNoLink) {
      b.set_wait(m, 0, std::span{&w, 1});
    }
  }
  strategy_pool pool;
  auto const s = pool.add(std::move(b).finish());
  demand_vector d{{{0, 1, 0}}, {100.0}};
  hyperpath_flow f{{{{s, 100.0}}}};
  auto const load = load_flows(net, pool, d, f);
  auto const p = access_probabilities(net, load, n, 0, prefs);
  ASSERT_EQ(p.size(), 2U);
  EXPECT_EQ(p[0].first, outs[0]);
  EXPECT_DOUBLE_EQ(p[0].second, 0.5);
  EXPECT_EQ(p[1].first, outs[1]);
  EXPECT_DOUBLE_EQ(p[1].second, 0.5);
}

TEST(AccessProbabilities, ExactFillCountsAsServed) {
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {0}, 100.0)}, 4));
  strategy_pool pool;
  auto const s = pool.add(initial_strategy(net, 1));
  demand_vector d{{{0, 1, 0}}, {100.0}};
  hyperpath_flow f{{{{s, 100.0}}}};
  auto const load = load_flows(net, pool, d, f);
  auto const n = net.node_of(0, 0);
  auto const prefs = pool[s].lookup(n, {kWaitLine, 0}).prefs_;
  auto const p = access_probabilities(net, load, n, 0, prefs);
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p[0].first, net.out_links(n)[0]);
  EXPECT_DOUBLE_EQ(p[0].second, 1.0);
}

TEST(AccessProbabilities, AbsentCohortBoardsFirstOpenLink) {
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {2}, {0}, 100.0)}, 4));
  auto const load = empty_load(net);
  auto const n = net.node_of(0, 0);
  auto const outs = net.out_links(n);
  std::vector<link_idx> prefs{outs[0], outs[1]};
  auto const p = access_probabilities(net, load, n, 0, prefs);
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p[0].first, outs[0]);
  EXPECT_DOUBLE_EQ(p[0].second, 1.0);
}
