#include <cmath>

#include "gtest/gtest.h"

#include "tfe/equilibrium.h"
#include "tfe/errors.h"
#include "tfe/oracle.h"
#include "tfe/scenario.h"

#include "test_util.h"

using namespace tfe;
using tfe::test::make_line;
using tfe::test::make_spec;

namespace {

void expect_same_volumes(te_network const& net, load_result const& a,
                         load_result const& b, double tol) {
  for (auto l = link_idx{0}; l < net.n_links(); ++l) {
    EXPECT_NEAR(a.volume_[l], b.volume_[l], tol) << "link " << l;
  }
}

line_rule board(stop_idx s, std::vector<line_idx> lines) {
  return {.stop_ = s, .line_ = kWaitLine, .board_ = std::move(lines)};
}
line_rule stay(stop_idx s, line_idx l) {
  return {.stop_ = s, .line_ = l, .continues_ = true};
}
line_rule alight(stop_idx s, line_idx l) {
  return {.stop_ = s, .line_ = l, .continues_ = false};
}

}  // namespace

TEST(Oracle, SingleStrategy) {
  auto const net = build_te_network(
      make_spec(3, {make_line(0, {0, 1, 2}, {2, 3}, {0, 4}, 6.0)}, 12,
                congestion_model::kQuadratic));
  demand_vector d{{{0, 2, 0}}, {10.0}};
  auto const orc = brute_force_equilibrium_oracle(
      net, d, {{initial_strategy(net, 2)}});
  auto const eq = solve_equilibrium(net, d, {.epsilon_ = 1e-9});
  expect_same_volumes(net, orc.load_, eq.load_, 1e-3 * d.total());
  EXPECT_NEAR(orc.score_, 0.0, 1e-12);
}

TEST(Oracle, ParallelCongestedLines) {
  // Lines 0 (5 min) and 1 (7 min) both leave stop 0 at h = 0 with room for
  // everybody. Equal costs 5(1 + u^2) = 7(1 + (1 - u)^2) at u = x / 20
  // give 2u^2 - 14u + 9 = 0.
  auto const net = build_te_network(
      make_spec(2, {make_line(0, {0, 1}, {5}, {0}, 20.0),
                    make_line(1, {0, 1}, {7}, {0}, 20.0)},
                10, congestion_model::kQuadratic));
  demand_vector d{{{0, 1, 0}}, {20.0}};
  std::vector<std::vector<strategy>> cands(1);
  std::vector<line_rule> ra{board(0, {0})};
  std::vector<line_rule> rb{board(0, {1})};
  cands[0].push_back(make_line_strategy(net, 1, ra));
  cands[0].push_back(make_line_strategy(net, 1, rb));
  auto const orc = brute_force_equilibrium_oracle(net, d, cands);

  auto const u = (14.0 - std::sqrt(14.0 * 14.0 - 72.0)) / 4.0;
  auto const a = net.out_links(net.node_of(0, 0))[0];
  auto const b = net.out_links(net.node_of(0, 0))[1];
  EXPECT_NEAR(orc.load_.volume_[a], 20.0 * u, 1e-3 * 20.0);
  EXPECT_NEAR(orc.load_.volume_[b], 20.0 * (1.0 - u), 1e-3 * 20.0);

  auto const eq =
      solve_equilibrium(net, d, {.epsilon_ = 1e-9, .max_inner_ = 2000});
  expect_same_volumes(net, orc.load_, eq.load_, 1e-3 * d.total());
}

TEST(Oracle, Example41) {
  auto const sc = make_example41();
  auto const net = build_te_network(sc.network_);
  // N1 -> N2: get off l1 at N3, N4 or N5 and take l2 back.
  auto const s3 = make_line_strategy(
      net, 1, std::vector<line_rule>{board(0, {0}), alight(2, 0),
                                     board(2, {1})});
  auto const s4 = make_line_strategy(
      net, 1, std::vector<line_rule>{board(0, {0}), stay(2, 0), alight(3, 0),
                                     board(3, {1}), stay(3, 1)});
  auto const s5 = make_line_strategy(
      net, 1,
      std::vector<line_rule>{board(0, {0}), stay(2, 0), stay(3, 0),
                             board(4, {1}), stay(3, 1), stay(2, 1)});
  auto const n5 = make_line_strategy(
      net, 1, std::vector<line_rule>{board(4, {1}), stay(3, 1), stay(2, 1)});
  auto const orc = brute_force_equilibrium_oracle(
      net, sc.demand_, {{s3, s4, s5}, {n5}});
  EXPECT_NEAR(total_cost(orc.load_), 11750.0, 0.5);

  auto const eq = solve_equilibrium(net, sc.demand_,
                                    {.epsilon_ = 0.0, .max_inner_ = 2000});
  expect_same_volumes(net, orc.load_, eq.load_, 1e-3 * sc.demand_.total());
}

TEST(Oracle, RationedTransferSplitsAcrossRuns) {
  // l1 ends at N3; the first l2 run arrives there with 50 free seats.
  auto spec = make_example41().network_;
  spec.lines_[0].stops_ = {0, 2};
  spec.lines_[0].segment_minutes_ = {10};
  auto const net = build_te_network(spec);
  demand_vector const d{{{0, 1, 0}, {4, 1, 0}}, {100.0, 150.0}};
  auto const s3 = make_line_strategy(
      net, 1, std::vector<line_rule>{board(0, {0}), alight(2, 0),
                                     board(2, {1})});
  auto const n5 = make_line_strategy(
      net, 1, std::vector<line_rule>{board(4, {1}), stay(3, 1), stay(2, 1)});
  auto const orc = brute_force_equilibrium_oracle(net, d, {{s3}, {n5}});
  auto const n3 = net.out_links(net.node_of(2, 35));
  auto const n3_late = net.out_links(net.node_of(2, 45));
  EXPECT_NEAR(orc.load_.volume_[n3[0]], 200.0, 1e-9);
  EXPECT_NEAR(orc.load_.volume_[n3_late[0]], 50.0, 1e-9);

  auto const eq = solve_equilibrium(net, d, {.epsilon_ = 1e-9});
  expect_same_volumes(net, orc.load_, eq.load_, 1e-3 * d.total());
}

TEST(Oracle, RefusesOversizedEnumeration) {
  auto const sc = make_example41();
  auto const net = build_te_network(sc.network_);
  std::vector<strategy> many(6, initial_strategy(net, 1));
  EXPECT_THROW(brute_force_equilibrium_oracle(
                   net, sc.demand_, {many, many},
                   {.steps_ = 200, .max_points_ = 1000}),
               scenario_error);
}

TEST(Oracle, CandidateCountMustMatchDemand) {
  auto const sc = make_example41();
  auto const net = build_te_network(sc.network_);
  EXPECT_THROW(brute_force_equilibrium_oracle(
                   net, sc.demand_, {{initial_strategy(net, 1)}}),
               contract_violation);
}
