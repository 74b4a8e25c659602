#include "tfe/aum.h"

#include <cmath>
#include <optional>
#include <set>

#include "fmt/format.h"

#include "tfe/errors.h"
#include "tfe/nnls.h"

namespace tfe {

aum_variant parse_variant(std::string_view s) {
  if (s == "sdmsa") {
    return aum_variant::kSdmsa;
  }
  if (s == "dsdmsa") {
    return aum_variant::kDsdmsa;
  }
  throw input_error{fmt::format("unknown variant '{}' (sdmsa|dsdmsa)", s)};
}

demand_vector solve_nnls_subproblem(proportion_matrix const& p,
                                    std::span<measurement const> rows,
                                    time_grid const& grid,
                                    std::span<od_triple const> ods,
                                    double ridge) {
  demand_vector d;
  d.ods_.assign(ods.begin(), ods.end());
  d.values_.assign(ods.size(), 0.0);
  if (rows.empty()) {
    fmt::print(stderr, "warning: no measurements, demand estimate is zero\n");
    return d;
  }
  auto const a = design_matrix(p, rows, grid);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (auto r = 0U; r < rows.size(); ++r) {
    b[r] = rows[r].value_;
  }
  nnls_options opt;
  opt.ridge_ = ridge;
  auto const res = solve_nnls(a, b, opt);
  for (auto w = 0U; w < ods.size(); ++w) {
    d.values_[w] = res.x_[w];
  }
  return d;
}

demand_change convergence_metrics(std::span<double const> d_prev,
                                  std::span<double const> d_next) {
  if (d_prev.size() != d_next.size()) {
    throw contract_violation{"convergence_metrics: size mismatch"};
  }
  demand_change m;
  if (d_prev.empty()) {
    return m;
  }
  auto are = 0.0;
  auto n_pos = 0;
  auto sq = 0.0;
  for (auto i = 0U; i < d_prev.size(); ++i) {
    auto const delta = d_next[i] - d_prev[i];
    sq += delta * delta;
    if (d_prev[i] > 0.0) {
      are += std::abs(delta) / d_prev[i];
      ++n_pos;
    } else {
      ++m.skipped_;
    }
  }
  m.mse_ = sq / static_cast<double>(d_prev.size());
  m.are_ = n_pos == 0 ? 0.0 : are / n_pos;
  return m;
}

double count_sse(te_network const& net, load_result const& load,
                 std::span<measurement const> rows) {
  auto const x = counts_from_load(net, load);
  auto const& g = net.grid();
  auto sse = 0.0;
  for (auto const& r : rows) {
    auto v = 0.0;
    for (auto h = g.boundaries_[static_cast<std::size_t>(r.period_)];
         h < g.boundaries_[static_cast<std::size_t>(r.period_) + 1]; ++h) {
      v += x.at(r.channel_, r.stop_, h);
    }
    sse += (v - r.value_) * (v - r.value_);
  }
  return sse;
}

std::vector<od_triple> all_candidates(stop_idx n_stops, time_idx begin,
                                      time_idx end) {
  std::vector<od_triple> w;
  for (auto q = 0; q < n_stops; ++q) {
    for (auto r = 0; r < n_stops; ++r) {
      if (q == r) {
        continue;
      }
      for (auto h = begin; h < end; ++h) {
        w.push_back({q, r, h});
      }
    }
  }
  return w;
}

aum_result run_aum(te_network const& net, std::span<measurement const> rows,
                   std::span<od_triple const> candidates,
                   aum_config const& cfg) {
  if (cfg.max_outer_ < 1 || cfg.max_inner_ < 1) {
    throw input_error{"iteration budgets must be >= 1"};
  }
  if (!(cfg.epsilon_lower_ > 0.0) || !(cfg.epsilon_upper_ > 0.0)) {
    throw input_error{"tolerances must be > 0"};
  }
  auto const& g = net.grid();
  for (auto const& r : rows) {
    if (r.period_ < 0 || r.period_ >= g.n_periods() || r.stop_ < 0 ||
        r.stop_ >= net.n_stops()) {
      throw input_error{fmt::format(
          "count row (stop {}, {}, period {}) does not match the grid",
          r.stop_, to_string(r.channel_), r.period_)};
    }
  }
  std::set<stop_idx> dest_set;
  for (auto const& od : candidates) {
    if (od.origin_ == od.destination_ || od.depart_ < 0 ||
        od.depart_ >= net.horizon() || od.origin_ < 0 ||
        od.origin_ >= net.n_stops() || od.destination_ < 0 ||
        od.destination_ >= net.n_stops()) {
      throw input_error{fmt::format("invalid candidate OD ({}, {}, {})",
                                    od.origin_, od.destination_, od.depart_)};
    }
    dest_set.insert(od.destination_);
  }

  // Free-flow all-or-nothing proportions. Candidates that cannot reach
  // their destination at all stay at zero demand.
  proportion_matrix p;
  std::vector<stop_idx> dests;
  std::vector<bool> feasible(candidates.size(), false);
  {
    strategy_pool pool;
    std::map<stop_idx, strategy_idx> probe;
    for (auto const r : dest_set) {
      try {
        probe[r] = pool.add(initial_strategy(net, r));
        dests.push_back(r);
      } catch (scenario_error const&) {
      }
    }
    for (auto w = 0U; w < candidates.size(); ++w) {
      auto const& od = candidates[w];
      auto const it = probe.find(od.destination_);
      if (it != end(probe)) {
        auto const dec = pool[it->second].lookup(
            net.node_of(od.origin_, od.depart_), {kWaitLine, od.depart_});
        feasible[w] = dec.defined_ && !dec.prefs_.empty();
      }
    }
    demand_vector zero;
    zero.ods_.assign(candidates.begin(), candidates.end());
    zero.values_.assign(candidates.size(), 0.0);
    p = extract_proportions(net, pool, zero, {}, empty_load(net), probe);
  }
  auto const drop_infeasible = [&] {
    for (auto w = 0U; w < candidates.size(); ++w) {
      if (!feasible[w]) {
        p.columns_[w].clear();
      }
    }
  };
  drop_infeasible();

  aum_result out;
  std::vector<double> d_prev(candidates.size(), 0.0);
  auto best_sse = kInf;
  std::optional<warm_start> warm;
  for (auto k = 1; k <= cfg.max_outer_; ++k) {
    auto d = solve_nnls_subproblem(p, rows, g, candidates, cfg.ridge_);
    for (auto w = 0U; w < candidates.size(); ++w) {
      if (!feasible[w]) {
        d.values_[w] = 0.0;
      }
    }
    equilibrium_config ec;
    ec.epsilon_ = cfg.epsilon_lower_;
    ec.max_inner_ = cfg.max_inner_;
    ec.extra_destinations_ = dests;
    auto eq = solve_equilibrium(net, d, ec, warm ? &*warm : nullptr);

    auto const change = convergence_metrics(d_prev, d.values_);
    aum_record rec{k,
                   count_sse(net, eq.load_, rows),
                   change.mse_,
                   change.are_,
                   static_cast<int>(eq.log_.size()),
                   eq.log_.back().gap_};
    out.trajectory_.push_back(rec);
    if (cfg.on_iteration_) {
      cfg.on_iteration_(rec);
    }
    auto const done = change.mse_ <= cfg.epsilon_upper_;

    if (done || rec.sse_ < best_sse) {
      best_sse = std::min(best_sse, rec.sse_);
      out.best_outer_ = k;
      out.demand_ = d;
      out.equilibrium_ = eq;
    }
    if (done) {
      out.converged_ = true;
      break;
    }
    p = extract_proportions(net, eq.pool_, d, eq.flow_, eq.load_, eq.best_);
    drop_infeasible();
    d_prev = d.values_;
    // The standard variant re-solves each equilibrium from the free-flow
    // strategies; the double-streamlined one keeps averaging.
    if (cfg.variant_ == aum_variant::kDsdmsa) {
      warm = continue_from(std::move(eq));
    }
  }
  return out;
}

}  // namespace tfe
