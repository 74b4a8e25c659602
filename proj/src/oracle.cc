#include "tfe/oracle.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "fmt/format.h"

#include "tfe/equilibrium.h"
#include "tfe/errors.h"

namespace tfe {

namespace {

using mixture = std::vector<double>;  // shares of one OD, sum 1

constexpr int kRadius = 10;  // refinement half-width in grid steps

// All compositions of `steps` into k parts, as shares.
void compositions(int k, int steps, std::vector<mixture>& out) {
  std::vector<int> c(k, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == k - 1) {
      c[i] = left;
      mixture m(k);
      for (auto j = 0; j < k; ++j) {
        m[j] = static_cast<double>(c[j]) / steps;
      }
      out.push_back(std::move(m));
      return;
    }
    for (auto v = left; v >= 0; --v) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, steps);
}

// Mixtures within +-radius grid steps of `center` on a grid of width h.
std::vector<mixture> neighbourhood(mixture const& center, double h,
                                   int radius) {
  auto const k = static_cast<int>(center.size());
  std::vector<mixture> out;
  if (k == 1) {
    out.push_back({1.0});
    return out;
  }
  std::vector<int> off(k - 1, -radius);
  while (true) {
    mixture m(k);
    auto sum = 0.0;
    auto ok = true;
    for (auto j = 0; j < k - 1; ++j) {
      m[j] = center[j] + off[j] * h;
      if (m[j] < -1e-12) {
        ok = false;
      }
      m[j] = std::max(m[j], 0.0);
      sum += m[j];
    }
    m[k - 1] = 1.0 - sum;
    if (ok && m[k - 1] >= -1e-12) {
      m[k - 1] = std::max(m[k - 1], 0.0);
      out.push_back(std::move(m));
    }
    auto j = 0;
    while (j < k - 1 && off[j] == radius) {
      off[j++] = -radius;
    }
    if (j == k - 1) {
      break;
    }
    ++off[j];
  }
  return out;
}

struct evaluation {
  double score_{kInf};
  std::vector<mixture> mix_;
};

}  // namespace

oracle_result brute_force_equilibrium_oracle(
    te_network const& net, demand_vector const& demand,
    std::vector<std::vector<strategy>> const& candidates,
    oracle_config const& cfg) {
  if (candidates.size() != demand.size()) {
    throw contract_violation{"one candidate list per OD required"};
  }
  strategy_pool pool;
  std::vector<std::vector<strategy_idx>> ids(demand.size());
  for (auto w = 0U; w < demand.size(); ++w) {
    auto const& c = candidates[w];
    if (c.empty()) {
      throw contract_violation{"OD without candidate strategies"};
    }
    if (static_cast<int>(c.size()) > cfg.max_strategies_) {
      throw scenario_error{fmt::format(
          "oracle refuses {} strategies for one OD (limit {})", c.size(),
          cfg.max_strategies_)};
    }
    for (auto const& s : c) {
      if (s.destination() != demand.ods_[w].destination_) {
        throw contract_violation{"candidate strategy for wrong destination"};
      }
      ids[w].push_back(pool.add(s));
    }
  }

  auto to_flow = [&](std::vector<mixture> const& mix) {
    hyperpath_flow f;
    f.flows_.resize(demand.size());
    for (auto w = 0U; w < demand.size(); ++w) {
      std::map<strategy_idx, double> acc;
      for (auto j = 0U; j < mix[w].size(); ++j) {
        if (mix[w][j] > 0.0) {
          acc[ids[w][j]] += mix[w][j] * demand.values_[w];
        }
      }
      f.flows_[w].assign(begin(acc), end(acc));
    }
    return f;
  };

  auto score_of = [&](load_result const& load,
                      std::vector<mixture> const& mix) {
    auto worst = 0.0;
    for (auto w = 0U; w < demand.size(); ++w) {
      if (demand.values_[w] <= 0.0) {
        continue;
      }
      std::vector<double> cost(ids[w].size());
      auto best = kInf;
      for (auto j = 0U; j < ids[w].size(); ++j) {
        cost[j] = strategy_cost(net, pool[ids[w][j]], load, demand.ods_[w]);
        best = std::min(best, cost[j]);
      }
      for (auto j = 0U; j < ids[w].size(); ++j) {
        if (mix[w][j] > 0.0) {
          worst = std::max(worst, cost[j] - best);
        }
      }
    }
    return worst;
  };

  // Exhaustive product over per-OD option lists.
  auto sweep = [&](std::vector<std::vector<mixture>> const& options,
                   evaluation& inc) {
    auto points = 1.0;
    for (auto const& o : options) {
      points *= static_cast<double>(o.size());
    }
    if (points > static_cast<double>(cfg.max_points_)) {
      throw scenario_error{fmt::format(
          "oracle refuses {:.0f} grid points (limit {})", points,
          cfg.max_points_)};
    }
    std::vector<std::size_t> pos(options.size(), 0);
    std::vector<mixture> mix(options.size());
    while (true) {
      for (auto w = 0U; w < options.size(); ++w) {
        mix[w] = options[w][pos[w]];
      }
      auto const load = load_flows(net, pool, demand, to_flow(mix));
      auto const s = score_of(load, mix);
      if (s < inc.score_ - 1e-12 ||
          (std::abs(s - inc.score_) <= 1e-12 && mix < inc.mix_)) {
        inc.score_ = s;
        inc.mix_ = mix;
      }
      auto w = 0U;
      while (w < options.size() && pos[w] + 1 == options[w].size()) {
        pos[w++] = 0;
      }
      if (w == options.size()) {
        break;
      }
      ++pos[w];
    }
  };

  // Sizes are checked up front; materializing the grids is the expensive
  // part for many strategies.
  auto coarse = 1.0;
  auto fine = 1.0;
  for (auto const& v : ids) {
    auto const k = static_cast<int>(v.size());
    for (auto j = 1; j < k; ++j) {
      coarse *= static_cast<double>(cfg.steps_ + j) / j;
      fine *= 2.0 * kRadius + 1.0;
    }
  }
  if (std::max(coarse, cfg.refine_passes_ > 0 ? fine : 0.0) >
      static_cast<double>(cfg.max_points_)) {
    throw scenario_error{fmt::format(
        "oracle refuses {:.0f} grid points (limit {})", std::max(coarse, fine),
        cfg.max_points_)};
  }

  evaluation inc;
  std::vector<std::vector<mixture>> options(demand.size());
  for (auto w = 0U; w < demand.size(); ++w) {
    compositions(static_cast<int>(ids[w].size()), cfg.steps_, options[w]);
  }
  sweep(options, inc);

  auto h = 1.0 / cfg.steps_;
  for (auto p = 0; p < cfg.refine_passes_; ++p) {
    h /= 10.0;
    for (auto w = 0U; w < demand.size(); ++w) {
      options[w] = neighbourhood(inc.mix_[w], h, kRadius);
    }
    sweep(options, inc);
  }

  oracle_result r;
  r.flow_ = to_flow(inc.mix_);
  r.load_ = load_flows(net, pool, demand, r.flow_);
  r.score_ = inc.score_;
  r.pool_ = std::move(pool);
  return r;
}

}  // namespace tfe
