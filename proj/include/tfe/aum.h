#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "tfe/equilibrium.h"
#include "tfe/measurement.h"
#include "tfe/proportions.h"

namespace tfe {

enum class aum_variant { kSdmsa, kDsdmsa };
aum_variant parse_variant(std::string_view s);

struct aum_record {
  int outer_{0};
  double sse_{0.0};  // loaded counts vs measurements
  double demand_mse_{0.0};
  double demand_are_{0.0};
  int inner_iterations_{0};
  double gap_{0.0};
};

struct aum_config {
  double epsilon_lower_{0.005};  // equilibrium gap
  double epsilon_upper_{0.005};  // demand MSE between outer iterations
  int max_outer_{30};
  // Inner equilibrium budget; dsdmsa callers normally pass 1.
  int max_inner_{200};
  aum_variant variant_{aum_variant::kSdmsa};
  double ridge_{1e-8};
  // Called after every outer iteration (progress reporting).
  std::function<void(aum_record const&)> on_iteration_;
};

struct aum_result {
  demand_vector demand_;
  equilibrium_result equilibrium_;
  std::vector<aum_record> trajectory_;
  bool converged_{false};
  int best_outer_{0};
};

// Demand minimizing the squared count error for fixed proportions.
demand_vector solve_nnls_subproblem(proportion_matrix const& p,
                                    std::span<measurement const> rows,
                                    time_grid const& grid,
                                    std::span<od_triple const> ods,
                                    double ridge = 1e-8);

struct demand_change {
  double are_{0.0};
  double mse_{0.0};
  int skipped_{0};  // entries left out of ARE because d_prev = 0
};
demand_change convergence_metrics(std::span<double const> d_prev,
                                  std::span<double const> d_next);

// Sum of squared differences between the counts implied by a loading and
// the measurements.
double count_sse(te_network const& net, load_result const& load,
                 std::span<measurement const> rows);

aum_result run_aum(te_network const& net, std::span<measurement const> rows,
                   std::span<od_triple const> candidates,
                   aum_config const& cfg);

// Every ordered stop pair (origin != destination) times every departure in
// [begin, end).
std::vector<od_triple> all_candidates(stop_idx n_stops, time_idx begin,
                                      time_idx end);

}  // namespace tfe
