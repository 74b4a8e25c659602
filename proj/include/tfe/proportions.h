#pragma once

#include <map>
#include <span>
#include <vector>

#include "Eigen/SparseCore"

#include "tfe/loading.h"
#include "tfe/measurement.h"
#include "tfe/strategy.h"

namespace tfe {

struct proportion_entry {
  channel channel_{channel::kEntry};
  stop_idx stop_{0};
  time_idx time_{0};
  double value_{0.0};
};

// Column per OD: share of that OD's demand seen at (channel, stop, h).
struct proportion_matrix {
  std::vector<std::vector<proportion_entry>> columns_;
};

// ODs with demand use their strategy mixture under the loading; ODs without
// demand use a probe of probe[destination] (ODs whose destination has no
// probe get the entry indicator only).
proportion_matrix extract_proportions(
    te_network const& net, strategy_pool const& pool,
    demand_vector const& demand, hyperpath_flow const& flow,
    load_result const& load, std::map<stop_idx, strategy_idx> const& probe);

// Design matrix: one row per measurement, one column per OD. Rows sum the
// proportions over their period.
Eigen::SparseMatrix<double> design_matrix(proportion_matrix const& p,
                                          std::span<measurement const> rows,
                                          time_grid const& grid);

}  // namespace tfe
