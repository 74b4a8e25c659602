#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfe/loading.h"
#include "tfe/network.h"

namespace tfe {

enum class channel : std::uint8_t { kEntry, kExit, kPassby };
inline constexpr int kNumChannels = 3;

std::string_view to_string(channel c);
channel parse_channel(std::string_view s);

struct channel_mask {
  bool on_[kNumChannels]{true, true, true};

  bool has(channel c) const { return on_[static_cast<int>(c)]; }
  // Comma separated channel names, e.g. "entry,passby".
  static channel_mask parse(std::string_view s);
};

// One aggregated count X_{i,k}.
struct measurement {
  stop_idx stop_{0};
  channel channel_{channel::kEntry};
  int period_{0};
  double value_{0.0};
};

// Counts per channel, stop and time point: x[c][stop * H + h].
struct point_counts {
  stop_idx n_stops_{0};
  time_idx horizon_{0};
  std::vector<double> x_[kNumChannels];

  point_counts() = default;
  point_counts(stop_idx n_stops, time_idx horizon);
  double& at(channel c, stop_idx i, time_idx h) {
    return x_[static_cast<int>(c)][static_cast<std::size_t>(i * horizon_ + h)];
  }
  double at(channel c, stop_idx i, time_idx h) const {
    return x_[static_cast<int>(c)][static_cast<std::size_t>(i * horizon_ + h)];
  }
};

// Entry = departures, exit = arrivals at destinations, passby = flow on run
// segments leaving the stop at h (boarders and through riders).
point_counts counts_from_load(te_network const& net, load_result const& load);

// Partition sums over the grid's measurement periods; points outside the
// window are ignored.
std::vector<double> aggregate_to_periods(std::span<double const> x,
                                         time_grid const& grid);

// Rows for the measured stops (empty = all) and enabled channels.
std::vector<measurement> aggregate_counts(point_counts const& x,
                                          time_grid const& grid,
                                          std::span<stop_idx const> measured,
                                          channel_mask mask = {});

}  // namespace tfe
