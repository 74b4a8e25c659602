#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace tfe {

using stop_idx = std::int32_t;
using line_idx = std::int32_t;
using time_idx = std::int32_t;
using node_idx = std::int32_t;
using link_idx = std::int32_t;
using strategy_idx = std::int32_t;

// Pseudo-line of users who are queuing at a stop.
inline constexpr line_idx kWaitLine = -1;
inline constexpr link_idx kNoLink = -1;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Origin, destination, departure time: one element of the candidate OD set.
struct od_triple {
  stop_idx origin_{0};
  stop_idx destination_{0};
  time_idx depart_{0};

  friend auto operator<=>(od_triple const&, od_triple const&) = default;
};

}  // namespace tfe
