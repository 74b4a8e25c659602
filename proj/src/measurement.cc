#include "tfe/measurement.h"

#include <algorithm>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

std::string_view to_string(channel c) {
  switch (c) {
    case channel::kEntry: return "entry";
    case channel::kExit: return "exit";
    case channel::kPassby: return "passby";
  }
  return "?";
}

channel parse_channel(std::string_view s) {
  for (auto c : {channel::kEntry, channel::kExit, channel::kPassby}) {
    if (s == to_string(c)) {
      return c;
    }
  }
  throw input_error{fmt::format("unknown channel '{}'", s)};
}

channel_mask channel_mask::parse(std::string_view s) {
  channel_mask m;
  std::fill(std::begin(m.on_), std::end(m.on_), false);
  while (!s.empty()) {
    auto const comma = s.find(',');
    auto const tok = s.substr(0, comma);
    if (!tok.empty()) {
      m.on_[static_cast<int>(parse_channel(tok))] = true;
    }
    if (comma == std::string_view::npos) {
      break;
    }
    s.remove_prefix(comma + 1);
  }
  if (std::none_of(std::begin(m.on_), std::end(m.on_),
                   [](bool b) { return b; })) {
    throw input_error{"channel mask selects no channel"};
  }
  return m;
}

point_counts::point_counts(stop_idx n_stops, time_idx horizon)
    : n_stops_{n_stops}, horizon_{horizon} {
  for (auto& v : x_) {
    v.assign(static_cast<std::size_t>(n_stops) *
                 static_cast<std::size_t>(horizon),
             0.0);
  }
}

point_counts counts_from_load(te_network const& net, load_result const& load) {
  point_counts x{net.n_stops(), net.horizon()};
  for (auto n = node_idx{0}; n < net.n_nodes(); ++n) {
    auto const [i, h] = net.node(n);
    for (auto const& p : load.departed_[n]) {
      x.at(channel::kEntry, i, h) += p.flow_;
    }
    for (auto const& p : load.absorbed_[n]) {
      x.at(channel::kExit, i, h) += p.flow_;
    }
    auto const outs = net.out_links(n);
    for (auto k = 0; k < net.n_out_runs(n); ++k) {
      x.at(channel::kPassby, i, h) +=
          load.volume_[outs[static_cast<std::size_t>(k)]];
    }
  }
  return x;
}

std::vector<double> aggregate_to_periods(std::span<double const> x,
                                         time_grid const& grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.n_periods()), 0.0);
  for (auto h = time_idx{0}; h < static_cast<time_idx>(x.size()); ++h) {
    auto const k = grid.period_of(h);
    if (k >= 0) {
      out[static_cast<std::size_t>(k)] += x[static_cast<std::size_t>(h)];
    }
  }
  return out;
}

std::vector<measurement> aggregate_counts(point_counts const& x,
                                          time_grid const& grid,
                                          std::span<stop_idx const> measured,
                                          channel_mask mask) {
  std::vector<stop_idx> stops(measured.begin(), measured.end());
  if (stops.empty()) {
    for (auto i = 0; i < x.n_stops_; ++i) {
      stops.push_back(i);
    }
  }
  std::sort(begin(stops), end(stops));
  stops.erase(std::unique(begin(stops), end(stops)), end(stops));
  std::vector<measurement> rows;
  for (auto const i : stops) {
    if (i < 0 || i >= x.n_stops_) {
      throw input_error{fmt::format("measured stop {} does not exist", i)};
    }
    for (auto c : {channel::kEntry, channel::kExit, channel::kPassby}) {
      if (!mask.has(c)) {
        continue;
      }
      auto const& v = x.x_[static_cast<int>(c)];
      auto const off = static_cast<std::size_t>(i * x.horizon_);
      auto const per = aggregate_to_periods(
          std::span{v.data() + off, static_cast<std::size_t>(x.horizon_)},
          grid);
      for (auto k = 0U; k < per.size(); ++k) {
        rows.push_back({i, c, static_cast<int>(k), per[k]});
      }
    }
  }
  return rows;
}

}  // namespace tfe
