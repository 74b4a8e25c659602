#include "tfe/evaluate.h"

#include <cmath>
#include <map>
#include <tuple>

#include "fmt/format.h"
#include "fmt/ranges.h"

#include "tfe/errors.h"

namespace tfe {

nlohmann::json evaluation_report::to_json() const {
  auto segs = nlohmann::json::array();
  for (auto const& s : segments_) {
    segs.push_back({{"from", s.from_},
                    {"to", s.to_},
                    {"truth", s.truth_},
                    {"estimate", s.estimate_}});
  }
  return {{"n_segments", n_segments_},
          {"mean_truth", mean_truth_},
          {"mean_estimate", mean_estimate_},
          {"std_error", std_error_},
          {"are", are_},
          {"mse_minute_od", mse_minute_od_},
          {"mse_hourly_od", mse_hourly_od_},
          {"mse_ridership", mse_ridership_},
          {"segments", std::move(segs)}};
}

evaluation_report evaluate(std::span<segment_flow const> estimated_ridership,
                           std::span<segment_flow const> true_ridership,
                           demand_vector const& estimated_demand,
                           demand_vector const& true_demand, int hour_units) {
  if (hour_units < 1) {
    throw input_error{"hour must span at least one time unit"};
  }
  using run_key = std::tuple<line_idx, int, stop_idx, stop_idx, time_idx>;
  std::map<run_key, std::pair<double, double>> runs;
  for (auto const& s : true_ridership) {
    runs[{s.line_, s.run_, s.from_, s.to_, s.depart_}].first += s.flow_;
  }
  std::vector<std::string> unmatched;
  for (auto const& s : estimated_ridership) {
    auto const it = runs.find({s.line_, s.run_, s.from_, s.to_, s.depart_});
    if (it == end(runs)) {
      unmatched.push_back(fmt::format("line {} run {} {}->{} @{}", s.line_,
                                      s.run_, s.from_, s.to_, s.depart_));
      continue;
    }
    it->second.second += s.flow_;
  }
  if (estimated_ridership.size() != true_ridership.size() ||
      !unmatched.empty()) {
    throw input_error{fmt::format(
        "ridership files cover different run segments ({} vs {} rows); "
        "unmatched: {}",
        estimated_ridership.size(), true_ridership.size(),
        fmt::join(unmatched, ", "))};
  }
  if (runs.empty()) {
    throw input_error{"no run segments to evaluate"};
  }

  evaluation_report rep;
  std::map<std::pair<stop_idx, stop_idx>, std::pair<double, double>> seg;
  auto sq = 0.0;
  for (auto const& [k, v] : runs) {
    auto& s = seg[{std::get<2>(k), std::get<3>(k)}];
    s.first += v.first;
    s.second += v.second;
    sq += (v.second - v.first) * (v.second - v.first);
  }
  rep.mse_ridership_ = sq / static_cast<double>(runs.size());

  auto sum_t = 0.0;
  auto sum_e = 0.0;
  auto sq_seg = 0.0;
  auto are = 0.0;
  auto n_pos = 0;
  for (auto const& [k, v] : seg) {
    rep.segments_.push_back({k.first, k.second, v.first, v.second});
    sum_t += v.first;
    sum_e += v.second;
    sq_seg += (v.second - v.first) * (v.second - v.first);
    if (v.first > 0.0) {
      are += std::abs(v.second - v.first) / v.first;
      ++n_pos;
    }
  }
  auto const n = static_cast<double>(seg.size());
  rep.n_segments_ = static_cast<int>(seg.size());
  rep.mean_truth_ = sum_t / n;
  rep.mean_estimate_ = sum_e / n;
  rep.std_error_ = std::sqrt(sq_seg / n);
  rep.are_ = n_pos == 0 ? 0.0 : are / n_pos;

  std::map<od_triple, std::pair<double, double>> od;
  for (auto w = 0U; w < true_demand.size(); ++w) {
    od[true_demand.ods_[w]].first += true_demand.values_[w];
  }
  for (auto w = 0U; w < estimated_demand.size(); ++w) {
    od[estimated_demand.ods_[w]].second += estimated_demand.values_[w];
  }
  std::map<od_triple, std::pair<double, double>> hourly;
  auto sq_od = 0.0;
  for (auto const& [k, v] : od) {
    sq_od += (v.second - v.first) * (v.second - v.first);
    auto& hv = hourly[{k.origin_, k.destination_, k.depart_ / hour_units}];
    hv.first += v.first;
    hv.second += v.second;
  }
  rep.mse_minute_od_ = od.empty() ? 0.0 : sq_od / static_cast<double>(od.size());
  auto sq_h = 0.0;
  for (auto const& [k, v] : hourly) {
    sq_h += (v.second - v.first) * (v.second - v.first);
  }
  rep.mse_hourly_od_ =
      hourly.empty() ? 0.0 : sq_h / static_cast<double>(hourly.size());
  return rep;
}

}  // namespace tfe
