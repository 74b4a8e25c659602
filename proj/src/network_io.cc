#include "tfe/network_io.h"

#include <fstream>

#include "fmt/format.h"

#include "tfe/errors.h"

namespace tfe {

using nlohmann::json;

namespace {

template <typename T>
T get(json const& j, char const* key, std::string const& ctx) {
  if (!j.contains(key)) {
    throw input_error{fmt::format("{}: missing field '{}'", ctx, key)};
  }
  try {
    return j.at(key).get<T>();
  } catch (json::exception const& e) {
    throw input_error{fmt::format("{}: field '{}': {}", ctx, key, e.what())};
  }
}

int minutes_to_units(int minutes, int unit, char const* what) {
  if (minutes % unit != 0) {
    throw input_error{fmt::format(
        "grid: {} {} min is not a multiple of the {} min unit", what, minutes,
        unit)};
  }
  return minutes / unit;
}

}  // namespace

network_spec parse_network(json const& doc) {
  network_spec spec;
  for (auto const& s : get<json>(doc, "stops", "network")) {
    spec.stops_.push_back({get<stop_idx>(s, "id", "stop"),
                           s.value("label", std::string{})});
  }
  for (auto const& l : get<json>(doc, "lines", "network")) {
    auto const ctx = fmt::format("line {}", l.value("id", -1));
    line ln;
    ln.id_ = get<line_idx>(l, "id", ctx);
    ln.label_ = l.value("label", std::string{});
    ln.stops_ = get<std::vector<stop_idx>>(l, "stop_sequence", ctx);
    ln.segment_minutes_ = get<std::vector<int>>(l, "segment_times", ctx);
    ln.capacity_ = get<double>(l, "capacity", ctx);
    ln.cost_factor_ = l.value("cost_factor", 1.0);
    if (l.contains("departures")) {
      ln.departure_minutes_ = get<std::vector<int>>(l, "departures", ctx);
    } else {
      auto const first = get<int>(l, "first_departure", ctx);
      auto const headway = get<int>(l, "headway", ctx);
      auto const count = get<int>(l, "count", ctx);
      if (headway <= 0 || count < 0) {
        throw input_error{ctx + ": headway must be > 0 and count >= 0"};
      }
      for (auto k = 0; k < count; ++k) {
        ln.departure_minutes_.push_back(first + k * headway);
      }
    }
    spec.lines_.push_back(std::move(ln));
  }

  auto const& g = get<json>(doc, "grid", "network");
  auto& grid = spec.grid_;
  grid.unit_minutes_ = g.value("unit_minutes", 1);
  if (grid.unit_minutes_ <= 0) {
    throw input_error{"grid: unit_minutes must be positive"};
  }
  auto const u = grid.unit_minutes_;
  grid.horizon_ =
      minutes_to_units(get<int>(g, "horizon", "grid"), u, "horizon");
  auto const window = g.value("window", std::vector<int>{0, grid.horizon_ * u});
  if (window.size() != 2) {
    throw input_error{"grid: window must be [begin, end]"};
  }
  grid.window_begin_ = minutes_to_units(window[0], u, "window begin");
  grid.window_end_ = minutes_to_units(window[1], u, "window end");
  if (g.contains("measurement_boundaries")) {
    for (auto const m : get<std::vector<int>>(g, "measurement_boundaries",
                                              "grid")) {
      grid.boundaries_.push_back(minutes_to_units(m, u, "boundary"));
    }
  } else {
    auto const period = minutes_to_units(g.value("measurement_period", u), u,
                                         "measurement period");
    grid.boundaries_ = time_grid::uniform_boundaries(
        grid.window_begin_, grid.window_end_, period);
  }

  spec.wait_weight_ = doc.value("wait_weight", 1.001);
  auto const cong = doc.value("congestion", std::string{"quadratic"});
  if (cong == "quadratic") {
    spec.congestion_ = congestion_model::kQuadratic;
  } else if (cong == "none") {
    spec.congestion_ = congestion_model::kNone;
  } else {
    throw input_error{fmt::format("unknown congestion model '{}'", cong)};
  }
  return spec;
}

json to_json(network_spec const& spec) {
  json doc;
  doc["stops"] = json::array();
  for (auto const& s : spec.stops_) {
    doc["stops"].push_back({{"id", s.id_}, {"label", s.label_}});
  }
  doc["lines"] = json::array();
  for (auto const& l : spec.lines_) {
    doc["lines"].push_back({{"id", l.id_},
                            {"label", l.label_},
                            {"stop_sequence", l.stops_},
                            {"segment_times", l.segment_minutes_},
                            {"departures", l.departure_minutes_},
                            {"capacity", l.capacity_},
                            {"cost_factor", l.cost_factor_}});
  }
  auto const u = spec.grid_.unit_minutes_;
  std::vector<int> bounds;
  for (auto const b : spec.grid_.boundaries_) {
    bounds.push_back(b * u);
  }
  doc["grid"] = {{"unit_minutes", u},
                 {"horizon", spec.grid_.horizon_ * u},
                 {"window", {spec.grid_.window_begin_ * u,
                             spec.grid_.window_end_ * u}},
                 {"measurement_boundaries", bounds}};
  doc["wait_weight"] = spec.wait_weight_;
  doc["congestion"] =
      spec.congestion_ == congestion_model::kNone ? "none" : "quadratic";
  return doc;
}

network_spec read_network(std::filesystem::path const& path) {
  std::ifstream in{path};
  if (!in) {
    throw input_error{fmt::format("cannot open {}", path.string())};
  }
  json doc;
  try {
    in >> doc;
  } catch (json::exception const& e) {
    throw input_error{fmt::format("{}: {}", path.string(), e.what())};
  }
  try {
    return parse_network(doc);
  } catch (input_error const& e) {
    throw input_error{fmt::format("{}: {}", path.string(), e.what())};
  }
}

void write_network(std::filesystem::path const& path,
                   network_spec const& spec) {
  std::ofstream out{path};
  if (!out) {
    throw input_error{fmt::format("cannot write {}", path.string())};
  }
  out << to_json(spec).dump(2) << '\n';
}

}  // namespace tfe
