#include "tfe/bundle.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fmt/format.h"
#include "fmt/ranges.h"

#include "tfe/errors.h"
#include "tfe/network_io.h"

namespace tfe {

namespace {

std::string trim(std::string s) {
  auto const ws = " \t\r";
  auto const b = s.find_first_not_of(ws);
  if (b == std::string::npos) {
    return {};
  }
  auto const e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string const& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in{line};
  while (std::getline(in, cell, ',')) {
    out.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

template <typename T>
T parse_num(std::string const& s, fs::path const& file, std::size_t row,
            char const* col) {
  T v{};
  auto const* b = s.data();
  auto const* e = s.data() + s.size();
  auto const [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) {
    throw input_error{fmt::format("{}: row {}: column '{}': bad number '{}'",
                                  file.string(), row, col, s)};
  }
  return v;
}

// Column positions for the expected header, in order.
std::vector<std::size_t> columns(csv_table const& t, fs::path const& file,
                                 std::vector<char const*> const& names) {
  std::vector<std::size_t> idx;
  for (auto const* n : names) {
    auto const it = std::find(begin(t.header_), end(t.header_), n);
    if (it == end(t.header_)) {
      throw input_error{
          fmt::format("{}: missing column '{}'", file.string(), n)};
    }
    idx.push_back(static_cast<std::size_t>(it - begin(t.header_)));
  }
  return idx;
}

}  // namespace

void write_file_atomic(fs::path const& path, std::string const& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
    if (!out) {
      throw input_error{fmt::format("cannot write {}", tmp.string())};
    }
    out << content;
    if (!out) {
      throw input_error{fmt::format("cannot write {}", tmp.string())};
    }
  }
  fs::rename(tmp, path);
}

std::string format_flow(double v) {
  if (v == 0.0) {
    v = 0.0;  // no "-0.000000"
  }
  auto s = fmt::format("{:.6f}", v);
  return s == "-0.000000" ? "0.000000" : s;
}

csv_table read_csv(fs::path const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw input_error{fmt::format("cannot open {}", path.string())};
  }
  csv_table t;
  std::string line;
  auto first = true;
  auto row = std::size_t{1};
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty()) {
      continue;
    }
    auto cells = split(line);
    if (first) {
      t.header_ = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header_.size()) {
      throw input_error{fmt::format("{}: row {}: expected {} columns, got {}",
                                    path.string(), row - 1, t.header_.size(),
                                    cells.size())};
    }
    t.rows_.push_back(std::move(cells));
  }
  if (first) {
    throw input_error{fmt::format("{}: missing header row", path.string())};
  }
  return t;
}

std::string to_csv(csv_table const& t) {
  std::string s = fmt::format("{}\n", fmt::join(t.header_, ","));
  for (auto const& r : t.rows_) {
    s += fmt::format("{}\n", fmt::join(r, ","));
  }
  return s;
}

demand_vector read_demand(fs::path const& path) {
  auto const t = read_csv(path);
  auto const value_col = std::find(begin(t.header_), end(t.header_),
                                   "quantity") != end(t.header_)
                             ? "quantity"
                             : "demand";
  auto const c =
      columns(t, path, {"origin", "destination", "depart_time", value_col});
  demand_vector d;
  for (auto i = 0U; i < t.rows_.size(); ++i) {
    auto const& r = t.rows_[i];
    od_triple od{parse_num<int>(r[c[0]], path, i + 1, "origin"),
                 parse_num<int>(r[c[1]], path, i + 1, "destination"),
                 parse_num<int>(r[c[2]], path, i + 1, "depart_time")};
    auto const v = parse_num<double>(r[c[3]], path, i + 1, value_col);
    if (od.origin_ == od.destination_) {
      throw input_error{fmt::format(
          "{}: row {}: origin equals destination", path.string(), i + 1)};
    }
    if (!(v >= 0.0)) {
      throw input_error{fmt::format("{}: row {}: negative demand",
                                    path.string(), i + 1)};
    }
    d.ods_.push_back(od);
    d.values_.push_back(v);
  }
  return d;
}

void write_demand(fs::path const& path, demand_vector const& d,
                  char const* value_column) {
  csv_table t{{"origin", "destination", "depart_time", value_column}, {}};
  for (auto w = 0U; w < d.size(); ++w) {
    auto const& od = d.ods_[w];
    t.rows_.push_back({std::to_string(od.origin_),
                       std::to_string(od.destination_),
                       std::to_string(od.depart_), format_flow(d.values_[w])});
  }
  write_file_atomic(path, to_csv(t));
}

std::vector<measurement> read_counts(fs::path const& path) {
  auto const t = read_csv(path);
  auto const c =
      columns(t, path, {"stop_id", "channel", "period_index", "value"});
  std::vector<measurement> rows;
  for (auto i = 0U; i < t.rows_.size(); ++i) {
    auto const& r = t.rows_[i];
    measurement m;
    m.stop_ = parse_num<int>(r[c[0]], path, i + 1, "stop_id");
    try {
      m.channel_ = parse_channel(r[c[1]]);
    } catch (input_error const& e) {
      throw input_error{
          fmt::format("{}: row {}: {}", path.string(), i + 1, e.what())};
    }
    m.period_ = parse_num<int>(r[c[2]], path, i + 1, "period_index");
    m.value_ = parse_num<double>(r[c[3]], path, i + 1, "value");
    rows.push_back(m);
  }
  return rows;
}

void write_counts(fs::path const& path, std::vector<measurement> const& rows) {
  csv_table t{{"stop_id", "channel", "period_index", "value"}, {}};
  for (auto const& m : rows) {
    t.rows_.push_back({std::to_string(m.stop_), std::string{to_string(m.channel_)},
                       std::to_string(m.period_), format_flow(m.value_)});
  }
  write_file_atomic(path, to_csv(t));
}

std::vector<segment_flow> read_ridership(fs::path const& path) {
  auto const t = read_csv(path);
  auto const c = columns(t, path, {"line", "run_index", "from_stop", "to_stop",
                                   "depart_time", "flow"});
  std::vector<segment_flow> out;
  for (auto i = 0U; i < t.rows_.size(); ++i) {
    auto const& r = t.rows_[i];
    out.push_back({parse_num<int>(r[c[0]], path, i + 1, "line"),
                   parse_num<int>(r[c[1]], path, i + 1, "run_index"),
                   parse_num<int>(r[c[2]], path, i + 1, "from_stop"),
                   parse_num<int>(r[c[3]], path, i + 1, "to_stop"),
                   parse_num<int>(r[c[4]], path, i + 1, "depart_time"),
                   parse_num<double>(r[c[5]], path, i + 1, "flow")});
  }
  return out;
}

void write_ridership(fs::path const& path,
                     std::vector<segment_flow> const& rows) {
  csv_table t{
      {"line", "run_index", "from_stop", "to_stop", "depart_time", "flow"}, {}};
  for (auto const& s : rows) {
    t.rows_.push_back({std::to_string(s.line_), std::to_string(s.run_),
                       std::to_string(s.from_), std::to_string(s.to_),
                       std::to_string(s.depart_), format_flow(s.flow_)});
  }
  write_file_atomic(path, to_csv(t));
}

void write_gap_log(fs::path const& path,
                   std::vector<iteration_record> const& log) {
  csv_table t{{"iteration", "cost_f", "cost_g", "relative_gap"}, {}};
  for (auto const& r : log) {
    t.rows_.push_back({std::to_string(r.iteration_), format_flow(r.cost_f_),
                       format_flow(r.cost_g_), format_flow(r.gap_)});
  }
  write_file_atomic(path, to_csv(t));
}

void write_trajectory(fs::path const& path,
                      std::vector<aum_record> const& traj) {
  csv_table t{{"outer_iter", "sse_objective", "demand_mse", "demand_are"}, {}};
  for (auto const& r : traj) {
    t.rows_.push_back({std::to_string(r.outer_), format_flow(r.sse_),
                       format_flow(r.demand_mse_),
                       format_flow(r.demand_are_)});
  }
  write_file_atomic(path, to_csv(t));
}

void write_bundle(fs::path const& dir, scenario const& sc) {
  write_file_atomic(dir / "network.json", to_json(sc.network_).dump(2) + "\n");
  write_demand(dir / "demand.csv", sc.demand_);
  std::vector<std::string> ch;
  for (auto c : {channel::kEntry, channel::kExit, channel::kPassby}) {
    if (sc.channels_.has(c)) {
      ch.emplace_back(to_string(c));
    }
  }
  nlohmann::json meta{
      {"name", sc.name_},
      {"noise",
       {{"enabled", sc.noise_.enabled_},
        {"variance", sc.noise_.variance_},
        {"theta", sc.noise_.theta_}}},
      {"seed", sc.seed_},
      {"measured_stops", sc.measured_},
      {"channels", fmt::format("{}", fmt::join(ch, ","))},
      {"candidate_window", {sc.demand_begin_, sc.demand_end_}}};
  if (!sc.candidates_.empty()) {
    auto c = nlohmann::json::array();
    for (auto const& od : sc.candidates_) {
      c.push_back({od.origin_, od.destination_, od.depart_});
    }
    meta["candidates"] = std::move(c);
  }
  write_file_atomic(dir / "scenario.json", meta.dump(2) + "\n");
}

scenario read_bundle(fs::path const& dir) {
  scenario sc;
  auto const net_file = dir / "network.json";
  if (!fs::exists(net_file)) {
    throw input_error{fmt::format("{}: missing", net_file.string())};
  }
  sc.network_ = read_network(net_file);
  if (fs::exists(dir / "demand.csv")) {
    sc.demand_ = read_demand(dir / "demand.csv");
  }
  auto const meta_file = dir / "scenario.json";
  if (!fs::exists(meta_file)) {
    sc.demand_end_ = sc.network_.grid_.horizon_;
    return sc;
  }
  std::ifstream in{meta_file};
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
    sc.name_ = meta.value("name", std::string{});
    if (meta.contains("noise")) {
      auto const& n = meta.at("noise");
      sc.noise_.enabled_ = n.value("enabled", false);
      sc.noise_.variance_ = n.value("variance", 0.0);
      sc.noise_.theta_ = n.value("theta", 0.1);
    }
    sc.seed_ = meta.value("seed", std::uint64_t{1});
    sc.measured_ = meta.value("measured_stops", std::vector<stop_idx>{});
    sc.channels_ =
        channel_mask::parse(meta.value("channels", std::string{"entry,exit,passby"}));
    auto const win = meta.value(
        "candidate_window",
        std::vector<time_idx>{0, sc.network_.grid_.horizon_});
    if (win.size() != 2) {
      throw input_error{"candidate_window must be [begin, end]"};
    }
    sc.demand_begin_ = win[0];
    sc.demand_end_ = win[1];
    if (meta.contains("candidates")) {
      for (auto const& c : meta.at("candidates")) {
        sc.candidates_.push_back(
            {c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
      }
    }
  } catch (nlohmann::json::exception const& e) {
    throw input_error{fmt::format("{}: {}", meta_file.string(), e.what())};
  } catch (input_error const& e) {
    throw input_error{fmt::format("{}: {}", meta_file.string(), e.what())};
  }
  if (sc.noise_.variance_ < 0.0) {
    throw input_error{fmt::format("{}: noise variance must be >= 0",
                                  meta_file.string())};
  }
  return sc;
}

}  // namespace tfe
