#include "tfe/cli.h"

#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>

#include "CLI11.hpp"
#include "fmt/format.h"

#include "tfe/aum.h"
#include "tfe/bundle.h"
#include "tfe/errors.h"
#include "tfe/evaluate.h"
#include "tfe/network.h"
#include "tfe/network_io.h"
#include "tfe/scenario.h"

namespace tfe {

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kBudget = 2;

struct solver_flags {
  double epsilon_lower_{0.005};
  double epsilon_upper_{0.005};
  int max_outer_{30};
  std::optional<int> max_inner_;
  std::string variant_{"sdmsa"};
  std::string channels_;
  double ridge_{1e-8};
};

struct generate_flags {
  std::string name_;
  fs::path out_{"."};
  bool with_counts_{false};
  std::optional<double> noise_var_;
  double theta_{0.1};
  std::optional<std::uint64_t> seed_;
  std::optional<int> measurement_period_;
  std::string measured_stops_;
};

std::vector<stop_idx> parse_stop_list(std::string const& s,
                                      stop_idx n_stops) {
  std::vector<stop_idx> out;
  std::stringstream ss{s};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) {
      continue;
    }
    stop_idx v{};
    try {
      std::size_t pos = 0;
      v = std::stoi(item, &pos);
      if (pos != item.size()) {
        throw std::invalid_argument{item};
      }
    } catch (std::exception const&) {
      throw input_error{fmt::format("--measured-stops: bad stop '{}'", item)};
    }
    if (v < 0 || v >= n_stops) {
      throw input_error{
          fmt::format("--measured-stops: stop {} out of range", v)};
    }
    out.push_back(v);
  }
  return out;
}

void check_tolerances(solver_flags const& f) {
  if (!(f.epsilon_lower_ > 0.0) || !(f.epsilon_upper_ > 0.0)) {
    throw input_error{"tolerances must be positive"};
  }
  if (f.max_outer_ < 1 || (f.max_inner_ && *f.max_inner_ < 1)) {
    throw input_error{"iteration budgets must be at least 1"};
  }
  if (f.ridge_ < 0.0) {
    throw input_error{"--ridge must be >= 0"};
  }
}

void set_measurement_period(network_spec& spec, int minutes) {
  auto& g = spec.grid_;
  if (minutes < 1 || minutes % g.unit_minutes_ != 0) {
    throw input_error{fmt::format(
        "--measurement-period {} is not a positive multiple of the {} min unit",
        minutes, g.unit_minutes_)};
  }
  g.boundaries_ = time_grid::uniform_boundaries(
      g.window_begin_, g.window_end_, minutes / g.unit_minutes_);
}

int cmd_generate(generate_flags const& gf, solver_flags const& sf) {
  check_tolerances(sf);
  scenario sc;
  if (gf.name_ == "example41") {
    sc = make_example41();
  } else if (gf.name_ == "sioux-falls") {
    sc = make_sioux_falls();
  } else {
    throw input_error{fmt::format("unknown scenario '{}'", gf.name_)};
  }
  if (gf.measurement_period_) {
    set_measurement_period(sc.network_, *gf.measurement_period_);
  }
  if (gf.noise_var_) {
    if (*gf.noise_var_ < 0.0) {
      throw input_error{"--noise-var must be >= 0"};
    }
    sc.noise_ = {true, *gf.noise_var_, gf.theta_};
  }
  if (gf.seed_) {
    sc.seed_ = *gf.seed_;
  }
  if (!gf.measured_stops_.empty()) {
    sc.measured_ = parse_stop_list(
        gf.measured_stops_, static_cast<stop_idx>(sc.network_.stops_.size()));
  }
  if (!sf.channels_.empty()) {
    sc.channels_ = channel_mask::parse(sf.channels_);
  }

  fs::create_directories(gf.out_);
  if (gf.with_counts_) {
    auto const net = build_te_network(sc.network_);
    auto const gt = forward_simulate(
        net, sc, {sf.epsilon_lower_, sf.max_inner_.value_or(200)});
    auto const rows = aggregate_counts(gt.counts_, net.grid(), sc.measured_,
                                       sc.channels_);
    write_bundle(gf.out_, sc);
    write_counts(gf.out_ / "counts.csv", rows);
    write_ridership(gf.out_ / "ground_truth_ridership.csv", gt.ridership_);
    write_gap_log(gf.out_ / "gap_trajectory.csv", gt.equilibrium_.log_);
  } else {
    write_bundle(gf.out_, sc);
  }
  return kOk;
}

int cmd_assign(fs::path const& bundle, fs::path const& out,
               solver_flags const& sf) {
  check_tolerances(sf);
  auto const sc = read_bundle(bundle);
  auto const net = build_te_network(sc.network_);
  equilibrium_config cfg;
  cfg.epsilon_ = sf.epsilon_lower_;
  cfg.max_inner_ = sf.max_inner_.value_or(200);
  auto const eq = solve_equilibrium(net, sc.demand_, cfg);
  fs::create_directories(out);
  write_ridership(out / "ridership.csv", ridership(net, eq.load_));
  write_gap_log(out / "gap_trajectory.csv", eq.log_);
  auto const gap = eq.log_.empty() ? 0.0 : eq.log_.back().gap_;
  std::cout << fmt::format("iterations {} gap {:.6g} cost {:.6f} {}\n",
                           eq.log_.size(), gap, total_cost(eq.load_),
                           eq.converged_ ? "converged" : "budget exhausted");
  return eq.converged_ ? kOk : kBudget;
}

int cmd_estimate(fs::path const& bundle, fs::path const& out,
                 solver_flags const& sf) {
  check_tolerances(sf);
  auto sc = read_bundle(bundle);
  auto const counts_file = bundle / "counts.csv";
  if (!fs::exists(counts_file)) {
    throw input_error{fmt::format("{}: missing", counts_file.string())};
  }
  auto const net = build_te_network(sc.network_);
  auto rows = read_counts(counts_file);
  auto const np = net.grid().n_periods();
  for (auto i = 0U; i < rows.size(); ++i) {
    auto const& m = rows[i];
    if (m.stop_ < 0 || m.stop_ >= net.n_stops()) {
      throw input_error{fmt::format("{}: row {}: unknown stop {}",
                                    counts_file.string(), i + 1, m.stop_)};
    }
    if (m.period_ < 0 || m.period_ >= np) {
      throw input_error{fmt::format(
          "{}: row {}: period {} outside the grid's {} measurement periods",
          counts_file.string(), i + 1, m.period_, np)};
    }
  }
  if (!sf.channels_.empty()) {
    auto const mask = channel_mask::parse(sf.channels_);
    std::erase_if(rows, [&](measurement const& m) {
      return !mask.has(m.channel_);
    });
  }

  aum_config cfg;
  cfg.epsilon_lower_ = sf.epsilon_lower_;
  cfg.epsilon_upper_ = sf.epsilon_upper_;
  cfg.max_outer_ = sf.max_outer_;
  cfg.variant_ = parse_variant(sf.variant_);
  cfg.max_inner_ = sf.max_inner_.value_or(
      cfg.variant_ == aum_variant::kDsdmsa ? 1 : 200);
  cfg.ridge_ = sf.ridge_;
  cfg.on_iteration_ = [](aum_record const& r) {
    std::cerr << fmt::format(
        "outer {:3d}  sse {:.6g}  demand mse {:.6g}  inner {} gap {:.4g}\n",
        r.outer_, r.sse_, r.demand_mse_, r.inner_iterations_, r.gap_);
  };

  auto const cand = sc.candidate_set();
  auto const res = run_aum(net, rows, cand, cfg);
  fs::create_directories(out);
  write_demand(out / "demand_estimate.csv", res.demand_, "demand");
  write_ridership(out / "ridership_estimate.csv",
                  ridership(net, res.equilibrium_.load_));
  write_trajectory(out / "trajectory.csv", res.trajectory_);
  std::cout << fmt::format("outer iterations {} best {} {}\n",
                           res.trajectory_.size(), res.best_outer_,
                           res.converged_ ? "converged" : "budget exhausted");
  return res.converged_ ? kOk : kBudget;
}

int cmd_evaluate(fs::path const& estimate_dir, fs::path const& truth_dir,
                 fs::path const& out) {
  auto const need = [](fs::path const& p) {
    if (!fs::exists(p)) {
      throw input_error{fmt::format("{}: missing", p.string())};
    }
    return p;
  };
  auto const est_rid =
      read_ridership(need(estimate_dir / "ridership_estimate.csv"));
  auto const true_rid =
      read_ridership(need(truth_dir / "ground_truth_ridership.csv"));
  auto const est_d = read_demand(need(estimate_dir / "demand_estimate.csv"));
  auto const true_d = read_demand(need(truth_dir / "demand.csv"));
  auto const spec = read_network(need(truth_dir / "network.json"));
  auto const unit = spec.grid_.unit_minutes_;
  if (60 % unit != 0) {
    throw input_error{"time unit must divide one hour"};
  }
  auto const rep = evaluate(est_rid, true_rid, est_d, true_d, 60 / unit);

  fs::create_directories(out);
  write_file_atomic(out / "report.json", rep.to_json().dump(2) + "\n");
  using key = std::tuple<line_idx, int, stop_idx, stop_idx, time_idx>;
  std::map<key, double> est;
  for (auto const& s : est_rid) {
    est[{s.line_, s.run_, s.from_, s.to_, s.depart_}] += s.flow_;
  }
  csv_table t{{"line", "run_index", "from_stop", "to_stop", "depart_time",
               "truth", "estimate"},
              {}};
  for (auto const& s : true_rid) {
    t.rows_.push_back(
        {std::to_string(s.line_), std::to_string(s.run_),
         std::to_string(s.from_), std::to_string(s.to_),
         std::to_string(s.depart_), format_flow(s.flow_),
         format_flow(est[{s.line_, s.run_, s.from_, s.to_, s.depart_}])});
  }
  write_file_atomic(out / "report.csv", to_csv(t));
  std::cout << fmt::format(
      "mse minute-od {:.6g} hourly-od {:.6g} ridership {:.6g}\n",
      rep.mse_minute_od_, rep.mse_hourly_od_, rep.mse_ridership_);
  return kOk;
}

void add_solver_flags(CLI::App* cmd, solver_flags& f, bool estimation) {
  cmd->add_option("--epsilon-lower", f.epsilon_lower_,
                  "equilibrium relative gap tolerance");
  cmd->add_option("--max-inner", f.max_inner_,
                  "equilibrium iterations per solve");
  if (estimation) {
    cmd->add_option("--epsilon-upper", f.epsilon_upper_,
                    "demand MSE tolerance between outer iterations");
    cmd->add_option("--max-outer", f.max_outer_, "outer iteration budget");
    cmd->add_option("--variant", f.variant_, "sdmsa or dsdmsa")
        ->check(CLI::IsMember({"sdmsa", "dsdmsa"}));
    cmd->add_option("--ridge", f.ridge_, "ridge weight of the NNLS subproblem");
  }
  cmd->add_option("--channels", f.channels_,
                  "comma separated subset of entry,exit,passby");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Transit OD demand and ridership estimation"};
  app.require_subcommand(1);

  generate_flags gf;
  solver_flags sf;
  fs::path bundle;
  fs::path out{"."};
  fs::path truth;

  auto* gen = app.add_subcommand("generate", "write a scenario bundle");
  gen->add_option("scenario", gf.name_, "example41 or sioux-falls")
      ->required()
      ->check(CLI::IsMember({"example41", "sioux-falls"}));
  gen->add_option("--out", gf.out_, "bundle directory");
  gen->add_flag("--with-counts", gf.with_counts_,
                "forward simulate and write counts and true ridership");
  gen->add_option("--noise-var", gf.noise_var_,
                  "variance of the log perception error");
  gen->add_option("--theta", gf.theta_, "logit dispersion");
  gen->add_option("--seed", gf.seed_, "noise seed");
  gen->add_option("--measurement-period", gf.measurement_period_,
                  "count aggregation period in minutes");
  gen->add_option("--measured-stops", gf.measured_stops_,
                  "comma separated stop ids (default all)");
  add_solver_flags(gen, sf, false);

  auto* asg = app.add_subcommand("assign", "solve the equilibrium");
  asg->add_option("bundle", bundle, "scenario bundle")->required();
  asg->add_option("--out", out, "output directory");
  add_solver_flags(asg, sf, false);

  auto* est = app.add_subcommand("estimate", "estimate demand from counts");
  est->add_option("bundle", bundle, "scenario bundle with counts.csv")
      ->required();
  est->add_option("--out", out, "output directory");
  add_solver_flags(est, sf, true);

  auto* ev = app.add_subcommand("evaluate", "compare estimates to truth");
  ev->add_option("estimates", bundle, "directory of estimate outputs")
      ->required();
  ev->add_option("truth", truth, "scenario bundle with ground truth")
      ->required();
  ev->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    auto const code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gf, sf);
    }
    if (asg->parsed()) {
      return cmd_assign(bundle, out, sf);
    }
    if (est->parsed()) {
      return cmd_estimate(bundle, out, sf);
    }
    return cmd_evaluate(bundle, truth, out);
  } catch (input_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (scenario_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (fs::filesystem_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace tfe
