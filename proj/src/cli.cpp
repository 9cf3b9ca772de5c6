#include "ringsim/harness.hpp"

#include "ringsim/angles.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace ringsim {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

ExperimentConfig resolve_config(const Common &c) {
  ExperimentConfig cfg = c.config.empty() ? default_experiment_config() : load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.trajectory.seed = *c.seed;
    cfg.hw.run.seed = *c.seed;
  }
  return cfg;
}

std::ofstream open_out(const fs::path &dir, const std::string &name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f)
    throw std::runtime_error("cannot write " + (dir / name).string());
  return f;
}

void write_json(const fs::path &dir, const std::string &name, const json &j) {
  auto f = open_out(dir, name);
  f << std::setw(2) << j << '\n';
}

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config, "TOML config file (or a JSON report to replay)");
  cmd->add_option("--seed", c.seed, "Override every seed in the config");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

std::vector<std::size_t> parse_counts(const std::string &s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || tok.front() == '-')
      throw std::invalid_argument("bad count '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw std::invalid_argument("no counts given");
  return out;
}

std::vector<double> parse_values(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (tok.empty() || used != tok.size())
      throw std::invalid_argument("bad value '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw std::invalid_argument("no values given");
  return out;
}

Trajectory load_trajectory(const std::string &which, const ExperimentConfig &cfg) {
  if (which == "wide" || which == "limited") {
    PresetParams p = cfg.trajectory;
    p.preset = which == "wide" ? MotionPreset::wide : MotionPreset::limited;
    return make_preset(p);
  }
  return import_trajectory(which);
}

int cmd_simulate(const Common &c, double t_end, const std::string &model,
                 const std::string &velocity_csv, double velocity) {
  const auto cfg = resolve_config(c);
  const ModelKind kind = model_kind_from_string(model);
  if (kind == ModelKind::hw)
    throw std::invalid_argument("use the hw subcommands for the hardware model");
  SimConfig sim = make_sim_config(cfg, kind == ModelKind::bounded);
  VelocityProfile profile = VelocityProfile::step_at(sim.init_duration, velocity);
  if (!velocity_csv.empty()) {
    std::ifstream in(velocity_csv);
    if (!in)
      throw std::invalid_argument("cannot open " + velocity_csv);
    profile = read_velocity_csv(in);
  }
  const auto result = run(sim, profile, t_end);
  const auto trace = decode_trace(result.raster, sim.geometry, kPvaStep, kPvaWindow);
  {
    auto f = open_out(c.out, "raster.csv");
    write_raster_csv(f, result.raster);
  }
  {
    auto f = open_out(c.out, "trace.csv");
    write_trace_csv(f, trace);
  }
  double err = 0.0;
  std::size_t valid = 0;
  for (const auto &s : trace.samples)
    if (s.valid) {
      err += std::abs(to_degrees(wrap_diff(s.angle, sim.init_angle)));
      ++valid;
    }
  const auto rates = mean_rate_profile(result.raster, std::min(sim.init_duration + 0.1, t_end / 2),
                                       t_end, sim.geometry.n);
  json summary{{"version", kVersion},
               {"model", model},
               {"t_end", t_end},
               {"seed", cfg.seed},
               {"spikes", result.raster.events.size()},
               {"valid_samples", valid},
               {"peak_rate_hz", rates.empty() ? 0.0 : *std::max_element(rates.begin(), rates.end())},
               {"config", to_json(cfg)}};
  if (velocity == 0.0 && velocity_csv.empty())
    summary["mean_stationary_error_deg"] = valid ? err / static_cast<double>(valid) : 0.0;
  write_json(c.out, "summary.json", summary);
  std::cout << "wrote raster.csv, trace.csv, summary.json to " << c.out << '\n';
  return 0;
}

int cmd_track(const Common &c, const std::string &model, const std::string &trajectory,
              std::optional<std::size_t> pairs) {
  auto cfg = resolve_config(c);
  if (model == "both" && trajectory != "wide" && trajectory != "limited")
    throw std::invalid_argument("paired runs need a preset trajectory");
  if (model == "both") {
    cfg.trajectory.preset = trajectory == "wide" ? MotionPreset::wide : MotionPreset::limited;
    if (pairs)
      cfg.pairs = *pairs;
    const auto s = paired_tracking(cfg);
    json out = to_json(s);
    out["version"] = kVersion;
    out["trajectory"] = trajectory;
    out["config"] = to_json(cfg);
    write_json(c.out, "summary.json", out);
    std::cout << "bounded wins " << s.bounded_wins << "/" << s.pairs.size() << "; mean error bounded "
              << s.bounded_mean_deg << " deg, unbounded " << s.unbounded_mean_deg << " deg\n";
    return 0;
  }
  ExperimentSpec spec;
  spec.name = "track-" + model + "-" + fs::path(trajectory).stem().string();
  spec.model = model_kind_from_string(model);
  spec.config = cfg;
  spec.seed = cfg.seed;
  spec.trajectory = load_trajectory(trajectory, cfg);
  const auto rep = run_tracking_experiment(spec);
  write_json(c.out, "summary.json", to_json(rep));
  if (!rep.failure.empty()) {
    std::cerr << "simulation failed: " << rep.failure << '\n';
    return 1;
  }
  {
    auto f = open_out(c.out, "trace.csv");
    write_trace_csv(f, rep.runs.front().trace);
  }
  std::cout << model << ": mean error " << rep.runs.front().error.mean_deg << " deg (std "
            << rep.runs.front().error.std_deg << ")\n";
  return 0;
}

GridSpace load_space(const std::string &path) {
  if (path.empty())
    return GridSpace::defaults();
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw std::invalid_argument(std::string("space file: ") + e.what());
  }
  GridSpace s;
  if (j.contains("budget"))
    s.budget = j.at("budget").get<std::size_t>();
  for (const auto &r : j.at("ranges")) {
    ParamRange pr;
    pr.param = grid_param_from_string(r.at("param").get<std::string>());
    pr.lo = r.at("lo").get<double>();
    pr.hi = r.contains("hi") ? r.at("hi").get<double>() : pr.lo;
    pr.steps = r.contains("steps") ? r.at("steps").get<std::size_t>() : 5;
    s.ranges.push_back(pr);
  }
  return s;
}

int cmd_calibrate(const Common &c, const std::string &space_path, const std::string &out_file,
                  bool include_gains, bool skip_refine) {
  const auto cfg = resolve_config(c);
  const SimConfig base = make_sim_config(cfg, false);
  GridSpace space = space_path.empty() ? GridSpace::defaults(include_gains) : load_space(space_path);
  CalibrationObjective obj;
  auto ranked = grid_search(base, space, obj);
  json board = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(ranked.size(), 20); ++k)
    board.push_back(to_json(ranked[k]));
  json out{{"version", kVersion}, {"grid_points", ranked.size()}, {"leaderboard", board}};
  CalibrationResult best = ranked.front();
  if (!skip_refine) {
    best = refine_gsin(base, best, obj);
    if (!best.warning.empty())
      std::cerr << "warning: " << best.warning << '\n';
  }
  out["result"] = to_json(best);
  out["config"] = to_json(cfg);
  fs::path target = out_file.empty() ? fs::path(c.out) / "calibration.json" : fs::path(out_file);
  if (target.has_parent_path())
    fs::create_directories(target.parent_path());
  std::ofstream f(target);
  if (!f)
    throw std::runtime_error("cannot write " + target.string());
  f << std::setw(2) << out << '\n';
  std::cout << "g_sin " << best.gains.g_sin << ", i_bg " << best.i_bg << ", kappa "
            << best.velocity_gain_kappa << " +- " << best.kappa_stderr << '\n';
  return 0;
}

int cmd_sweep(const Common &c, const std::string &param, const std::string &values,
              const std::string &model) {
  const auto cfg = resolve_config(c);
  SweepParam p;
  if (param == "n_neurons")
    p = SweepParam::n_neurons;
  else if (param == "rate_scale")
    p = SweepParam::rate_scale;
  else
    throw std::invalid_argument("unknown sweep parameter '" + param + "'");
  const ModelKind kind = model_kind_from_string(model);
  if (kind == ModelKind::hw)
    throw std::invalid_argument("sweeps run on a continuous model");
  SweepSettings settings;
  settings.base = make_sim_config(cfg, kind == ModelKind::bounded);
  settings.trajectory = cfg.trajectory;
  settings.trajectory.preset = MotionPreset::wide;
  const auto rows = robustness_sweep(p, parse_values(values), CalibrationObjective{}, settings);
  {
    auto f = open_out(c.out, "sweep.csv");
    f << param << ",mae_deg,i_bg,peak_rate_hz,error\n";
    for (const auto &r : rows) {
      f << r.value << ',';
      if (r.mae_deg)
        f << *r.mae_deg;
      f << ',' << r.i_bg << ',' << r.peak_rate_hz << ',' << r.error << '\n';
    }
  }
  json table = json::array();
  for (const auto &r : rows)
    table.push_back({{"value", r.value},
                     {"mae_deg", r.mae_deg ? json(*r.mae_deg) : json()},
                     {"i_bg", r.i_bg},
                     {"peak_rate_hz", r.peak_rate_hz},
                     {"error", r.error}});
  write_json(c.out, "summary.json",
             {{"version", kVersion}, {"param", param}, {"model", model}, {"rows", table},
              {"config", to_json(cfg)}});
  for (const auto &r : rows) {
    std::cout << param << '=' << r.value << ": ";
    if (r.mae_deg)
      std::cout << "MAE " << *r.mae_deg << " deg\n";
    else
      std::cout << "failed (" << r.error << ")\n";
  }
  return 0;
}

int cmd_hw_drift(const Common &c, std::size_t seeds) {
  const auto cfg = resolve_config(c);
  const auto &hw = cfg.hw;
  const auto base = build_hw_ring(hw.topology, cfg.gains);
  std::vector<std::uint64_t> s;
  for (std::size_t k = 0; k < seeds; ++k)
    s.push_back(hw.run.seed + k);
  const auto res = hw_drift(hw.topology, base, s, hw.run);
  {
    auto f = open_out(c.out, "drift.csv");
    f << "population,seed,window,error_deg\n";
    for (const auto &r : res.runs)
      for (std::size_t w = 0; w < r.windows.size(); ++w) {
        f << r.population << ',' << r.seed << ',' << w << ',';
        if (r.windows[w])
          f << *r.windows[w];
        f << '\n';
      }
  }
  json med = json::array();
  for (const auto &m : res.window_medians)
    med.push_back(m ? json(*m) : json());
  write_json(c.out, "summary.json",
             {{"version", kVersion}, {"window_s", res.window}, {"window_medians_deg", med},
              {"population_spacing_deg", to_degrees(hw.topology.population_spacing())},
              {"config", to_json(cfg)}});
  std::cout << "window medians (deg):";
  for (const auto &m : res.window_medians)
    std::cout << ' ' << (m ? *m : -1.0);
  std::cout << '\n';
  return 0;
}

int cmd_hw_sweep(const Common &c, const std::string &counts, std::size_t repeats) {
  const auto cfg = resolve_config(c);
  const auto &hw = cfg.hw;
  const auto base = build_hw_ring(hw.topology, cfg.gains);
  SweepOptions so;
  so.repeats = repeats;
  const auto sw = velocity_sweep(hw.topology, base, parse_counts(counts), so, hw.run);
  {
    auto f = open_out(c.out, "sweep.csv");
    f << "count,mean_rad_s,sem_rad_s,runs,dead\n";
    for (const auto &p : sw.points)
      f << p.count << ',' << p.mean << ',' << p.sem << ',' << p.runs << ',' << p.dead << '\n';
  }
  json fit = sw.fit ? to_json(*sw.fit) : json();
  write_json(c.out, "fit.json",
             {{"version", kVersion}, {"weights", "1/sem^2"}, {"fit", fit}, {"config", to_json(cfg)}});
  for (const auto &p : sw.points)
    std::cout << "count " << p.count << ": " << p.mean << " +- " << p.sem << " rad/s\n";
  if (sw.fit)
    std::cout << "weighted fit slope " << sw.fit->slope << ", r^2 " << sw.fit->r_squared << '\n';
  return 0;
}

int cmd_hw_accel(const Common &c, const std::string &schedule_path, std::size_t connections,
                 double settle) {
  const auto cfg = resolve_config(c);
  const auto &hw = cfg.hw;
  const auto base = build_hw_ring(hw.topology, cfg.gains);
  std::vector<ScheduledVelocity> schedule;
  if (schedule_path.empty()) {
    schedule = {{2.0, make_velocity_set(hw.topology, 1, connections)},
                {9.0, make_velocity_set(hw.topology, 1, 0)}};
  } else {
    std::ifstream in(schedule_path);
    if (!in)
      throw std::invalid_argument("cannot open " + schedule_path);
    schedule = read_schedule_csv(in, hw.topology);
  }
  const auto raster = run_hw(hw.topology, base, schedule, hw.cue, hw.run);
  const auto trace = decode_hw(raster, hw.topology);
  {
    auto f = open_out(c.out, "raster.csv");
    write_raster_csv(f, raster);
  }
  {
    auto f = open_out(c.out, "trace.csv");
    write_trace_csv(f, trace);
  }
  const auto phases = phase_fits(raster, hw.topology, schedule, hw.cue, hw.run.t_end, settle);
  json ph = json::array();
  for (const auto &p : phases) {
    ph.push_back({{"t0", p.t0},
                  {"t1", p.t1},
                  {"n_connections", p.n_connections},
                  {"direction", p.direction},
                  {"fit", to_json(p.fit)}});
    std::cout << "[" << p.t0 << ", " << p.t1 << ") n=" << p.n_connections
              << " slope " << p.fit.slope << " rad/s\n";
  }
  write_json(c.out, "summary.json",
             {{"version", kVersion}, {"phases", ph}, {"config", to_json(cfg)}});
  return 0;
}

void print_report_row(const fs::path &path, const json &j) {
  std::cout << path.filename().string() << ": ";
  if (j.contains("runs")) {
    for (const auto &r : j.at("runs"))
      std::cout << r.value("model", "?") << " " << std::fixed << std::setprecision(2)
                << r.value("mean_error_deg", 0.0) << " deg  ";
  } else if (j.contains("bounded_wins")) {
    std::cout << "bounded wins " << j.at("bounded_wins") << "/" << j.at("pairs").size()
              << ", bounded " << std::fixed << std::setprecision(2)
              << j.value("bounded_mean_deg", 0.0) << " deg, unbounded "
              << j.value("unbounded_mean_deg", 0.0) << " deg";
  } else if (j.contains("window_medians_deg")) {
    double worst = 0.0;
    for (const auto &m : j.at("window_medians_deg"))
      if (m.is_number())
        worst = std::max(worst, m.get<double>());
    std::cout << "worst window median " << std::fixed << std::setprecision(2) << worst << " deg";
  } else if (j.contains("fit") && j.at("fit").is_object()) {
    std::cout << "slope " << j.at("fit").value("slope", 0.0) << ", r^2 "
              << j.at("fit").value("r_squared", 0.0);
  } else if (j.contains("result")) {
    std::cout << "g_sin " << j.at("result").at("gains").value("g_sin", 0.0) << ", kappa "
              << j.at("result").value("kappa", 0.0);
  } else if (j.contains("rows")) {
    for (const auto &r : j.at("rows"))
      std::cout << r.value("value", 0.0) << "->"
                << (r.at("mae_deg").is_number() ? r.at("mae_deg").get<double>() : -1.0) << "  ";
  } else {
    std::cout << "(unrecognised report)";
  }
  std::cout << std::defaultfloat << '\n';
}

int cmd_report(const std::vector<std::string> &inputs) {
  for (const auto &in : inputs) {
    std::vector<fs::path> files;
    if (fs::is_directory(in)) {
      for (const auto &e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".json")
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(in);
    }
    for (const auto &f : files) {
      std::ifstream s(f);
      if (!s)
        throw std::invalid_argument("cannot open " + f.string());
      json j;
      try {
        j = json::parse(s);
      } catch (const json::parse_error &e) {
        throw std::invalid_argument(f.string() + ": " + e.what());
      }
      print_report_row(f, j);
    }
  }
  return 0;
}

} // namespace

int cli_main(int argc, const char *const *argv) {
  CLI::App app{"Spiking ring attractor simulator for joint-angle tracking"};
  app.require_subcommand(1);
  Common common;

  auto *simulate = app.add_subcommand("simulate", "One run; writes raster, trace and summary");
  add_common(simulate, common);
  double t_end = 0.9, velocity = 0.0;
  std::string model = "unbounded", velocity_csv;
  simulate->add_option("--t-end", t_end, "Simulated time in seconds")->capture_default_str();
  simulate->add_option("--model", model, "unbounded or bounded")->capture_default_str();
  simulate->add_option("--velocity", velocity, "Constant velocity after the cue, rad/s");
  simulate->add_option("--velocity-csv", velocity_csv, "Velocity profile CSV");

  auto *track = app.add_subcommand("track", "Tracking experiment against a trajectory");
  add_common(track, common);
  std::string track_model = "bounded", trajectory = "wide";
  std::optional<std::size_t> pairs;
  track->add_option("--model", track_model, "unbounded, bounded or both")->capture_default_str();
  track->add_option("--trajectory", trajectory, "wide, limited or a trajectory CSV")
      ->capture_default_str();
  track->add_option("--pairs", pairs, "Paired trajectories when --model both");

  auto *calibrate = app.add_subcommand("calibrate", "Grid search then g_sin refinement");
  add_common(calibrate, common);
  std::string space, cal_out;
  bool include_gains = false, skip_refine = false;
  calibrate->add_option("--space", space, "JSON grid space file");
  calibrate->add_option("--out-file", cal_out, "Calibration report path");
  calibrate->add_flag("--include-gains", include_gains, "Also grid g_inh and g_cos");
  calibrate->add_flag("--no-refine", skip_refine, "Stop after the grid search");

  auto *sweep = app.add_subcommand("sweep", "Robustness sweep over size or firing rate");
  add_common(sweep, common);
  std::string sweep_param = "n_neurons", sweep_values = "60,120", sweep_model = "bounded";
  sweep->add_option("--param", sweep_param, "n_neurons or rate_scale")->capture_default_str();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->capture_default_str();
  sweep->add_option("--model", sweep_model, "unbounded or bounded")->capture_default_str();

  auto *hw = app.add_subcommand("hw", "Quantized hardware-style network");
  hw->require_subcommand(1);
  auto *hw_drift_cmd = hw->add_subcommand("drift", "Baseline drift from every population");
  add_common(hw_drift_cmd, common);
  std::size_t drift_seeds = 10;
  hw_drift_cmd->add_option("--seeds", drift_seeds, "Seeds per population")->capture_default_str();
  auto *hw_sweep_cmd = hw->add_subcommand("sweep", "Bump velocity against connection count");
  add_common(hw_sweep_cmd, common);
  std::string counts = "1,2,3,4";
  std::size_t repeats = 10;
  hw_sweep_cmd->add_option("--counts", counts, "Comma-separated counts")->capture_default_str();
  hw_sweep_cmd->add_option("--repeats", repeats, "Repeats per population")->capture_default_str();
  auto *hw_accel_cmd = hw->add_subcommand("accel", "Velocity schedule run with phase fits");
  add_common(hw_accel_cmd, common);
  std::string schedule;
  std::size_t accel_connections = 4;
  double settle = 0.2;
  hw_accel_cmd->add_option("--schedule", schedule, "CSV time_s,direction,n_connections");
  hw_accel_cmd->add_option("--connections", accel_connections,
                           "Connections for the default three-phase schedule")
      ->capture_default_str();
  hw_accel_cmd->add_option("--settle", settle, "Seconds skipped after each switch")
      ->capture_default_str();

  auto *report = app.add_subcommand("report", "Summarise JSON reports");
  std::vector<std::string> report_inputs;
  report->add_option("inputs", report_inputs, "Report files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(common, t_end, model, velocity_csv, velocity);
    if (track->parsed())
      return cmd_track(common, track_model, trajectory, pairs);
    if (calibrate->parsed())
      return cmd_calibrate(common, space, cal_out, include_gains, skip_refine);
    if (sweep->parsed())
      return cmd_sweep(common, sweep_param, sweep_values, sweep_model);
    if (hw_drift_cmd->parsed())
      return cmd_hw_drift(common, drift_seeds);
    if (hw_sweep_cmd->parsed())
      return cmd_hw_sweep(common, counts, repeats);
    if (hw_accel_cmd->parsed())
      return cmd_hw_accel(common, schedule, accel_connections, settle);
    if (report->parsed())
      return cmd_report(report_inputs);
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace ringsim
