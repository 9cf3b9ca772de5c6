#include <doctest.h>

#include "ringsim/angles.hpp"
#include "ringsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ringsim;
namespace fs = std::filesystem;

namespace {

// Ranks by direct counting: rank = #smaller + (#equal + 1) / 2.
double oracle_w_plus(const std::vector<double> &diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0)
      d.push_back(x);
  double w = 0.0;
  for (double x : d) {
    if (x <= 0.0)
      continue;
    double smaller = 0.0, equal = 0.0;
    for (double y : d) {
      if (std::abs(y) < std::abs(x))
        smaller += 1.0;
      else if (std::abs(y) == std::abs(x))
        equal += 1.0;
    }
    w += smaller + 0.5 * (equal + 1.0);
  }
  return w;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ringsim");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("ringsim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("default config round trips through JSON") {
  const auto cfg = default_experiment_config();
  const auto back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(back.gains.g_inh == -16.46);
  CHECK(back.gains.g_cos == 15.86);
  CHECK_FALSE(back.hw.topology.velocity_exc);
}

TEST_CASE("shipped default.toml matches the built-in defaults") {
  const auto cfg = load_config(fs::path(RINGSIM_SOURCE_DIR) / "default.toml");
  CHECK(to_json(cfg) == to_json(default_experiment_config()));
}

TEST_CASE("TOML config overrides and rejects unknown keys") {
  const auto cfg = parse_config_toml(R"(
[geometry]
n = 60
[neuron]
i_bg = 3.0
[hw]
velocity_exc = "slow_exc"
classes.slow_exc = { efficacy = 0.05, tau = 0.05 }
[experiment]
preset = "limited"
seed = 7
)");
  CHECK(cfg.n == 60);
  CHECK(cfg.neuron.i_bg == 3.0);
  CHECK(cfg.seed == 7);
  CHECK(cfg.trajectory.preset == MotionPreset::limited);
  REQUIRE(cfg.hw.topology.velocity_exc);
  CHECK(*cfg.hw.topology.velocity_exc == SynapseClass::slow_exc);
  CHECK(cfg.hw.topology.params(SynapseClass::slow_exc).efficacy == 0.05);
  CHECK(cfg.neuron.tau_m == default_experiment_config().neuron.tau_m);

  CHECK_THROWS_AS(parse_config_toml("[neuron]\ni_bgg = 3.0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[nueron]\ni_bg = 3.0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[neuron]\ni_bg = \"high\"\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[geometry]\nn = -4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[neuron\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[hw]\nvelocity_inh = \"fast_exc\"\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_toml("[experiment]\npreset = \"narrow\"\n"),
                  std::invalid_argument);
}

TEST_CASE("trajectory limits follow the joint limits") {
  const auto cfg = parse_config_toml("[boundary]\ntheta_0 = 0.5\ntheta_l = 3.0\n");
  CHECK(cfg.trajectory.theta_0 == 0.5);
  CHECK(cfg.trajectory.theta_l == 3.0);
  const auto b = make_boundary(cfg.boundary);
  CHECK(b.theta_0 == 0.5);
  CHECK(b.theta_l == 3.0);
}

TEST_CASE("config files load as TOML or as a JSON echo") {
  const auto dir = scratch_dir("config");
  {
    std::ofstream f(dir / "c.toml");
    f << "[geometry]\nn = 48\n";
  }
  CHECK(load_config(dir / "c.toml").n == 48);
  auto cfg = default_experiment_config();
  cfg.n = 72;
  {
    std::ofstream f(dir / "r.json");
    f << nlohmann::json{{"config", to_json(cfg)}, {"name", "x"}};
  }
  CHECK(load_config(dir / "r.json").n == 72);
  CHECK_THROWS_AS(load_config(dir / "missing.toml"), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("signed-rank statistic against a counting oracle") {
  const std::vector<std::vector<double>> cases{
      {1, 2, 3, 4, 5}, {-1.5, 2, -2, 3, 0, 0.5, -0.5, 4}, {0.3, -0.1, 0.2, -0.4, 0.25, 0.3}};
  for (const auto &d : cases) {
    const auto t = wilcoxon_signed_rank(d);
    CHECK(t.w_plus == doctest::Approx(oracle_w_plus(d)));
    const double n = static_cast<double>(t.n);
    CHECK(t.w_plus + t.w_minus == doctest::Approx(n * (n + 1) / 2));
  }
  // n = 5, all positive: W+ = 15, mean 7.5, variance 13.75.
  const auto t = wilcoxon_signed_rank({1, 2, 3, 4, 5});
  CHECK(t.n == 5);
  CHECK(t.z == doctest::Approx(7.0 / std::sqrt(13.75)));
  CHECK(t.p_two_sided == doctest::Approx(std::erfc(7.0 / std::sqrt(13.75) / std::sqrt(2.0))));
  CHECK(wilcoxon_signed_rank({-1, -2, -3, -4, -5}).z == doctest::Approx(-t.z));
  CHECK(wilcoxon_signed_rank({0.0, 0.0}).p_two_sided == 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank({1.0, NAN}), std::invalid_argument);
}

TEST_CASE("wide and limited presets") {
  PresetParams p;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    p.seed = seed;
    p.preset = MotionPreset::wide;
    const auto wide = make_preset(p);
    double lo = 1e9, hi = -1e9;
    for (const auto &s : wide.samples) {
      lo = std::min(lo, s.angle);
      hi = std::max(hi, s.angle);
      CHECK(std::abs(s.velocity) <= p.v_max + 1e-9);
    }
    CHECK(lo >= p.theta_0 - 1e-9);
    CHECK(hi <= p.theta_l + 1e-9);
    CHECK((std::abs(lo - p.theta_0) < 1e-9 || std::abs(hi - p.theta_l) < 1e-9));
    CHECK(wide.duration() == doctest::Approx(p.duration));
    CHECK(wide.integral_mismatch() < 1e-9);

    p.preset = MotionPreset::limited;
    const auto limited = make_preset(p);
    const double range = p.theta_l - p.theta_0;
    for (const auto &s : limited.samples) {
      CHECK(s.angle >= p.theta_0 + p.limited_margin * range - 1e-9);
      CHECK(s.angle <= p.theta_l - p.limited_margin * range + 1e-9);
    }
    CHECK(limited.integral_mismatch() < 1e-9);
  }
  p.seed = 3;
  const auto a = make_preset(p), b = make_preset(p);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.samples.back().angle == b.samples.back().angle);
  p.v_min = 0.0;
  CHECK_THROWS_AS(make_preset(p), std::invalid_argument);
}

TEST_CASE("trajectory CSV round trip and errors") {
  PresetParams p;
  p.duration = 2.0;
  const auto traj = make_preset(p);
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  const auto back = parse_trajectory_csv(ss);
  REQUIRE(back.samples.size() == traj.samples.size());
  CHECK(back.kind == TrajectoryKind::imported);
  for (std::size_t k = 0; k < traj.samples.size(); k += 97) {
    CHECK(back.samples[k].time == traj.samples[k].time);
    CHECK(back.samples[k].angle == traj.samples[k].angle);
    CHECK(back.samples[k].velocity == traj.samples[k].velocity);
  }
  auto parse = [](const std::string &text) {
    std::istringstream in(text);
    return parse_trajectory_csv(in);
  };
  const std::string header = "time_s,angle_rad,velocity_rad_s\n";
  CHECK_THROWS_AS(parse(""), std::invalid_argument);
  CHECK_THROWS_AS(parse("t,a,v\n0,0,0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse(header), std::invalid_argument);
  CHECK_THROWS_AS(parse(header + "0,0,x\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse(header + "0,0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse(header + "0,0,0\n0,0,0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse(header + "0,nan,0\n"), std::invalid_argument);
  CHECK(parse(header + "0,1,0.5\r\n1,1.5,0\r\n").samples.size() == 2);
}

TEST_CASE("velocity CSV") {
  std::istringstream good("time_s,velocity_rad_s\n0,0\n0.5,1.0\n");
  const auto v = read_velocity_csv(good);
  CHECK(v.at(0.2) == 0.0);
  CHECK(v.at(0.7) == 1.0);
  std::istringstream bad("time_s,velocity_rad_s\n0,abc\n");
  CHECK_THROWS_AS(read_velocity_csv(bad), std::invalid_argument);
  std::istringstream header("t,v\n");
  CHECK_THROWS_AS(read_velocity_csv(header), std::invalid_argument);
}

TEST_CASE("tracking experiment compares both models on one trajectory") {
  ExperimentSpec spec;
  spec.model = ModelKind::bounded;
  spec.compare = true;
  PresetParams p;
  p.duration = 3.0;
  spec.trajectory = make_preset(p);
  const auto rep = run_tracking_experiment(spec);
  CHECK(rep.failure.empty());
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.runs[0].model == ModelKind::bounded);
  CHECK(rep.runs[1].model == ModelKind::unbounded);
  REQUIRE(rep.comparison);
  CHECK(rep.comparison->bounded_mean_deg == rep.runs[0].error.mean_deg);
  CHECK(rep.comparison->window_differences.size() == 3);
  for (const auto &r : rep.runs)
    CHECK(r.error.mean_deg < 30.0);
  const auto j = to_json(rep);
  CHECK(j.at("runs").size() == 2);
  CHECK(config_from_json(j.at("config")).n == spec.config.n);

  spec.model = ModelKind::hw;
  CHECK_THROWS_AS(run_tracking_experiment(spec), std::invalid_argument);
}

TEST_CASE("simulation failures are reported with the seed") {
  ExperimentSpec spec;
  spec.seed = 42;
  spec.config.init_current = std::numeric_limits<double>::infinity();
  PresetParams p;
  p.duration = 1.0;
  spec.trajectory = make_preset(p);
  const auto rep = run_tracking_experiment(spec);
  CHECK(rep.failure.find("seed 42") != std::string::npos);
  CHECK(to_json(rep).contains("failure"));
}

TEST_CASE("cli exit codes") {
  CHECK(cli({}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  CHECK(cli({"simulate", "--no-such-flag"}) == 2);
  CHECK(cli({"simulate", "--model", "spiral", "--out", scratch_dir("bad").string()}) == 2);
  CHECK(cli({"hw", "sweep", "--counts", "1,x"}) == 2);
  CHECK(cli({"track", "--trajectory", "/nonexistent/traj.csv"}) == 1);
}

TEST_CASE("cli simulate writes its outputs") {
  const auto dir = scratch_dir("simulate");
  REQUIRE(cli({"simulate", "--t-end", "0.5", "--out", dir.string()}) == 0);
  for (const char *name : {"raster.csv", "trace.csv", "summary.json"})
    CHECK(fs::exists(dir / name));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary.at("spikes").get<std::size_t>() > 0);
  CHECK(summary.at("mean_stationary_error_deg").get<double>() < 5.0);
  CHECK(slurp(dir / "raster.csv").rfind("time_s,neuron\n", 0) == 0);

  // Replaying the echoed config gives the same raster.
  const auto replay = scratch_dir("replay");
  REQUIRE(cli({"simulate", "--t-end", "0.5", "--config", (dir / "summary.json").string(), "--out",
               replay.string()}) == 0);
  CHECK(slurp(dir / "raster.csv") == slurp(replay / "raster.csv"));
  fs::remove_all(dir);
  fs::remove_all(replay);
}

TEST_CASE("cli hw sweep writes CSV and fit") {
  const auto dir = scratch_dir("hwsweep");
  const auto cfg = dir / "short.toml";
  {
    std::ofstream f(cfg);
    f << "[hw]\nn_pops = 10\n";
  }
  REQUIRE(cli({"hw", "sweep", "--counts", "0,2", "--repeats", "2", "--config", cfg.string(),
               "--out", dir.string()}) == 0);
  const auto csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("count,mean_rad_s,sem_rad_s,runs,dead\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::exists(dir / "fit.json"));
  fs::remove_all(dir);
}
