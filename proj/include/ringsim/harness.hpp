#pragma once

#include "ringsim/calibration.hpp"
#include "ringsim/decoder.hpp"
#include "ringsim/discrete_hw.hpp"
#include "ringsim/engine.hpp"
#include "ringsim/ring.hpp"
#include "ringsim/trajectory.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ringsim {

inline constexpr const char *kVersion = "0.1.0";

enum class ModelKind { unbounded, bounded, hw };

std::string to_string(ModelKind m);
ModelKind model_kind_from_string(const std::string &name);

struct BoundarySettings {
  double theta_0 = 0.0;
  double theta_l = 1.5 * 3.14159265358979323846;
  double ramp_width = 3.14159265358979323846 / 12.0;
  double oob_inhibition = 8.23;
};

struct HwSettings {
  HwTopology topology;
  HwRunOptions run;
  HwCue cue;
};

/// Everything a run needs, as loaded from a config file. Defaults describe
/// the calibrated network.
struct ExperimentConfig {
  std::size_t n = 120;
  GainSet gains = calibrated_gains();
  NeuronParams neuron;
  SynapseParams synapse;
  double dt = 1e-4;
  double init_current = 2.0;
  double init_duration = 0.1;
  double recurrent_scale = 0.5;
  double noise_sigma = 0.0;
  double initial_spread = 0.0;
  std::uint64_t seed = 0;
  BoundarySettings boundary;
  HwSettings hw;
  PresetParams trajectory;
  /// Number of paired trajectories in a tracking comparison.
  std::size_t pairs = 20;
};

HwSettings default_hw_settings();
ExperimentConfig default_experiment_config();

nlohmann::json to_json(const ExperimentConfig &cfg);
/// Fills a config from JSON, starting from the defaults. Unknown keys are
/// rejected with std::invalid_argument.
ExperimentConfig config_from_json(const nlohmann::json &j);
/// TOML with sections [geometry], [gains], [neuron], [synapse], [boundary],
/// [hw], [experiment]. A file ending in .json is read as a config echo.
ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config_toml(const std::string &text);

BoundaryConfig make_boundary(const BoundarySettings &b);
SimConfig make_sim_config(const ExperimentConfig &cfg, bool bounded);

struct ExperimentSpec {
  std::string name = "tracking";
  ModelKind model = ModelKind::unbounded;
  ExperimentConfig config;
  Trajectory trajectory;
  /// Also run the other continuous model on the same trajectory.
  bool compare = false;
  std::uint64_t seed = 0;
};

struct ModelRun {
  ModelKind model = ModelKind::unbounded;
  TrackingError error;
  DecodedTrace trace;
  SpikeRaster raster;
};

struct SignedRankTest {
  std::size_t n = 0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
};

/// Wilcoxon signed-rank test on paired differences (zeros dropped, ties
/// given average ranks, normal approximation with tie correction).
SignedRankTest wilcoxon_signed_rank(const std::vector<double> &diffs);

struct Comparison {
  double bounded_mean_deg = 0.0;
  double unbounded_mean_deg = 0.0;
  /// Per-window bounded − unbounded errors (windows valid in both runs).
  std::vector<double> window_differences;
  SignedRankTest test;
};

struct Report {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ModelRun> runs;
  std::optional<Comparison> comparison;
  nlohmann::json config;
  std::string failure;
};

/// Cues the bump at the trajectory start, feeds only the velocity channel,
/// decodes and scores against the truth with 1 s windows. With `compare`
/// the other continuous model runs on identical inputs. Simulation failures
/// are recorded in Report::failure together with the seed.
Report run_tracking_experiment(const ExperimentSpec &spec);

nlohmann::json to_json(const Report &r);

struct PairResult {
  std::uint64_t seed = 0;
  double unbounded_mean_deg = 0.0;
  double bounded_mean_deg = 0.0;
  std::optional<double> window_p_value;
};

struct PairedSummary {
  std::vector<PairResult> pairs;
  std::size_t bounded_wins = 0;
  double unbounded_mean_deg = 0.0;
  double bounded_mean_deg = 0.0;
  double unbounded_std_deg = 0.0;
  double bounded_std_deg = 0.0;
  /// Signed-rank test over the per-pair mean differences.
  SignedRankTest test;
};

/// `cfg.pairs` preset trajectories with seeds cfg.trajectory.seed + k, each
/// run through both continuous models.
PairedSummary paired_tracking(const ExperimentConfig &cfg);
nlohmann::json to_json(const PairedSummary &s);

void write_raster_csv(std::ostream &out, const SpikeRaster &raster);
void write_trace_csv(std::ostream &out, const DecodedTrace &trace);
/// Reads `time_s,velocity_rad_s` rows into a zero-order-hold profile.
VelocityProfile read_velocity_csv(std::istream &in);

nlohmann::json to_json(const CalibrationResult &r);
nlohmann::json to_json(const LinearFit &f);

/// Command-line entry point. Returns 0 on success, 2 on validation errors
/// and unknown flags, 1 on runtime failures.
int cli_main(int argc, const char *const *argv);

} // namespace ringsim
