#pragma once

#include "ringsim/engine.hpp"
#include "ringsim/ring.hpp"
#include "ringsim/trajectory.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ringsim {

/// Velocity gain found by refine_gsin for the default network (120 neurons,
/// default neuron and synapse constants, i_bg and recurrent_scale as in
/// SimConfig). The GainSet default of 0.13 belongs to a differently scaled network.
inline constexpr double kCalibratedGsin = 0.2513;

/// Reference g_inh and g_cos with the calibrated g_sin.
GainSet calibrated_gains();

struct LossWeights {
  double rate = 1.0;
  double stability = 1.0;
  double velocity = 1.0;
};

struct CalibrationObjective {
  double target_peak_rate = 100.0;
  double stationary_tolerance_deg = 5.0;
  double stationary_duration = 0.9;
  std::vector<double> velocity_set{-1.0, -0.5, -0.2, 0.2, 0.5, 1.0};
  LossWeights loss_weights;
  /// Each velocity probe runs this long with the command switched on at the
  /// end of the cue, and is fitted from probe_fit_start onwards.
  double probe_duration = 8.0;
  double probe_fit_start = 0.5;

  void validate() const;
};

/// Added to the loss of a run whose bump dies or whose state blows up.
inline constexpr double kSentinelLoss = 1e6;

struct ProbeFit {
  double commanded = 0.0;
  double measured = 0.0;
  double stderr_ = 0.0;
  double r_squared = 0.0;
};

struct CalibrationResult {
  GainSet gains;
  double i_bg = 0.0;
  double init_current = 0.0;
  double recurrent_scale = 1.0;
  double loss = 0.0;
  /// Slope through the origin of bump velocity against command. Zero until
  /// velocity probes have been run.
  double velocity_gain_kappa = 0.0;
  double kappa_stderr = 0.0;
  std::vector<ProbeFit> diagnostics;
  std::size_t grid_index = 0;
  std::size_t iterations = 0;
  bool converged = true;
  std::string warning;
};

/// Copies the tuned quantities of `r` into a copy of `base`.
SimConfig apply_result(const SimConfig &base, const CalibrationResult &r);
/// The tuned quantities of `cfg` as a result record (loss left at zero).
CalibrationResult result_from_config(const SimConfig &cfg);

struct StationarityTerms {
  double mean_error_deg = 0.0;
  double peak_rate_hz = 0.0;
  bool dead = false;
  bool blew_up = false;
  double loss = 0.0;
};

/// Zero-velocity run of obj.stationary_duration. Loss is
///   w_stab·err/tolerance + w_rate·((peak − target)/target)² [+ sentinel].
StationarityTerms stationarity_terms(const SimConfig &cfg, const CalibrationObjective &obj);
double stationarity_loss(const SimConfig &cfg, const CalibrationObjective &obj);

enum class GridParam { g_inh, g_cos, i_bg, init_current, recurrent_scale };

const char *to_string(GridParam p);
GridParam grid_param_from_string(const std::string &name);

struct ParamRange {
  GridParam param = GridParam::i_bg;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t steps = 5;

  /// Evenly spaced from lo to hi; a single step yields lo.
  std::vector<double> values() const;
};

struct GridSpace {
  std::vector<ParamRange> ranges;
  std::size_t budget = 2000;

  std::size_t size() const;
  /// Currents around the default operating point. With include_gains the
  /// reference g_inh and g_cos are bracketed at ±20%.
  static GridSpace defaults(bool include_gains = false);
};

/// Evaluates stationarity_loss at every grid point in parallel. The first
/// range varies slowest. Sorted by loss, ties kept in grid order.
std::vector<CalibrationResult> grid_search(const SimConfig &base, const GridSpace &space,
                                           const CalibrationObjective &obj);

struct RefineOptions {
  std::size_t max_iterations = 12;
  /// Central-difference half width on g_sin.
  double fd_step = 0.005;
  std::size_t max_backtracks = 8;
  /// Stop once the loss drops below this or a step changes g_sin by less.
  double loss_tolerance = 1e-4;
  double step_tolerance = 1e-4;
};

/// Velocity-match loss Σ (fitted bump velocity − v)² over the probe set.
double velocity_loss(const SimConfig &cfg, const CalibrationObjective &obj,
                     std::vector<ProbeFit> *fits = nullptr);

/// κ and its standard error from probe fits.
std::pair<double, double> fit_kappa(const std::vector<ProbeFit> &fits);

/// Gradient descent on g_sin alone. Returns the best candidate seen, with
/// `converged` false and a warning if the iteration cap was hit.
CalibrationResult refine_gsin(const SimConfig &base, const CalibrationResult &start,
                              const CalibrationObjective &obj, const RefineOptions &opt = {});

/// Finds i_bg so that the stationary peak rate hits `target_rate` (Hz) by
/// bisection on [lo, hi]. Throws std::runtime_error if not bracketed.
double calibrate_i_bg(const SimConfig &cfg, const CalibrationObjective &obj, double target_rate,
                      double lo = 1.05, double hi = 8.0, std::size_t iterations = 14);

enum class SweepParam { n_neurons, rate_scale };

struct SweepSettings {
  /// Template configuration. Its geometry is rebuilt for n_neurons sweeps;
  /// its boundary (if any) is kept.
  SimConfig base;
  PresetParams trajectory;
};

struct SweepRow {
  double value = 0.0;
  std::optional<double> mae_deg;
  double i_bg = 0.0;
  double peak_rate_hz = 0.0;
  std::string error;
};

/// For each value: recalibrate i_bg (gains untouched) for the target rate
/// rate_scale·obj.target_peak_rate, run the fixed trajectory and record the
/// mean absolute tracking error. On a bounded ring the rate is tuned with the
/// bump at the middle of the valid range. Failures are recorded and the
/// sweep goes on.
std::vector<SweepRow> robustness_sweep(SweepParam param, const std::vector<double> &values,
                                       const CalibrationObjective &obj,
                                       const SweepSettings &settings);

/// Mean tracking error in degrees of `cfg` (init angle taken from the
/// trajectory) against the trajectory's ground truth.
double trajectory_mae(const SimConfig &cfg, const Trajectory &traj);

} // namespace ringsim
