#pragma once

#include "ringsim/engine.hpp"
#include "ringsim/ring.hpp"

#include <optional>
#include <vector>

namespace ringsim {

struct DecodedSample {
  double time = 0.0;
  double angle = 0.0;
  bool valid = false;
};

struct DecodedTrace {
  std::vector<DecodedSample> samples;
};

struct TimedAngle {
  double time = 0.0;
  double angle = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
};

struct Pva {
  double angle = 0.0;
  bool valid = false;
};

/// Default decoding window and sampling period.
inline constexpr double kPvaWindow = 0.05;
inline constexpr double kPvaStep = 0.01;

/// Population vector average of the spikes in [t − window, t).
Pva decode_pva(const SpikeRaster &raster, const RingGeometry &geom, double t, double window);

/// Preferred angle of the neuron with the most spikes in [t − window, t).
Pva decode_argmax(const SpikeRaster &raster, const RingGeometry &geom, double t, double window);

enum class DecodeMethod { pva, argmax };

/// Samples at t = dt_out, 2·dt_out, ... up to the raster duration. A window
/// at least as long as the raster pools the whole raster for every sample.
DecodedTrace decode_trace(const SpikeRaster &raster, const RingGeometry &geom, double dt_out,
                          double window, DecodeMethod method = DecodeMethod::pva);

/// Continuous angle from the valid samples (shortest-arc continuation).
std::vector<TimedAngle> unwrap(const DecodedTrace &trace);

/// Ordinary least squares over samples with t0 <= time <= t1.
LinearFit fit_bump_velocity(const std::vector<TimedAngle> &unwrapped, double t0, double t1);

struct WeightedPoint {
  double x = 0.0;
  double y = 0.0;
  double sem = 0.0;
};

/// Weighted least squares with weights 1/sem². The slope error assumes the
/// sems are absolute standard errors.
LinearFit weighted_linear_fit(const std::vector<WeightedPoint> &points);

/// Mean |wrap_diff(angle, target)| in degrees for each window of length
/// `window` in [t_start, t_end). Windows without valid samples are empty.
std::vector<std::optional<double>> drift_windows(const DecodedTrace &trace, double target,
                                                 double window, double t_start, double t_end);

struct TrackingError {
  double mean_deg = 0.0;
  double std_deg = 0.0;
  /// Mean error per 1 s window from the first sample time; empty windows
  /// carry no value.
  std::vector<std::optional<double>> per_window;
  std::size_t samples = 0;
};

/// Per-sample |wrap_diff| against linearly interpolated truth.
TrackingError tracking_error(const DecodedTrace &trace, const std::vector<TimedAngle> &truth,
                             double window = 1.0);

} // namespace ringsim
