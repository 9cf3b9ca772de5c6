#pragma once

#include "ringsim/decoder.hpp"
#include "ringsim/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ringsim {

enum class TrajectoryKind { synthetic_sine, synthetic_trapezoid, imported };

std::string to_string(TrajectoryKind kind);

struct TrajectorySample {
  double time = 0.0;
  double angle = 0.0;
  /// Command held over [time, next sample time).
  double velocity = 0.0;
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::synthetic_trapezoid;
  std::vector<TrajectorySample> samples;

  double duration() const { return samples.empty() ? 0.0 : samples.back().time; }
  double initial_angle() const { return samples.front().angle; }
  /// The velocity channel as a zero-order-hold command.
  VelocityProfile velocity_profile() const;
  std::vector<TimedAngle> truth() const;
  /// Largest |angle(t_k) − angle(0) − ∫v| over the samples.
  double integral_mismatch() const;
};

struct Segment {
  double velocity = 0.0;
  double duration = 0.0;
};

struct TrapezoidParams {
  double start_angle = 0.0;
  /// Constant-velocity pieces with instantaneous steps between them.
  std::vector<Segment> segments;
  double sample_dt = 1e-3;
};

struct SineParams {
  double center = 0.0;
  double amplitude = 0.5;
  double period = 4.0;
  double duration = 8.0;
  double lead_in = 0.1;
  double sample_dt = 1e-3;
};

Trajectory make_trapezoid(const TrapezoidParams &params);
Trajectory make_sine(const SineParams &params);

enum class MotionPreset { limited, wide };

struct PresetParams {
  MotionPreset preset = MotionPreset::wide;
  double theta_0 = 0.0;
  double theta_l = 1.5 * 3.14159265358979323846;
  double duration = 10.0;
  /// Hold at the start while the initialisation pulse is on.
  double lead_in = 0.1;
  double v_min = 0.4;
  double v_max = 1.0;
  double dwell_min = 0.2;
  double dwell_max = 0.6;
  /// Limited motion keeps this fraction of the range as margin on each side.
  double limited_margin = 0.25;
  std::uint64_t seed = 0;
  double sample_dt = 1e-3;
};

/// Randomised trapezoidal-velocity trajectory. The wide preset alternates
/// moves onto the two limits; the limited preset picks targets inside the
/// central part of the range.
Trajectory make_preset(const PresetParams &params);

/// Reads a CSV with header `time_s,angle_rad,velocity_rad_s`.
Trajectory import_trajectory(const std::filesystem::path &path);
Trajectory parse_trajectory_csv(std::istream &in);
void write_trajectory_csv(std::ostream &out, const Trajectory &traj);

} // namespace ringsim
