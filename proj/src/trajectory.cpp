#include "ringsim/trajectory.hpp"

#include "ringsim/angles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ringsim {

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
  case TrajectoryKind::synthetic_sine:
    return "synthetic-sine";
  case TrajectoryKind::synthetic_trapezoid:
    return "synthetic-trapezoid";
  case TrajectoryKind::imported:
    return "imported";
  }
  return "unknown";
}

VelocityProfile Trajectory::velocity_profile() const {
  std::vector<VelocitySample> out;
  for (const auto &s : samples)
    if (out.empty() || out.back().v != s.velocity)
      out.push_back({s.time, s.velocity});
  if (out.empty() || out.front().time != 0.0)
    out.insert(out.begin(), {0.0, 0.0});
  return VelocityProfile(std::move(out));
}

std::vector<TimedAngle> Trajectory::truth() const {
  std::vector<TimedAngle> out;
  out.reserve(samples.size());
  for (const auto &s : samples)
    out.push_back({s.time, s.angle});
  return out;
}

double Trajectory::integral_mismatch() const {
  double worst = 0.0;
  double integral = samples.empty() ? 0.0 : samples.front().angle;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    integral += samples[k - 1].velocity * (samples[k].time - samples[k - 1].time);
    worst = std::max(worst, std::abs(samples[k].angle - integral));
  }
  return worst;
}

Trajectory make_trapezoid(const TrapezoidParams &params) {
  if (!(params.sample_dt > 0.0))
    throw std::invalid_argument("sample_dt must be positive");
  Trajectory traj;
  traj.kind = TrajectoryKind::synthetic_trapezoid;
  // Sample times are integer multiples of sample_dt, so every velocity step
  // is snapped onto the grid and the angle stays the exact integral.
  std::size_t k = 0;
  double angle = params.start_angle;
  for (const auto &seg : params.segments) {
    if (!(seg.duration >= 0.0) || !std::isfinite(seg.velocity))
      throw std::invalid_argument("segment needs a finite velocity and non-negative duration");
    const auto steps = static_cast<std::size_t>(std::llround(seg.duration / params.sample_dt));
    for (std::size_t s = 0; s < steps; ++s) {
      traj.samples.push_back({static_cast<double>(k) * params.sample_dt, angle, seg.velocity});
      angle += seg.velocity * params.sample_dt;
      ++k;
    }
  }
  traj.samples.push_back({static_cast<double>(k) * params.sample_dt, angle, 0.0});
  return traj;
}

Trajectory make_sine(const SineParams &params) {
  if (!(params.sample_dt > 0.0 && params.period > 0.0 && params.duration > 0.0))
    throw std::invalid_argument("sine trajectory needs positive sample_dt, period and duration");
  Trajectory traj;
  traj.kind = TrajectoryKind::synthetic_sine;
  const auto steps = static_cast<std::size_t>(std::llround(params.duration / params.sample_dt));
  auto angle_at = [&](double t) {
    if (t <= params.lead_in)
      return params.center;
    return params.center + params.amplitude * std::sin(kTwoPi * (t - params.lead_in) / params.period);
  };
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * params.sample_dt;
    traj.samples.push_back({t, angle_at(t), 0.0});
  }
  // The held command on each interval is its average velocity, which keeps
  // the sampled angle an exact integral of the command.
  for (std::size_t k = 0; k + 1 < traj.samples.size(); ++k)
    traj.samples[k].velocity =
        (traj.samples[k + 1].angle - traj.samples[k].angle) / params.sample_dt;
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    traj.samples[k].angle = traj.samples[k - 1].angle + traj.samples[k - 1].velocity * params.sample_dt;
  return traj;
}

Trajectory make_preset(const PresetParams &p) {
  if (!(p.theta_l > p.theta_0))
    throw std::invalid_argument("preset needs theta_l > theta_0");
  if (!(p.v_min > 0.0 && p.v_max >= p.v_min))
    throw std::invalid_argument("preset needs 0 < v_min <= v_max");
  if (!(p.dwell_max >= p.dwell_min && p.dwell_min >= 0.0))
    throw std::invalid_argument("preset needs 0 <= dwell_min <= dwell_max");
  if (!(p.limited_margin >= 0.0 && p.limited_margin < 0.5))
    throw std::invalid_argument("limited_margin must lie in [0, 0.5)");

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double range = p.theta_l - p.theta_0;
  const double lo = p.preset == MotionPreset::wide ? p.theta_0 : p.theta_0 + p.limited_margin * range;
  const double hi = p.preset == MotionPreset::wide ? p.theta_l : p.theta_l - p.limited_margin * range;
  const double min_move = 0.15 * (hi - lo);

  auto snap = [&](double d) {
    return std::max(1.0, std::round(d / p.sample_dt)) * p.sample_dt;
  };

  TrapezoidParams tp;
  tp.sample_dt = p.sample_dt;
  tp.start_angle = uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
  tp.segments.push_back({0.0, snap(p.lead_in)});

  double angle = tp.start_angle;
  double elapsed = tp.segments.back().duration;
  bool toward_upper = unit(rng) < 0.5;
  while (elapsed < p.duration) {
    double target;
    if (p.preset == MotionPreset::wide) {
      target = toward_upper ? hi : lo;
      toward_upper = !toward_upper;
    } else {
      do {
        target = uniform(lo, hi);
      } while (std::abs(target - angle) < min_move);
    }
    const double speed = uniform(p.v_min, p.v_max);
    // Snap the move duration to the grid and adjust the speed so the move
    // ends exactly on the target.
    const double move = snap(std::abs(target - angle) / speed);
    tp.segments.push_back({(target - angle) / move, move});
    elapsed += move;
    angle = target;
    const double dwell = snap(uniform(p.dwell_min, p.dwell_max));
    tp.segments.push_back({0.0, dwell});
    elapsed += dwell;
  }
  Trajectory traj = make_trapezoid(tp);
  // Trim to the requested duration.
  const double t_end = snap(p.duration);
  while (traj.samples.size() > 1 && traj.samples.back().time > t_end + 1e-12)
    traj.samples.pop_back();
  traj.samples.back().velocity = 0.0;
  return traj;
}

Trajectory parse_trajectory_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != "time_s,angle_rad,velocity_rad_s")
    throw std::invalid_argument("trajectory CSV header must be time_s,angle_rad,velocity_rad_s");

  Trajectory traj;
  traj.kind = TrajectoryKind::imported;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream ss(line);
    std::string field;
    double vals[3];
    int count = 0;
    while (std::getline(ss, field, ',')) {
      if (count >= 3)
        throw std::invalid_argument("trajectory row " + std::to_string(row) + " has too many fields");
      try {
        std::size_t used = 0;
        vals[count] = std::stod(field, &used);
        if (used != field.size())
          throw std::invalid_argument("trailing characters");
      } catch (const std::exception &) {
        throw std::invalid_argument("trajectory row " + std::to_string(row) +
                                    " has a malformed value '" + field + "'");
      }
      ++count;
    }
    if (count != 3)
      throw std::invalid_argument("trajectory row " + std::to_string(row) + " needs 3 fields");
    for (double v : vals)
      if (!std::isfinite(v))
        throw std::invalid_argument("trajectory row " + std::to_string(row) +
                                    " has a non-finite value");
    if (!traj.samples.empty() && !(vals[0] > traj.samples.back().time))
      throw std::invalid_argument("trajectory row " + std::to_string(row) +
                                  " breaks increasing time order");
    traj.samples.push_back({vals[0], vals[1], vals[2]});
  }
  if (traj.samples.empty())
    throw std::invalid_argument("trajectory CSV has no data rows");
  return traj;
}

Trajectory import_trajectory(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open trajectory file " + path.string());
  return parse_trajectory_csv(in);
}

void write_trajectory_csv(std::ostream &out, const Trajectory &traj) {
  out << "time_s,angle_rad,velocity_rad_s\n" << std::setprecision(17);
  for (const auto &s : traj.samples)
    out << s.time << ',' << s.angle << ',' << s.velocity << '\n';
}

} // namespace ringsim
