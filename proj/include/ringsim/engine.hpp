#pragma once

#include "ringsim/ring.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ringsim {

struct NeuronParams {
  double tau_m = 0.02;
  double v_th = 1.0;
  double v_reset = 0.0;
  double t_ref = 0.002;
  /// Tonic drive. The calibrated value sits above v_th: the symmetric
  /// connectivity is inhibitory everywhere, so the bump is carved out of a
  /// tonically active ring and non-bump neurons are held below threshold.
  double i_bg = 3.75;

  void validate() const;
};

struct SynapseParams {
  /// Slower than a typical 10 ms synapse: bump speed is linear in v only when
  /// the synaptic filter spans several interspike intervals.
  double tau_syn = 0.02;
  double spike_increment = 1.0;

  void validate() const;
};

struct SpikeEvent {
  double time = 0.0;
  std::size_t neuron = 0;

  bool operator==(const SpikeEvent &) const = default;
};

struct SpikeRaster {
  std::size_t n = 0;
  /// Simulated span [0, duration) covered by the raster.
  double duration = 0.0;
  std::vector<SpikeEvent> events;

  bool operator==(const SpikeRaster &) const = default;
};

struct VelocitySample {
  double time = 0.0;
  double v = 0.0;

  bool operator==(const VelocitySample &) const = default;
};

/// Piecewise-constant (zero-order hold) velocity command.
class VelocityProfile {
public:
  VelocityProfile() : samples_{{0.0, 0.0}} {}
  explicit VelocityProfile(std::vector<VelocitySample> samples);

  static VelocityProfile constant(double v) { return VelocityProfile({{0.0, v}}); }
  /// Zero until `t_on`, then `v`.
  static VelocityProfile step_at(double t_on, double v);

  double at(double t) const;
  const std::vector<VelocitySample> &samples() const { return samples_; }

  bool operator==(const VelocityProfile &) const = default;

private:
  std::vector<VelocitySample> samples_;
};

struct SimConfig {
  RingGeometry geometry;
  WeightSet weights;
  GainSet gains;
  NeuronParams neuron;
  SynapseParams synapse;
  double dt = 1e-4;
  double init_angle = 0.0;
  double init_current = 2.0;
  double init_duration = 0.1;
  std::uint64_t seed = 0;
  /// Global gain applied to the normalised recurrent current.
  double recurrent_scale = 0.5;
  /// Stationary std of additive membrane noise; 0 disables it.
  double noise_sigma = 0.0;
  /// Spread of the initial membrane potentials as a fraction of
  /// (v_th − v_reset). The pattern is laid out relative to the cued neuron
  /// and mirrored around it, so rotating or reflecting the cue rotates or
  /// reflects the whole run.
  double initial_spread = 0.0;

  void validate() const;
};

/// Builds a configuration for an n-neuron ring with the given gains and
/// optional mechanical limits; all other fields keep their defaults.
SimConfig make_config(std::size_t n, const GainSet &gains = {},
                      const std::optional<BoundaryConfig> &boundary = std::nullopt);

struct SimState {
  std::size_t steps = 0;
  double t = 0.0;
  std::vector<double> v_mem;
  std::vector<double> s_trace;
  std::vector<double> refrac_until;
  SpikeRaster raster;

  // Recurrent input decomposed by term, kept in step with s_trace.
  std::vector<double> in_sym;
  std::vector<double> in_plus;
  std::vector<double> in_minus;
  // Inhibition from out-of-bound neurons, identical for every target.
  double oob_drive = 0.0;
  std::mt19937_64 rng;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Compiled form of a SimConfig. Holds the configuration by reference, so
/// the config must outlive the simulator.
class Simulator {
public:
  explicit Simulator(const SimConfig &cfg);

  SimState initial_state() const;
  /// Advances `state` by one dt under velocity `v_now`.
  void step(SimState &state, double v_now) const;
  /// Recurrent current into each neuron for the current traces, including
  /// the 1/n normalisation and recurrent_scale.
  std::vector<double> recurrent_current(const SimState &state, double v_now) const;

  std::size_t init_neuron() const { return init_neuron_; }

private:
  const SimConfig &cfg_;
  std::size_t n_;
  std::size_t init_neuron_;
  double syn_decay_;
  double mem_decay_;
  double noise_scale_;
  // Column-major copies (post-major) for cache-friendly spike updates.
  std::vector<double> sym_t_;
  std::vector<double> plus_t_;
  std::vector<double> minus_t_;
};

/// One step with a freshly compiled simulator. Convenient for tests; use
/// Simulator directly for loops.
void step(SimState &state, const SimConfig &cfg, double v_now);

struct RunResult {
  SpikeRaster raster;
  /// Velocity actually applied, compressed to its change points.
  VelocityProfile applied;
};

RunResult run(const SimConfig &cfg, const VelocityProfile &profile, double t_end);

/// Spike count per neuron in [t0, t1) divided by (t1 − t0), in Hz.
std::vector<double> mean_rate_profile(const SpikeRaster &raster, double t0, double t1,
                                      std::size_t n);

/// Exponential-Euler LIF update shared by the continuous and hardware
/// engines. Returns true if the neuron spiked during the step ending at
/// `t_new`.
bool integrate_lif(double &v, double &refrac_until, double input, double t_new, double dt,
                   double mem_decay, const NeuronParams &p);

} // namespace ringsim
