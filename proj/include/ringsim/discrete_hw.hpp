#pragma once

#include "ringsim/decoder.hpp"
#include "ringsim/engine.hpp"
#include "ringsim/ring.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace ringsim {

enum class SynapseClass { fast_exc = 0, slow_exc = 1, fast_inh = 2, slow_inh = 3 };

const char *to_string(SynapseClass c);
SynapseClass synapse_class_from_string(const std::string &name);
bool is_excitatory(SynapseClass c);

struct SynapseClassParams {
  /// Current jump per unit synapse per presynaptic spike; positive for
  /// excitatory classes, negative for inhibitory ones.
  double efficacy = 0.0;
  double tau = 0.02;
};

struct HwTopology {
  std::size_t n_pops = 10;
  std::size_t pop_size = 4;
  std::size_t fan_in_limit = 64;
  std::array<SynapseClassParams, 4> classes{{
      {0.15, 0.02},   // fast excitatory
      {0.15, 0.1},    // slow excitatory
      {-0.15, 0.02},  // fast inhibitory
      {-0.205, 0.02}, // second inhibitory class, used by the velocity drive
  }};
  /// Weight represented by one unit synapse when quantizing the ring.
  double unit_weight = 12.0;
  SynapseClass ring_exc = SynapseClass::fast_exc;
  SynapseClass ring_inh = SynapseClass::fast_inh;
  /// Class of the excitatory half of the velocity drive. Unset leaves the
  /// drive purely inhibitory, which keeps bump speed proportional to the
  /// connection count.
  std::optional<SynapseClass> velocity_exc;
  SynapseClass velocity_inh = SynapseClass::slow_inh;

  std::size_t n_neurons() const { return n_pops * pop_size; }
  std::size_t pop_of(std::size_t neuron) const { return neuron / pop_size; }
  double population_spacing() const;
  const SynapseClassParams &params(SynapseClass c) const {
    return classes[static_cast<std::size_t>(c)];
  }
  void validate() const;
};

/// Geometry whose preferred angles are the population angles, for decoding
/// hardware rasters.
RingGeometry hw_geometry(const HwTopology &topo);

class FanInError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Connection {
  std::size_t pre = 0;
  std::size_t post = 0;
  SynapseClass cls = SynapseClass::fast_exc;
  std::uint32_t count = 0;

  bool operator==(const Connection &) const = default;
};

/// Multiset of unit synapses keyed by (pre, post, class). Zero counts are
/// never stored, so equality is multiset equality.
class ConnectionTable {
public:
  ConnectionTable() = default;
  explicit ConnectionTable(std::size_t n_neurons) : n_(n_neurons) {}

  std::size_t n_neurons() const { return n_; }
  void add(std::size_t pre, std::size_t post, SynapseClass cls, std::uint32_t count);
  /// Throws std::invalid_argument if fewer than `count` synapses exist.
  void remove(std::size_t pre, std::size_t post, SynapseClass cls, std::uint32_t count);
  std::uint32_t count(std::size_t pre, std::size_t post, SynapseClass cls) const;

  void merge(const ConnectionTable &delta);
  void subtract(const ConnectionTable &delta);

  /// Total incoming unit synapses per neuron.
  std::vector<std::size_t> fan_in() const;
  std::size_t total() const;
  bool empty() const { return entries_.empty(); }
  std::vector<Connection> entries() const;

  bool operator==(const ConnectionTable &) const = default;

private:
  using Key = std::tuple<std::size_t, std::size_t, int>;
  std::size_t n_ = 0;
  std::map<Key, std::uint32_t> entries_;
};

/// Throws FanInError naming the worst offenders if any neuron's fan-in
/// exceeds the limit.
void check_fan_in(const ConnectionTable &table, std::size_t limit);

void write_connections_csv(std::ostream &out, const ConnectionTable &table);
/// Reads `pre,post,class,count` rows. Errors name the offending row.
ConnectionTable read_connections_csv(std::istream &in, std::size_t n_neurons);

struct QuantizedRow {
  std::vector<std::uint32_t> excitatory;
  std::vector<std::uint32_t> inhibitory;
  /// weight − unit·(exc − inh), per entry.
  std::vector<double> residual;
};

/// Rounds each weight to a whole number of unit synapses of the matching
/// sign. With a fan-in budget, throws FanInError if the counts exceed it.
QuantizedRow quantize_profile(const std::vector<double> &row, double unit_weight,
                              std::optional<std::size_t> fan_in_budget = std::nullopt);

/// Population-level weights g_inh + g_cos·cos(2πd/n_pops) by offset d.
std::vector<double> population_profile(const HwTopology &topo, const GainSet &gains);

/// Every neuron of population A sends the population-level count for
/// offset (B − A) to every neuron of population B.
ConnectionTable build_hw_ring(const HwTopology &topo, const GainSet &gains);

struct VelocityConnectionSet {
  int direction = 1;
  std::size_t n_connections = 0;
  ConnectionTable realized;
};

/// Each neuron gets n_connections inhibitory synapses from the population
/// one step ahead (in `direction`) and, if the topology has a velocity
/// excitatory class, as many excitatory synapses from the population one
/// step behind. Sources are spread round-robin over the population.
VelocityConnectionSet make_velocity_set(const HwTopology &topo, int direction,
                                        std::size_t n_connections);

ConnectionTable apply_velocity(const ConnectionTable &table, const VelocityConnectionSet &vset,
                               std::size_t fan_in_limit);
ConnectionTable remove_velocity(const ConnectionTable &table, const VelocityConnectionSet &vset);

struct ScheduledVelocity {
  double time = 0.0;
  VelocityConnectionSet vset;
};

struct HwCue {
  std::size_t population = 0;
  double duration = 1.0;
  double current = 2.0;
};

struct HwRunOptions {
  NeuronParams neuron;
  double dt = 1e-4;
  double t_end = 12.0;
  /// Relative std of the per-neuron mismatch on tau_m and i_bg.
  double jitter = 0.05;
  /// Stationary std of membrane noise, as in SimConfig::noise_sigma.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

HwRunOptions default_hw_options();

/// Simulates the base table with the velocity set active at each time
/// swapped in. The schedule may be empty (no velocity connections).
SpikeRaster run_hw(const HwTopology &topo, const ConnectionTable &base,
                   const std::vector<ScheduledVelocity> &schedule, const HwCue &cue,
                   const HwRunOptions &opt);

/// PVA trace of a hardware raster at population resolution.
DecodedTrace decode_hw(const SpikeRaster &raster, const HwTopology &topo);

struct DriftRun {
  std::size_t population = 0;
  std::uint64_t seed = 0;
  std::vector<std::optional<double>> windows;
};

struct DriftResult {
  double window = 0.5;
  std::vector<DriftRun> runs;
  /// Median over runs of each window's error, degrees.
  std::vector<std::optional<double>> window_medians;
};

/// Zero-velocity runs from every starting population for each seed; drift
/// measured in windows after the cue ends.
DriftResult hw_drift(const HwTopology &topo, const ConnectionTable &base,
                     const std::vector<std::uint64_t> &seeds, const HwRunOptions &opt,
                     double window = 0.5, double span = 5.0);

struct SweepPoint {
  std::size_t count = 0;
  double mean = 0.0;
  double sem = 0.0;
  std::size_t runs = 0;
  std::size_t dead = 0;
};

struct VelocitySweep {
  std::vector<SweepPoint> points;
  std::optional<LinearFit> fit;
};

struct SweepOptions {
  std::size_t repeats = 10;
  double velocity_on = 2.0;
  double fit_start = 2.5;
  double fit_end = 9.0;
  int direction = 1;
};

/// Bump velocity for each count: `repeats` seeded runs per starting
/// population, pooled into mean ± SEM, then a 1/SEM² weighted fit.
VelocitySweep velocity_sweep(const HwTopology &topo, const ConnectionTable &base,
                             const std::vector<std::size_t> &counts, const SweepOptions &sweep,
                             HwRunOptions opt);

struct PhaseFit {
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t n_connections = 0;
  int direction = 1;
  LinearFit fit;
};

/// Fits the decoded bump velocity over each interval of constant velocity
/// set, starting `settle` seconds after each switch (and after the cue).
std::vector<PhaseFit> phase_fits(const SpikeRaster &raster, const HwTopology &topo,
                                 const std::vector<ScheduledVelocity> &schedule,
                                 const HwCue &cue, double t_end, double settle = 0.0);

/// Schedule rows `time_s,direction,n_connections`.
std::vector<ScheduledVelocity> read_schedule_csv(std::istream &in, const HwTopology &topo);

} // namespace ringsim
