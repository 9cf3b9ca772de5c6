#include "ringsim/engine.hpp"

#include "ringsim/angles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace ringsim {

void NeuronParams::validate() const {
  if (!(tau_m > 0.0))
    throw std::invalid_argument("tau_m must be positive");
  if (!(v_reset < v_th))
    throw std::invalid_argument("v_reset must be below v_th");
  if (!(t_ref >= 0.0))
    throw std::invalid_argument("t_ref must be non-negative");
  if (!std::isfinite(i_bg))
    throw std::invalid_argument("i_bg must be finite");
}

void SynapseParams::validate() const {
  if (!(tau_syn > 0.0))
    throw std::invalid_argument("tau_syn must be positive");
  if (!(spike_increment > 0.0))
    throw std::invalid_argument("spike_increment must be positive");
}

VelocityProfile::VelocityProfile(std::vector<VelocitySample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty())
    throw std::invalid_argument("velocity profile needs at least one sample");
  if (samples_.front().time != 0.0)
    throw std::invalid_argument("velocity profile must start at t = 0");
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    if (!std::isfinite(samples_[k].v) || !std::isfinite(samples_[k].time))
      throw std::invalid_argument("velocity profile sample " + std::to_string(k) +
                                  " is not finite");
    if (k > 0 && !(samples_[k].time > samples_[k - 1].time))
      throw std::invalid_argument("velocity profile times must be strictly increasing (sample " +
                                  std::to_string(k) + ")");
  }
}

VelocityProfile VelocityProfile::step_at(double t_on, double v) {
  if (t_on <= 0.0)
    return constant(v);
  return VelocityProfile({{0.0, 0.0}, {t_on, v}});
}

double VelocityProfile::at(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double x, const VelocitySample &s) { return x < s.time; });
  if (it == samples_.begin())
    return samples_.front().v;
  return std::prev(it)->v;
}

void SimConfig::validate() const {
  if (geometry.n < 4 || geometry.preferred_angles.size() != geometry.n)
    throw std::invalid_argument("invalid ring geometry");
  if (weights.size() != geometry.n || weights.w_sym.rows() != geometry.n ||
      weights.asym_kernel.rows() != geometry.n || weights.oob_inhibition.size() != geometry.n)
    throw std::invalid_argument("weight set does not match the geometry");
  neuron.validate();
  synapse.validate();
  if (!(dt > 0.0))
    throw std::invalid_argument("dt must be positive");
  if (!(init_duration >= 0.0))
    throw std::invalid_argument("init_duration must be non-negative");
  if (!(init_angle >= 0.0 && init_angle < kTwoPi))
    throw std::invalid_argument("init_angle must lie in [0, 2pi)");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("noise_sigma must be non-negative");
  if (!(initial_spread >= 0.0 && initial_spread < 1.0))
    throw std::invalid_argument("initial_spread must lie in [0, 1)");
}

SimConfig make_config(std::size_t n, const GainSet &gains,
                      const std::optional<BoundaryConfig> &boundary) {
  SimConfig cfg;
  cfg.geometry = build_geometry(n);
  cfg.gains = gains;
  cfg.weights = build_weights(cfg.geometry, gains, boundary);
  return cfg;
}

bool integrate_lif(double &v, double &refrac_until, double input, double t_new, double dt,
                   double mem_decay, const NeuronParams &p) {
  if (t_new < refrac_until + 0.5 * dt) {
    v = p.v_reset;
    return false;
  }
  v = input + (v - input) * mem_decay;
  if (v >= p.v_th) {
    v = p.v_reset;
    refrac_until = t_new + p.t_ref;
    return true;
  }
  return false;
}

Simulator::Simulator(const SimConfig &cfg)
    : cfg_(cfg), n_(cfg.geometry.n), init_neuron_(cfg.geometry.nearest_index(cfg.init_angle)),
      syn_decay_(std::exp(-cfg.dt / cfg.synapse.tau_syn)),
      mem_decay_(std::exp(-cfg.dt / cfg.neuron.tau_m)),
      noise_scale_(cfg.noise_sigma * std::sqrt(1.0 - std::exp(-2.0 * cfg.dt / cfg.neuron.tau_m))) {
  cfg.validate();
  const auto &ws = cfg.weights;
  sym_t_.resize(n_ * n_);
  plus_t_.resize(n_ * n_);
  minus_t_.resize(n_ * n_);
  for (std::size_t post = 0; post < n_; ++post) {
    for (std::size_t pre = 0; pre < n_; ++pre) {
      const std::size_t k = post * n_ + pre;
      sym_t_[k] = ws.w_sym(pre, post);
      plus_t_[k] = ws.atten_plus[pre] * ws.asym_kernel(pre, post);
      minus_t_[k] = ws.atten_minus[pre] * ws.asym_kernel(pre, post);
    }
  }
}

SimState Simulator::initial_state() const {
  SimState s;
  s.v_mem.assign(n_, cfg_.neuron.v_reset);
  s.s_trace.assign(n_, 0.0);
  s.refrac_until.assign(n_, 0.0);
  s.in_sym.assign(n_, 0.0);
  s.in_plus.assign(n_, 0.0);
  s.in_minus.assign(n_, 0.0);
  s.raster.n = n_;
  s.rng.seed(cfg_.seed);

  if (cfg_.initial_spread > 0.0) {
    // One draw per ring offset, mirrored so offsets d and n − d match.
    std::mt19937_64 gen(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> by_offset(n_, 0.0);
    for (std::size_t d = 0; d <= n_ / 2; ++d) {
      by_offset[d] = u(gen);
      by_offset[(n_ - d) % n_] = by_offset[d];
    }
    const double span = cfg_.initial_spread * (cfg_.neuron.v_th - cfg_.neuron.v_reset);
    for (std::size_t i = 0; i < n_; ++i)
      s.v_mem[i] = cfg_.neuron.v_reset + span * by_offset[(i + n_ - init_neuron_) % n_];
  }
  return s;
}

std::vector<double> Simulator::recurrent_current(const SimState &state, double v_now) const {
  const double norm = cfg_.recurrent_scale / static_cast<double>(n_);
  const double asym = v_now * cfg_.gains.g_sin;
  const auto &dir = v_now > 0.0 ? state.in_plus : state.in_minus;
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double in = state.in_sym[i] - state.oob_drive;
    if (v_now != 0.0)
      in += asym * dir[i];
    out[i] = norm * in;
  }
  return out;
}

void Simulator::step(SimState &state, double v_now) const {
  for (std::size_t i = 0; i < n_; ++i) {
    state.s_trace[i] *= syn_decay_;
    state.in_sym[i] *= syn_decay_;
    state.in_plus[i] *= syn_decay_;
    state.in_minus[i] *= syn_decay_;
  }
  state.oob_drive *= syn_decay_;

  const double t_now = state.t;
  const double t_new = static_cast<double>(state.steps + 1) * cfg_.dt;
  const bool pulse_on = t_now < cfg_.init_duration;
  const auto rec = recurrent_current(state, v_now);

  std::normal_distribution<double> gauss;
  std::vector<std::size_t> spikers;
  for (std::size_t i = 0; i < n_; ++i) {
    double input = cfg_.neuron.i_bg + rec[i];
    if (pulse_on && i == init_neuron_)
      input += cfg_.init_current;
    double &v = state.v_mem[i];
    const bool spiked = integrate_lif(v, state.refrac_until[i], input, t_new, cfg_.dt,
                                      mem_decay_, cfg_.neuron);
    if (!spiked && noise_scale_ > 0.0 && t_new >= state.refrac_until[i] + 0.5 * cfg_.dt)
      v += noise_scale_ * gauss(state.rng);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite membrane potential at neuron " << i << ", t = " << t_new
          << " s (input " << input << ")";
      throw NumericalError(msg.str());
    }
    if (spiked)
      spikers.push_back(i);
  }

  if (!spikers.empty()) {
    const double inc = cfg_.synapse.spike_increment;
    for (std::size_t i : spikers) {
      state.s_trace[i] += inc;
      state.oob_drive += inc * cfg_.weights.oob_inhibition[i];
      state.raster.events.push_back({t_new, i});
    }
    // Each postsynaptic neuron sums its new inputs in ring order starting at
    // itself, so a rotated network performs bitwise-identical arithmetic.
    const std::size_t m = spikers.size();
    for (std::size_t post = 0; post < n_; ++post) {
      const std::size_t first = static_cast<std::size_t>(
          std::lower_bound(spikers.begin(), spikers.end(), post) - spikers.begin());
      const double *sym = &sym_t_[post * n_];
      const double *plus = &plus_t_[post * n_];
      const double *minus = &minus_t_[post * n_];
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t pre = spikers[(first + k) % m];
        state.in_sym[post] += inc * sym[pre];
        state.in_plus[post] += inc * plus[pre];
        state.in_minus[post] += inc * minus[pre];
      }
    }
  }

  state.steps += 1;
  state.t = t_new;
  state.raster.duration = t_new;
}

void step(SimState &state, const SimConfig &cfg, double v_now) {
  Simulator(cfg).step(state, v_now);
}

RunResult run(const SimConfig &cfg, const VelocityProfile &profile, double t_end) {
  if (!(t_end > 0.0))
    throw std::invalid_argument("t_end must be positive");
  Simulator sim(cfg);
  SimState state = sim.initial_state();
  const auto steps = static_cast<std::size_t>(std::llround(t_end / cfg.dt));
  std::vector<VelocitySample> applied;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const double v = profile.at(t);
    if (applied.empty() || applied.back().v != v)
      applied.push_back({t, v});
    sim.step(state, v);
  }
  state.raster.duration = static_cast<double>(steps) * cfg.dt;
  return {std::move(state.raster), VelocityProfile(std::move(applied))};
}

std::vector<double> mean_rate_profile(const SpikeRaster &raster, double t0, double t1,
                                      std::size_t n) {
  if (!(t1 > t0))
    throw std::invalid_argument("mean_rate_profile needs t1 > t0");
  std::vector<double> rate(n, 0.0);
  for (const auto &e : raster.events)
    if (e.time >= t0 && e.time < t1 && e.neuron < n)
      rate[e.neuron] += 1.0;
  for (auto &r : rate)
    r /= (t1 - t0);
  return rate;
}

} // namespace ringsim
