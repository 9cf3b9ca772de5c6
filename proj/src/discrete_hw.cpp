#include "ringsim/discrete_hw.hpp"

#include "ringsim/angles.hpp"
#include "ringsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace ringsim {

const char *to_string(SynapseClass c) {
  switch (c) {
  case SynapseClass::fast_exc:
    return "fast_exc";
  case SynapseClass::slow_exc:
    return "slow_exc";
  case SynapseClass::fast_inh:
    return "fast_inh";
  case SynapseClass::slow_inh:
    return "slow_inh";
  }
  return "?";
}

SynapseClass synapse_class_from_string(const std::string &name) {
  for (auto c : {SynapseClass::fast_exc, SynapseClass::slow_exc, SynapseClass::fast_inh,
                 SynapseClass::slow_inh})
    if (name == to_string(c))
      return c;
  throw std::invalid_argument("unknown synapse class '" + name + "'");
}

bool is_excitatory(SynapseClass c) {
  return c == SynapseClass::fast_exc || c == SynapseClass::slow_exc;
}

double HwTopology::population_spacing() const { return kTwoPi / static_cast<double>(n_pops); }

void HwTopology::validate() const {
  if (n_pops < 3)
    throw std::invalid_argument("n_pops must be at least 3");
  if (pop_size == 0)
    throw std::invalid_argument("pop_size must be positive");
  if (n_pops * pop_size > 256)
    throw std::invalid_argument("n_pops × pop_size must not exceed 256");
  if (fan_in_limit == 0)
    throw std::invalid_argument("fan_in_limit must be positive");
  if (!(unit_weight > 0.0))
    throw std::invalid_argument("unit_weight must be positive");
  for (auto c : {SynapseClass::fast_exc, SynapseClass::slow_exc, SynapseClass::fast_inh,
                 SynapseClass::slow_inh}) {
    const auto &p = params(c);
    if (!(p.tau > 0.0))
      throw std::invalid_argument(std::string("tau of ") + to_string(c) + " must be positive");
    const bool sign_ok = is_excitatory(c) ? p.efficacy >= 0.0 : p.efficacy <= 0.0;
    if (!std::isfinite(p.efficacy) || !sign_ok)
      throw std::invalid_argument(std::string("efficacy of ") + to_string(c) +
                                  " has the wrong sign");
  }
  if (!is_excitatory(ring_exc) || (velocity_exc && !is_excitatory(*velocity_exc)) ||
      is_excitatory(ring_inh) || is_excitatory(velocity_inh))
    throw std::invalid_argument("class assignment mixes up excitatory and inhibitory classes");
}

RingGeometry hw_geometry(const HwTopology &topo) {
  RingGeometry g;
  g.n = topo.n_neurons();
  g.preferred_angles.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    g.preferred_angles[i] = static_cast<double>(topo.pop_of(i)) * topo.population_spacing();
  return g;
}

void ConnectionTable::add(std::size_t pre, std::size_t post, SynapseClass cls,
                          std::uint32_t count) {
  if (pre >= n_ || post >= n_)
    throw std::invalid_argument("connection endpoint out of range");
  if (count == 0)
    return;
  entries_[{pre, post, static_cast<int>(cls)}] += count;
}

void ConnectionTable::remove(std::size_t pre, std::size_t post, SynapseClass cls,
                             std::uint32_t count) {
  if (count == 0)
    return;
  auto it = entries_.find({pre, post, static_cast<int>(cls)});
  if (it == entries_.end() || it->second < count) {
    std::ostringstream msg;
    msg << "cannot remove " << count << " " << to_string(cls) << " synapses " << pre << " -> "
        << post;
    throw std::invalid_argument(msg.str());
  }
  it->second -= count;
  if (it->second == 0)
    entries_.erase(it);
}

std::uint32_t ConnectionTable::count(std::size_t pre, std::size_t post, SynapseClass cls) const {
  auto it = entries_.find({pre, post, static_cast<int>(cls)});
  return it == entries_.end() ? 0 : it->second;
}

void ConnectionTable::merge(const ConnectionTable &delta) {
  if (delta.n_ != n_)
    throw std::invalid_argument("connection tables differ in size");
  for (const auto &[k, c] : delta.entries_)
    entries_[k] += c;
}

void ConnectionTable::subtract(const ConnectionTable &delta) {
  if (delta.n_ != n_)
    throw std::invalid_argument("connection tables differ in size");
  for (const auto &[k, c] : delta.entries_)
    remove(std::get<0>(k), std::get<1>(k), static_cast<SynapseClass>(std::get<2>(k)), c);
}

std::vector<std::size_t> ConnectionTable::fan_in() const {
  std::vector<std::size_t> out(n_, 0);
  for (const auto &[k, c] : entries_)
    out[std::get<1>(k)] += c;
  return out;
}

std::size_t ConnectionTable::total() const {
  std::size_t t = 0;
  for (const auto &[k, c] : entries_)
    t += c;
  return t;
}

std::vector<Connection> ConnectionTable::entries() const {
  std::vector<Connection> out;
  out.reserve(entries_.size());
  for (const auto &[k, c] : entries_)
    out.push_back({std::get<0>(k), std::get<1>(k), static_cast<SynapseClass>(std::get<2>(k)), c});
  return out;
}

void check_fan_in(const ConnectionTable &table, std::size_t limit) {
  const auto fan = table.fan_in();
  std::vector<std::size_t> over;
  for (std::size_t i = 0; i < fan.size(); ++i)
    if (fan[i] > limit)
      over.push_back(i);
  if (over.empty())
    return;
  std::stable_sort(over.begin(), over.end(),
                   [&](std::size_t a, std::size_t b) { return fan[a] > fan[b]; });
  std::ostringstream msg;
  msg << over.size() << " neuron(s) exceed the fan-in limit of " << limit << "; worst:";
  for (std::size_t k = 0; k < std::min<std::size_t>(over.size(), 5); ++k)
    msg << " neuron " << over[k] << " (" << fan[over[k]] << ")";
  throw FanInError(msg.str());
}

void write_connections_csv(std::ostream &out, const ConnectionTable &table) {
  out << "pre,post,class,count\n";
  for (const auto &c : table.entries())
    out << c.pre << ',' << c.post << ',' << to_string(c.cls) << ',' << c.count << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(field);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
    s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ')
    ++i;
  return s.substr(i);
}

std::uint64_t parse_uint(const std::string &s, std::size_t row, const char *what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (s.empty() || s.front() == '-')
      throw std::invalid_argument(what);
    v = std::stoull(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw std::invalid_argument("row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
  return v;
}

} // namespace

ConnectionTable read_connections_csv(std::istream &in, std::size_t n_neurons) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "pre,post,class,count")
    throw std::invalid_argument("expected header 'pre,post,class,count'");
  ConnectionTable table(n_neurons);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty())
      continue;
    const auto f = split_csv(line);
    if (f.size() != 4)
      throw std::invalid_argument("row " + std::to_string(row) + ": expected 4 fields");
    const auto pre = parse_uint(trim(f[0]), row, "pre");
    const auto post = parse_uint(trim(f[1]), row, "post");
    SynapseClass cls;
    try {
      cls = synapse_class_from_string(trim(f[2]));
    } catch (const std::invalid_argument &e) {
      throw std::invalid_argument("row " + std::to_string(row) + ": " + e.what());
    }
    const auto count = parse_uint(trim(f[3]), row, "count");
    if (pre >= n_neurons || post >= n_neurons)
      throw std::invalid_argument("row " + std::to_string(row) + ": neuron index out of range");
    table.add(pre, post, cls, static_cast<std::uint32_t>(count));
  }
  return table;
}

QuantizedRow quantize_profile(const std::vector<double> &row, double unit_weight,
                              std::optional<std::size_t> fan_in_budget) {
  if (!(unit_weight > 0.0))
    throw std::invalid_argument("unit_weight must be positive");
  QuantizedRow q;
  q.excitatory.resize(row.size());
  q.inhibitory.resize(row.size());
  q.residual.resize(row.size());
  std::size_t total = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double w = row[k];
    if (!std::isfinite(w))
      throw std::invalid_argument("weight " + std::to_string(k) + " is not finite");
    q.excitatory[k] = static_cast<std::uint32_t>(std::llround(std::max(w, 0.0) / unit_weight));
    q.inhibitory[k] = static_cast<std::uint32_t>(std::llround(std::max(-w, 0.0) / unit_weight));
    q.residual[k] = w - unit_weight * (static_cast<double>(q.excitatory[k]) -
                                       static_cast<double>(q.inhibitory[k]));
    total += q.excitatory[k] + q.inhibitory[k];
  }
  if (fan_in_budget && total > *fan_in_budget) {
    std::ostringstream msg;
    msg << "quantized row needs " << total << " synapses, over the budget of " << *fan_in_budget;
    throw FanInError(msg.str());
  }
  return q;
}

std::vector<double> population_profile(const HwTopology &topo, const GainSet &gains) {
  std::vector<double> w(topo.n_pops);
  for (std::size_t d = 0; d < topo.n_pops; ++d) {
    // Cosine of the offset folded to [0, n/2] keeps the profile exactly even.
    const std::size_t fold = std::min(d, topo.n_pops - d);
    w[d] = gains.g_inh + gains.g_cos * std::cos(static_cast<double>(fold) *
                                                topo.population_spacing());
  }
  return w;
}

ConnectionTable build_hw_ring(const HwTopology &topo, const GainSet &gains) {
  topo.validate();
  const auto q = quantize_profile(population_profile(topo, gains), topo.unit_weight);
  ConnectionTable table(topo.n_neurons());
  const std::size_t P = topo.n_pops, S = topo.pop_size;
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t b = 0; b < P; ++b) {
      const std::size_t d = (b + P - a) % P;
      for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) {
          table.add(a * S + i, b * S + j, topo.ring_exc, q.excitatory[d]);
          table.add(a * S + i, b * S + j, topo.ring_inh, q.inhibitory[d]);
        }
    }
  check_fan_in(table, topo.fan_in_limit);
  return table;
}

VelocityConnectionSet make_velocity_set(const HwTopology &topo, int direction,
                                        std::size_t n_connections) {
  topo.validate();
  if (direction != 1 && direction != -1)
    throw std::invalid_argument("velocity direction must be +1 or -1");
  VelocityConnectionSet v;
  v.direction = direction;
  v.n_connections = n_connections;
  v.realized = ConnectionTable(topo.n_neurons());
  const std::size_t P = topo.n_pops, S = topo.pop_size;
  for (std::size_t q = 0; q < P; ++q) {
    const std::size_t behind = (q + P - (direction > 0 ? 1 : P - 1)) % P;
    const std::size_t ahead = (q + (direction > 0 ? 1 : P - 1)) % P;
    for (std::size_t l = 0; l < S; ++l) {
      const std::size_t post = q * S + l;
      for (std::size_t k = 0; k < n_connections; ++k) {
        const std::size_t src = (l + k) % S;
        if (topo.velocity_exc)
          v.realized.add(behind * S + src, post, *topo.velocity_exc, 1);
        v.realized.add(ahead * S + src, post, topo.velocity_inh, 1);
      }
    }
  }
  return v;
}

ConnectionTable apply_velocity(const ConnectionTable &table, const VelocityConnectionSet &vset,
                               std::size_t fan_in_limit) {
  ConnectionTable out = table;
  out.merge(vset.realized);
  check_fan_in(out, fan_in_limit);
  return out;
}

ConnectionTable remove_velocity(const ConnectionTable &table, const VelocityConnectionSet &vset) {
  ConnectionTable out = table;
  out.subtract(vset.realized);
  return out;
}

HwRunOptions default_hw_options() {
  HwRunOptions o;
  o.neuron.i_bg = 2.5;
  o.noise_sigma = 0.2;
  return o;
}

namespace {

struct Target {
  std::size_t post;
  int cls;
  double count;
};

std::vector<std::vector<Target>> outgoing(const ConnectionTable &t) {
  std::vector<std::vector<Target>> out(t.n_neurons());
  for (const auto &c : t.entries())
    out[c.pre].push_back({c.post, static_cast<int>(c.cls), static_cast<double>(c.count)});
  return out;
}

} // namespace

SpikeRaster run_hw(const HwTopology &topo, const ConnectionTable &base,
                   const std::vector<ScheduledVelocity> &schedule, const HwCue &cue,
                   const HwRunOptions &opt) {
  topo.validate();
  opt.neuron.validate();
  const std::size_t n = topo.n_neurons();
  if (base.n_neurons() != n)
    throw std::invalid_argument("connection table does not match the topology");
  if (cue.population >= topo.n_pops)
    throw std::invalid_argument("cue population out of range");
  if (!(opt.dt > 0.0) || !(opt.t_end > 0.0))
    throw std::invalid_argument("dt and t_end must be positive");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k].time > schedule[k - 1].time))
      throw std::invalid_argument("schedule times must be strictly increasing");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  std::vector<double> mem_decay(n), i_bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = opt.neuron.tau_m * std::max(0.1, 1.0 + opt.jitter * gauss(rng));
    mem_decay[i] = std::exp(-opt.dt / tau);
    i_bg[i] = opt.neuron.i_bg * (1.0 + opt.jitter * gauss(rng));
  }
  std::vector<double> noise_scale(n);
  for (std::size_t i = 0; i < n; ++i)
    noise_scale[i] = opt.noise_sigma * std::sqrt(1.0 - mem_decay[i] * mem_decay[i]);
  std::array<double, 4> syn_decay{}, efficacy{};
  for (std::size_t c = 0; c < 4; ++c) {
    syn_decay[c] = std::exp(-opt.dt / topo.classes[c].tau);
    efficacy[c] = topo.classes[c].efficacy;
  }

  auto targets = outgoing(base);
  std::size_t next_switch = 0;
  std::vector<std::array<double, 4>> syn(n, std::array<double, 4>{});
  std::vector<double> v(n, opt.neuron.v_reset), refrac(n, 0.0);
  SpikeRaster raster;
  raster.n = n;
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
  std::vector<std::size_t> spikers;

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    while (next_switch < schedule.size() && schedule[next_switch].time <= t + 1e-12) {
      const auto &vset = schedule[next_switch].vset;
      ConnectionTable active = base;
      if (vset.n_connections > 0)
        active = apply_velocity(base, vset, topo.fan_in_limit);
      targets = outgoing(active);
      ++next_switch;
    }
    const double t_new = static_cast<double>(k + 1) * opt.dt;
    spikers.clear();
    for (std::size_t i = 0; i < n; ++i) {
      double input = i_bg[i];
      for (std::size_t c = 0; c < 4; ++c) {
        syn[i][c] *= syn_decay[c];
        input += efficacy[c] * syn[i][c];
      }
      if (t < cue.duration && topo.pop_of(i) == cue.population)
        input += cue.current;
      if (integrate_lif(v[i], refrac[i], input, t_new, opt.dt, mem_decay[i], opt.neuron))
        spikers.push_back(i);
      else if (opt.noise_sigma > 0.0 && t_new >= refrac[i] + 0.5 * opt.dt)
        v[i] += noise_scale[i] * gauss(rng);
      if (!std::isfinite(v[i]))
        throw NumericalError("non-finite membrane potential in hardware run at neuron " +
                             std::to_string(i));
    }
    for (std::size_t i : spikers) {
      raster.events.push_back({t_new, i});
      for (const auto &tg : targets[i])
        syn[tg.post][tg.cls] += tg.count;
    }
  }
  raster.duration = static_cast<double>(steps) * opt.dt;
  return raster;
}

DecodedTrace decode_hw(const SpikeRaster &raster, const HwTopology &topo) {
  return decode_trace(raster, hw_geometry(topo), kPvaStep, kPvaWindow);
}

namespace {

std::optional<double> median(std::vector<double> xs) {
  if (xs.empty())
    return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

} // namespace

DriftResult hw_drift(const HwTopology &topo, const ConnectionTable &base,
                     const std::vector<std::uint64_t> &seeds, const HwRunOptions &opt,
                     double window, double span) {
  if (seeds.empty())
    throw std::invalid_argument("hw_drift needs at least one seed");
  const HwCue cue_proto;
  if (opt.t_end < cue_proto.duration + span - 1e-9)
    throw std::invalid_argument("run too short for the drift span");
  const std::size_t P = topo.n_pops;
  DriftResult result;
  result.window = window;
  result.runs = parallel_map<DriftRun>(seeds.size() * P, [&](std::size_t job) {
    DriftRun r;
    r.seed = seeds[job / P];
    r.population = job % P;
    HwCue cue = cue_proto;
    cue.population = r.population;
    HwRunOptions o = opt;
    o.seed = r.seed;
    const auto raster = run_hw(topo, base, {}, cue, o);
    const double target = static_cast<double>(r.population) * topo.population_spacing();
    r.windows = drift_windows(decode_hw(raster, topo), target, window, cue.duration,
                              cue.duration + span);
    return r;
  });
  const std::size_t n_windows = result.runs.front().windows.size();
  for (std::size_t w = 0; w < n_windows; ++w) {
    std::vector<double> xs;
    for (const auto &r : result.runs)
      if (r.windows[w])
        xs.push_back(*r.windows[w]);
    result.window_medians.push_back(median(xs));
  }
  return result;
}

VelocitySweep velocity_sweep(const HwTopology &topo, const ConnectionTable &base,
                             const std::vector<std::size_t> &counts, const SweepOptions &sweep,
                             HwRunOptions opt) {
  if (counts.empty())
    throw std::invalid_argument("velocity_sweep needs at least one count");
  if (sweep.repeats < 2)
    throw std::invalid_argument("velocity_sweep needs at least 2 repeats");
  if (!(sweep.fit_end > sweep.fit_start))
    throw std::invalid_argument("fit window is empty");
  opt.t_end = sweep.fit_end;
  const std::size_t P = topo.n_pops;
  const std::size_t per_count = P * sweep.repeats;
  const std::uint64_t seed0 = opt.seed;

  auto slopes = parallel_map<std::optional<double>>(
      counts.size() * per_count, [&](std::size_t job) -> std::optional<double> {
        const std::size_t c = job / per_count, rest = job % per_count;
        HwCue cue;
        cue.population = rest % P;
        HwRunOptions o = opt;
        o.seed = seed0 + rest / P;
        std::vector<ScheduledVelocity> schedule{
            {sweep.velocity_on, make_velocity_set(topo, sweep.direction, counts[c])}};
        const auto raster = run_hw(topo, base, schedule, cue, o);
        try {
          const auto u = unwrap(decode_hw(raster, topo));
          return fit_bump_velocity(u, sweep.fit_start, sweep.fit_end).slope;
        } catch (const std::invalid_argument &) {
          return std::nullopt;
        }
      });

  VelocitySweep out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    SweepPoint p;
    p.count = counts[c];
    std::vector<double> xs;
    for (std::size_t k = 0; k < per_count; ++k) {
      const auto &s = slopes[c * per_count + k];
      if (s)
        xs.push_back(*s);
      else
        ++p.dead;
    }
    if (xs.empty())
      throw std::runtime_error("every run died for count " + std::to_string(counts[c]));
    p.runs = xs.size();
    double mean = 0.0;
    for (double x : xs)
      mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs)
      ss += (x - mean) * (x - mean);
    p.mean = mean;
    p.sem = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                                      static_cast<double>(xs.size()))
                          : 0.0;
    out.points.push_back(p);
  }
  if (out.points.size() >= 3 &&
      std::all_of(out.points.begin(), out.points.end(), [](const auto &p) { return p.sem > 0.0; })) {
    std::vector<WeightedPoint> pts;
    for (const auto &p : out.points)
      pts.push_back({static_cast<double>(p.count), p.mean, p.sem});
    out.fit = weighted_linear_fit(pts);
  }
  return out;
}

std::vector<PhaseFit> phase_fits(const SpikeRaster &raster, const HwTopology &topo,
                                 const std::vector<ScheduledVelocity> &schedule,
                                 const HwCue &cue, double t_end, double settle) {
  struct Phase {
    double start;
    std::size_t n;
    int dir;
  };
  std::vector<Phase> phases{{cue.duration, 0, 1}};
  for (const auto &s : schedule) {
    const double start = std::max(s.time, cue.duration);
    if (start <= phases.back().start)
      phases.back() = {phases.back().start, s.vset.n_connections, s.vset.direction};
    else
      phases.push_back({start, s.vset.n_connections, s.vset.direction});
  }
  const auto u = unwrap(decode_hw(raster, topo));
  std::vector<PhaseFit> out;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    PhaseFit pf;
    pf.t0 = phases[k].start + settle;
    pf.t1 = k + 1 < phases.size() ? phases[k + 1].start : t_end;
    pf.n_connections = phases[k].n;
    pf.direction = phases[k].dir;
    if (pf.t1 <= pf.t0)
      continue;
    pf.fit = fit_bump_velocity(u, pf.t0, pf.t1);
    out.push_back(pf);
  }
  return out;
}

std::vector<ScheduledVelocity> read_schedule_csv(std::istream &in, const HwTopology &topo) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time_s,direction,n_connections")
    throw std::invalid_argument("expected header 'time_s,direction,n_connections'");
  std::vector<ScheduledVelocity> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty())
      continue;
    const auto f = split_csv(line);
    if (f.size() != 3)
      throw std::invalid_argument("row " + std::to_string(row) + ": expected 3 fields");
    double t = 0.0;
    int dir = 0;
    try {
      std::size_t used = 0;
      t = std::stod(trim(f[0]), &used);
      if (used != trim(f[0]).size())
        throw std::invalid_argument("time");
      dir = std::stoi(trim(f[1]), &used);
      if (used != trim(f[1]).size())
        throw std::invalid_argument("direction");
    } catch (const std::exception &) {
      throw std::invalid_argument("row " + std::to_string(row) + ": malformed value");
    }
    if (!std::isfinite(t) || t < 0.0)
      throw std::invalid_argument("row " + std::to_string(row) + ": bad time");
    if (!out.empty() && !(t > out.back().time))
      throw std::invalid_argument("row " + std::to_string(row) + ": time not increasing");
    const auto n = parse_uint(trim(f[2]), row, "n_connections");
    if (dir != 1 && dir != -1)
      throw std::invalid_argument("row " + std::to_string(row) + ": direction must be 1 or -1");
    out.push_back({t, make_velocity_set(topo, dir, static_cast<std::size_t>(n))});
  }
  return out;
}

} // namespace ringsim
