#include "ringsim/harness.hpp"

#include "ringsim/angles.hpp"
#include "ringsim/parallel.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ringsim {

using nlohmann::json;

std::string to_string(ModelKind m) {
  switch (m) {
  case ModelKind::unbounded:
    return "unbounded";
  case ModelKind::bounded:
    return "bounded";
  case ModelKind::hw:
    return "hw";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string &name) {
  for (auto m : {ModelKind::unbounded, ModelKind::bounded, ModelKind::hw})
    if (name == to_string(m))
      return m;
  throw std::invalid_argument("unknown model '" + name + "'");
}

HwSettings default_hw_settings() {
  HwSettings s;
  s.run = default_hw_options();
  return s;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.hw = default_hw_settings();
  return c;
}

// ---------------------------------------------------------------------------
// Config (de)serialisation

namespace {

std::string preset_name(MotionPreset p) { return p == MotionPreset::wide ? "wide" : "limited"; }

MotionPreset preset_from_string(const std::string &s) {
  if (s == "wide")
    return MotionPreset::wide;
  if (s == "limited")
    return MotionPreset::limited;
  throw std::invalid_argument("unknown trajectory preset '" + s + "'");
}

json class_json(const SynapseClassParams &p) { return {{"efficacy", p.efficacy}, {"tau", p.tau}}; }

// Reads known keys from one section and rejects anything else.
class Section {
public:
  Section(const json &root, const std::string &name) : name_(name) {
    if (!root.contains(name))
      return;
    node_ = &root.at(name);
    if (!node_->is_object())
      throw std::invalid_argument("config section [" + name + "] must be a table");
  }
  ~Section() noexcept(false) {
    if (!node_ || std::uncaught_exceptions() > 0)
      return;
    for (const auto &[k, v] : node_->items())
      if (!seen_.count(k))
        throw std::invalid_argument("unknown key '" + k + "' in [" + name_ + "]");
  }

  template <class T> void get(const std::string &key, T &out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key))
      return;
    const json &v = node_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number())
          throw std::invalid_argument("not a number");
        out = v.get<double>();
        if (!std::isfinite(out))
          throw std::invalid_argument("not finite");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
          throw std::invalid_argument("not a non-negative integer");
        out = v.get<T>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::invalid_argument &e) {
      throw std::invalid_argument("[" + name_ + "] " + key + ": " + e.what());
    } catch (const json::exception &) {
      throw std::invalid_argument("[" + name_ + "] " + key + ": wrong type");
    }
  }

  const json *sub(const std::string &key) {
    seen_.insert(key);
    return node_ && node_->contains(key) ? &node_->at(key) : nullptr;
  }

private:
  std::string name_;
  const json *node_ = nullptr;
  std::set<std::string> seen_;
};

json toml_to_json(const toml::node &node) {
  if (auto t = node.as_table()) {
    json out = json::object();
    for (const auto &[k, v] : *t)
      out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    json out = json::array();
    for (const auto &v : *a)
      out.push_back(toml_to_json(v));
    return out;
  }
  if (auto v = node.as_integer())
    return v->get();
  if (auto v = node.as_floating_point())
    return v->get();
  if (auto v = node.as_boolean())
    return v->get();
  if (auto v = node.as_string())
    return v->get();
  throw std::invalid_argument("unsupported value type in config");
}

} // namespace

json to_json(const ExperimentConfig &c) {
  const auto &t = c.hw.topology;
  json classes = json::object();
  for (auto k : {SynapseClass::fast_exc, SynapseClass::slow_exc, SynapseClass::fast_inh,
                 SynapseClass::slow_inh})
    classes[to_string(k)] = class_json(t.params(k));
  return {
      {"geometry", {{"n", c.n}}},
      {"gains", {{"g_inh", c.gains.g_inh}, {"g_cos", c.gains.g_cos}, {"g_sin", c.gains.g_sin}}},
      {"neuron",
       {{"tau_m", c.neuron.tau_m},
        {"v_th", c.neuron.v_th},
        {"v_reset", c.neuron.v_reset},
        {"t_ref", c.neuron.t_ref},
        {"i_bg", c.neuron.i_bg}}},
      {"synapse", {{"tau_syn", c.synapse.tau_syn}, {"spike_increment", c.synapse.spike_increment}}},
      {"boundary",
       {{"theta_0", c.boundary.theta_0},
        {"theta_l", c.boundary.theta_l},
        {"ramp_width", c.boundary.ramp_width},
        {"oob_inhibition", c.boundary.oob_inhibition}}},
      {"hw",
       {{"n_pops", t.n_pops},
        {"pop_size", t.pop_size},
        {"fan_in_limit", t.fan_in_limit},
        {"unit_weight", t.unit_weight},
        {"classes", classes},
        {"ring_exc", to_string(t.ring_exc)},
        {"ring_inh", to_string(t.ring_inh)},
        {"velocity_exc", t.velocity_exc ? to_string(*t.velocity_exc) : "none"},
        {"velocity_inh", to_string(t.velocity_inh)},
        {"tau_m", c.hw.run.neuron.tau_m},
        {"i_bg", c.hw.run.neuron.i_bg},
        {"t_ref", c.hw.run.neuron.t_ref},
        {"dt", c.hw.run.dt},
        {"t_end", c.hw.run.t_end},
        {"jitter", c.hw.run.jitter},
        {"noise_sigma", c.hw.run.noise_sigma},
        {"cue_duration", c.hw.cue.duration},
        {"cue_current", c.hw.cue.current}}},
      {"experiment",
       {{"dt", c.dt},
        {"init_current", c.init_current},
        {"init_duration", c.init_duration},
        {"recurrent_scale", c.recurrent_scale},
        {"noise_sigma", c.noise_sigma},
        {"initial_spread", c.initial_spread},
        {"seed", c.seed},
        {"pairs", c.pairs},
        {"preset", preset_name(c.trajectory.preset)},
        {"duration", c.trajectory.duration},
        {"lead_in", c.trajectory.lead_in},
        {"v_min", c.trajectory.v_min},
        {"v_max", c.trajectory.v_max},
        {"dwell_min", c.trajectory.dwell_min},
        {"dwell_max", c.trajectory.dwell_max},
        {"limited_margin", c.trajectory.limited_margin},
        {"trajectory_seed", c.trajectory.seed}}},
  };
}

ExperimentConfig config_from_json(const json &j) {
  if (!j.is_object())
    throw std::invalid_argument("config must be a table");
  static const std::set<std::string> sections{"geometry", "gains",    "neuron",    "synapse",
                                              "boundary", "hw",       "experiment"};
  for (const auto &[k, v] : j.items())
    if (!sections.count(k))
      throw std::invalid_argument("unknown config section [" + k + "]");

  ExperimentConfig c = default_experiment_config();
  {
    Section s(j, "geometry");
    s.get("n", c.n);
  }
  {
    Section s(j, "gains");
    s.get("g_inh", c.gains.g_inh);
    s.get("g_cos", c.gains.g_cos);
    s.get("g_sin", c.gains.g_sin);
  }
  {
    Section s(j, "neuron");
    s.get("tau_m", c.neuron.tau_m);
    s.get("v_th", c.neuron.v_th);
    s.get("v_reset", c.neuron.v_reset);
    s.get("t_ref", c.neuron.t_ref);
    s.get("i_bg", c.neuron.i_bg);
  }
  {
    Section s(j, "synapse");
    s.get("tau_syn", c.synapse.tau_syn);
    s.get("spike_increment", c.synapse.spike_increment);
  }
  {
    Section s(j, "boundary");
    s.get("theta_0", c.boundary.theta_0);
    s.get("theta_l", c.boundary.theta_l);
    s.get("ramp_width", c.boundary.ramp_width);
    s.get("oob_inhibition", c.boundary.oob_inhibition);
  }
  {
    Section s(j, "hw");
    auto &t = c.hw.topology;
    s.get("n_pops", t.n_pops);
    s.get("pop_size", t.pop_size);
    s.get("fan_in_limit", t.fan_in_limit);
    s.get("unit_weight", t.unit_weight);
    if (const json *cls = s.sub("classes")) {
      if (!cls->is_object())
        throw std::invalid_argument("[hw] classes must be a table");
      for (const auto &[name, v] : cls->items()) {
        auto &p = t.classes[static_cast<std::size_t>(synapse_class_from_string(name))];
        Section cs(*cls, name);
        cs.get("efficacy", p.efficacy);
        cs.get("tau", p.tau);
      }
    }
    std::string ring_exc = to_string(t.ring_exc), ring_inh = to_string(t.ring_inh),
                vel_exc = t.velocity_exc ? to_string(*t.velocity_exc) : "none", vel_inh = to_string(t.velocity_inh);
    s.get("ring_exc", ring_exc);
    s.get("ring_inh", ring_inh);
    s.get("velocity_exc", vel_exc);
    s.get("velocity_inh", vel_inh);
    t.ring_exc = synapse_class_from_string(ring_exc);
    t.ring_inh = synapse_class_from_string(ring_inh);
    if (vel_exc == "none")
      t.velocity_exc.reset();
    else
      t.velocity_exc = synapse_class_from_string(vel_exc);
    t.velocity_inh = synapse_class_from_string(vel_inh);
    s.get("tau_m", c.hw.run.neuron.tau_m);
    s.get("i_bg", c.hw.run.neuron.i_bg);
    s.get("t_ref", c.hw.run.neuron.t_ref);
    s.get("dt", c.hw.run.dt);
    s.get("t_end", c.hw.run.t_end);
    s.get("jitter", c.hw.run.jitter);
    s.get("noise_sigma", c.hw.run.noise_sigma);
    s.get("cue_duration", c.hw.cue.duration);
    s.get("cue_current", c.hw.cue.current);
  }
  {
    Section s(j, "experiment");
    s.get("dt", c.dt);
    s.get("init_current", c.init_current);
    s.get("init_duration", c.init_duration);
    s.get("recurrent_scale", c.recurrent_scale);
    s.get("noise_sigma", c.noise_sigma);
    s.get("initial_spread", c.initial_spread);
    s.get("seed", c.seed);
    s.get("pairs", c.pairs);
    std::string preset = preset_name(c.trajectory.preset);
    s.get("preset", preset);
    c.trajectory.preset = preset_from_string(preset);
    s.get("duration", c.trajectory.duration);
    s.get("lead_in", c.trajectory.lead_in);
    s.get("v_min", c.trajectory.v_min);
    s.get("v_max", c.trajectory.v_max);
    s.get("dwell_min", c.trajectory.dwell_min);
    s.get("dwell_max", c.trajectory.dwell_max);
    s.get("limited_margin", c.trajectory.limited_margin);
    s.get("trajectory_seed", c.trajectory.seed);
  }
  // The trajectory limits follow the joint limits.
  c.trajectory.theta_0 = c.boundary.theta_0;
  c.trajectory.theta_l = c.boundary.theta_l;
  c.hw.topology.validate();
  return c;
}

ExperimentConfig parse_config_toml(const std::string &text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error &e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw std::invalid_argument(msg.str());
  }
  return config_from_json(toml_to_json(tbl));
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(buf.str());
    } catch (const json::parse_error &e) {
      throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    // A report echo carries the config under "config".
    return config_from_json(j.contains("config") ? j.at("config") : j);
  }
  return parse_config_toml(buf.str());
}

BoundaryConfig make_boundary(const BoundarySettings &b) {
  return make_boundary(b.theta_0, b.theta_l, b.ramp_width, b.oob_inhibition);
}

SimConfig make_sim_config(const ExperimentConfig &c, bool bounded) {
  SimConfig s = make_config(c.n, c.gains,
                            bounded ? std::optional<BoundaryConfig>(make_boundary(c.boundary))
                                    : std::nullopt);
  s.neuron = c.neuron;
  s.synapse = c.synapse;
  s.dt = c.dt;
  s.init_current = c.init_current;
  s.init_duration = c.init_duration;
  s.recurrent_scale = c.recurrent_scale;
  s.noise_sigma = c.noise_sigma;
  s.initial_spread = c.initial_spread;
  s.seed = c.seed;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Statistics

SignedRankTest wilcoxon_signed_rank(const std::vector<double> &diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (!std::isfinite(x))
      throw std::invalid_argument("signed-rank test needs finite differences");
    if (x != 0.0)
      d.push_back(x);
  }
  SignedRankTest t;
  t.n = d.size();
  if (d.empty())
    return t;
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(d.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      rank[order[k]] = avg;
    const double ties = static_cast<double>(j - i + 1);
    tie_term += ties * ties * ties - ties;
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    (d[i] > 0.0 ? t.w_plus : t.w_minus) += rank[i];
  const double n = static_cast<double>(t.n);
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0)
    return t;
  // Continuity-corrected normal approximation.
  const double diff = t.w_plus - mean;
  const double corrected = std::max(std::abs(diff) - 0.5, 0.0);
  t.z = (diff < 0.0 ? -corrected : corrected) / std::sqrt(var);
  t.p_two_sided = std::min(1.0, std::erfc(std::abs(t.z) / std::sqrt(2.0)));
  return t;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

ModelRun run_model(const ExperimentConfig &cfg, ModelKind model, const Trajectory &traj) {
  SimConfig sim = make_sim_config(cfg, model == ModelKind::bounded);
  sim.init_angle = wrap_angle(traj.initial_angle());
  ModelRun r;
  r.model = model;
  r.raster = run(sim, traj.velocity_profile(), traj.duration()).raster;
  r.trace = decode_trace(r.raster, sim.geometry, kPvaStep, kPvaWindow);
  r.error = tracking_error(r.trace, traj.truth(), 1.0);
  return r;
}

Comparison compare(const ModelRun &bounded, const ModelRun &unbounded) {
  Comparison c;
  c.bounded_mean_deg = bounded.error.mean_deg;
  c.unbounded_mean_deg = unbounded.error.mean_deg;
  const auto &wb = bounded.error.per_window;
  const auto &wu = unbounded.error.per_window;
  for (std::size_t k = 0; k < std::min(wb.size(), wu.size()); ++k)
    if (wb[k] && wu[k])
      c.window_differences.push_back(*wb[k] - *wu[k]);
  c.test = wilcoxon_signed_rank(c.window_differences);
  return c;
}

json windows_json(const std::vector<std::optional<double>> &w) {
  json out = json::array();
  for (const auto &x : w)
    out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

json test_json(const SignedRankTest &t) {
  return {{"n", t.n}, {"w_plus", t.w_plus}, {"w_minus", t.w_minus}, {"z", t.z},
          {"p_two_sided", t.p_two_sided}};
}

double mean_of(const std::vector<double> &xs) {
  double s = 0.0;
  for (double x : xs)
    s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double> &xs) {
  if (xs.size() < 2)
    return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs)
    ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

Report run_tracking_experiment(const ExperimentSpec &spec) {
  if (spec.model == ModelKind::hw)
    throw std::invalid_argument("tracking experiments need a continuous model");
  if (spec.trajectory.samples.size() < 2)
    throw std::invalid_argument("tracking experiments need a trajectory with samples");
  Report rep;
  rep.name = spec.name;
  rep.seed = spec.seed;
  ExperimentConfig cfg = spec.config;
  cfg.seed = spec.seed;
  rep.config = to_json(cfg);
  try {
    rep.runs.push_back(run_model(cfg, spec.model, spec.trajectory));
    if (spec.compare) {
      const ModelKind other =
          spec.model == ModelKind::bounded ? ModelKind::unbounded : ModelKind::bounded;
      rep.runs.push_back(run_model(cfg, other, spec.trajectory));
      const auto &b = rep.runs[spec.model == ModelKind::bounded ? 0 : 1];
      const auto &u = rep.runs[spec.model == ModelKind::bounded ? 1 : 0];
      rep.comparison = compare(b, u);
    }
  } catch (const NumericalError &e) {
    rep.failure = std::string(e.what()) + " (seed " + std::to_string(spec.seed) + ")";
  }
  return rep;
}

json to_json(const Report &r) {
  json runs = json::array();
  for (const auto &m : r.runs)
    runs.push_back({{"model", to_string(m.model)},
                    {"mean_error_deg", m.error.mean_deg},
                    {"std_error_deg", m.error.std_deg},
                    {"samples", m.error.samples},
                    {"window_s", 1.0},
                    {"per_window_deg", windows_json(m.error.per_window)},
                    {"spikes", m.raster.events.size()}});
  json out{{"name", r.name},
           {"version", kVersion},
           {"seed", r.seed},
           {"runs", runs},
           {"config", r.config}};
  if (r.comparison)
    out["comparison"] = {{"bounded_mean_deg", r.comparison->bounded_mean_deg},
                         {"unbounded_mean_deg", r.comparison->unbounded_mean_deg},
                         {"window_differences_deg", r.comparison->window_differences},
                         {"signed_rank", test_json(r.comparison->test)}};
  if (!r.failure.empty())
    out["failure"] = r.failure;
  return out;
}

PairedSummary paired_tracking(const ExperimentConfig &cfg) {
  if (cfg.pairs == 0)
    throw std::invalid_argument("pairs must be positive");
  PairedSummary s;
  s.pairs = parallel_map<PairResult>(cfg.pairs, [&](std::size_t k) {
    PresetParams p = cfg.trajectory;
    p.seed = cfg.trajectory.seed + k;
    const Trajectory traj = make_preset(p);
    const auto b = run_model(cfg, ModelKind::bounded, traj);
    const auto u = run_model(cfg, ModelKind::unbounded, traj);
    PairResult r;
    r.seed = p.seed;
    r.bounded_mean_deg = b.error.mean_deg;
    r.unbounded_mean_deg = u.error.mean_deg;
    const auto c = compare(b, u);
    if (c.test.n > 0)
      r.window_p_value = c.test.p_two_sided;
    return r;
  });
  std::vector<double> bs, us, diffs;
  for (const auto &p : s.pairs) {
    bs.push_back(p.bounded_mean_deg);
    us.push_back(p.unbounded_mean_deg);
    diffs.push_back(p.bounded_mean_deg - p.unbounded_mean_deg);
    s.bounded_wins += p.bounded_mean_deg < p.unbounded_mean_deg;
  }
  s.bounded_mean_deg = mean_of(bs);
  s.unbounded_mean_deg = mean_of(us);
  s.bounded_std_deg = std_of(bs);
  s.unbounded_std_deg = std_of(us);
  s.test = wilcoxon_signed_rank(diffs);
  return s;
}

json to_json(const PairedSummary &s) {
  json pairs = json::array();
  for (const auto &p : s.pairs)
    pairs.push_back({{"trajectory_seed", p.seed},
                     {"bounded_mean_deg", p.bounded_mean_deg},
                     {"unbounded_mean_deg", p.unbounded_mean_deg},
                     {"window_p_value", p.window_p_value ? json(*p.window_p_value) : json()}});
  return {{"pairs", pairs},
          {"bounded_wins", s.bounded_wins},
          {"bounded_mean_deg", s.bounded_mean_deg},
          {"bounded_std_deg", s.bounded_std_deg},
          {"unbounded_mean_deg", s.unbounded_mean_deg},
          {"unbounded_std_deg", s.unbounded_std_deg},
          {"signed_rank", test_json(s.test)}};
}

// ---------------------------------------------------------------------------
// CSV and JSON helpers

void write_raster_csv(std::ostream &out, const SpikeRaster &raster) {
  out << "time_s,neuron\n";
  out.precision(10);
  for (const auto &e : raster.events)
    out << e.time << ',' << e.neuron << '\n';
}

void write_trace_csv(std::ostream &out, const DecodedTrace &trace) {
  out << "time_s,angle_rad,valid\n";
  out.precision(10);
  for (const auto &s : trace.samples)
    out << s.time << ',' << s.angle << ',' << (s.valid ? 1 : 0) << '\n';
}

VelocityProfile read_velocity_csv(std::istream &in) {
  std::string line;
  std::getline(in, line);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
    line.pop_back();
  if (line != "time_s,velocity_rad_s")
    throw std::invalid_argument("expected header 'time_s,velocity_rad_s'");
  std::vector<VelocitySample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r")
      continue;
    std::stringstream ss(line);
    std::string a, b, extra;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || std::getline(ss, extra, ','))
      throw std::invalid_argument("row " + std::to_string(row) + ": expected 2 fields");
    double t = 0.0, v = 0.0;
    try {
      std::size_t ua = 0, ub = 0;
      t = std::stod(a, &ua);
      v = std::stod(b, &ub);
      auto rest_blank = [](const std::string &s, std::size_t from) {
        return s.find_first_not_of(" \r", from) == std::string::npos;
      };
      if (!rest_blank(a, ua) || !rest_blank(b, ub))
        throw std::invalid_argument("trailing characters");
    } catch (const std::exception &) {
      throw std::invalid_argument("row " + std::to_string(row) + ": malformed value");
    }
    samples.push_back({t, v});
  }
  return VelocityProfile(std::move(samples));
}

json to_json(const LinearFit &f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"slope_stderr", f.slope_stderr}};
}

json to_json(const CalibrationResult &r) {
  json probes = json::array();
  for (const auto &p : r.diagnostics)
    probes.push_back({{"commanded", p.commanded},
                      {"measured", p.measured},
                      {"stderr", p.stderr_},
                      {"r_squared", p.r_squared}});
  json out{{"gains", {{"g_inh", r.gains.g_inh}, {"g_cos", r.gains.g_cos}, {"g_sin", r.gains.g_sin}}},
           {"i_bg", r.i_bg},
           {"init_current", r.init_current},
           {"recurrent_scale", r.recurrent_scale},
           {"loss", r.loss},
           {"kappa", r.velocity_gain_kappa},
           {"kappa_stderr", r.kappa_stderr},
           {"probes", probes},
           {"grid_index", r.grid_index},
           {"iterations", r.iterations},
           {"converged", r.converged}};
  if (!r.warning.empty())
    out["warning"] = r.warning;
  return out;
}

} // namespace ringsim
