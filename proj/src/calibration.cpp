#include "ringsim/calibration.hpp"

#include "ringsim/angles.hpp"
#include "ringsim/decoder.hpp"
#include "ringsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ringsim {

GainSet calibrated_gains() {
  GainSet g;
  g.g_sin = kCalibratedGsin;
  return g;
}

void CalibrationObjective::validate() const {
  if (!(target_peak_rate > 0.0))
    throw std::invalid_argument("target_peak_rate must be positive");
  if (!(stationary_tolerance_deg > 0.0))
    throw std::invalid_argument("stationary_tolerance_deg must be positive");
  if (!(stationary_duration > 0.0))
    throw std::invalid_argument("stationary_duration must be positive");
  bool pos = false, neg = false;
  for (double v : velocity_set) {
    if (!std::isfinite(v) || v == 0.0)
      throw std::invalid_argument("probe velocities must be finite and nonzero");
    pos = pos || v > 0.0;
    neg = neg || v < 0.0;
  }
  if (!pos || !neg)
    throw std::invalid_argument("probe velocities must include both signs");
  const auto &w = loss_weights;
  if (!(w.rate >= 0.0 && w.stability >= 0.0 && w.velocity >= 0.0))
    throw std::invalid_argument("loss weights must be non-negative");
  if (w.rate + w.stability + w.velocity == 0.0)
    throw std::invalid_argument("loss weights must not all be zero");
  if (!(probe_duration > probe_fit_start && probe_fit_start >= 0.0))
    throw std::invalid_argument("probe fit window must lie inside the probe duration");
}

SimConfig apply_result(const SimConfig &base, const CalibrationResult &r) {
  SimConfig cfg = base;
  cfg.gains = r.gains;
  cfg.weights = build_weights(cfg.geometry, r.gains, base.weights.boundary);
  cfg.neuron.i_bg = r.i_bg;
  cfg.init_current = r.init_current;
  cfg.recurrent_scale = r.recurrent_scale;
  return cfg;
}

CalibrationResult result_from_config(const SimConfig &cfg) {
  CalibrationResult r;
  r.gains = cfg.gains;
  r.i_bg = cfg.neuron.i_bg;
  r.init_current = cfg.init_current;
  r.recurrent_scale = cfg.recurrent_scale;
  return r;
}

StationarityTerms stationarity_terms(const SimConfig &cfg, const CalibrationObjective &obj) {
  obj.validate();
  StationarityTerms out;
  const double t_end = obj.stationary_duration;
  SpikeRaster raster;
  try {
    raster = run(cfg, VelocityProfile::constant(0.0), t_end).raster;
  } catch (const NumericalError &) {
    out.blew_up = true;
    out.loss = kSentinelLoss;
    return out;
  }

  const auto trace = decode_trace(raster, cfg.geometry, kPvaStep, kPvaWindow);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto &s : trace.samples) {
    if (!s.valid)
      continue;
    sum += std::abs(to_degrees(wrap_diff(s.angle, cfg.init_angle)));
    ++count;
  }
  // Dead if nothing is decodable in the last fifth of the run.
  const double tail_start = t_end * 0.8;
  out.dead = std::none_of(trace.samples.begin(), trace.samples.end(), [&](const auto &s) {
    return s.valid && s.time > tail_start;
  });
  out.mean_error_deg = count > 0 ? sum / static_cast<double>(count) : 180.0;

  const double rate_from = std::min(cfg.init_duration + 0.1, 0.5 * t_end);
  const auto rates = mean_rate_profile(raster, rate_from, t_end, cfg.geometry.n);
  out.peak_rate_hz = rates.empty() ? 0.0 : *std::max_element(rates.begin(), rates.end());

  const auto &w = obj.loss_weights;
  const double rel = (out.peak_rate_hz - obj.target_peak_rate) / obj.target_peak_rate;
  out.loss = w.stability * out.mean_error_deg / obj.stationary_tolerance_deg + w.rate * rel * rel;
  if (out.dead)
    out.loss += kSentinelLoss;
  return out;
}

double stationarity_loss(const SimConfig &cfg, const CalibrationObjective &obj) {
  return stationarity_terms(cfg, obj).loss;
}

const char *to_string(GridParam p) {
  switch (p) {
  case GridParam::g_inh:
    return "g_inh";
  case GridParam::g_cos:
    return "g_cos";
  case GridParam::i_bg:
    return "i_bg";
  case GridParam::init_current:
    return "init_current";
  case GridParam::recurrent_scale:
    return "recurrent_scale";
  }
  return "?";
}

GridParam grid_param_from_string(const std::string &name) {
  for (auto p : {GridParam::g_inh, GridParam::g_cos, GridParam::i_bg, GridParam::init_current,
                 GridParam::recurrent_scale})
    if (name == to_string(p))
      return p;
  throw std::invalid_argument("unknown grid parameter '" + name + "'");
}

std::vector<double> ParamRange::values() const {
  if (steps == 0)
    throw std::invalid_argument(std::string("range for ") + to_string(param) + " has no steps");
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument(std::string("range for ") + to_string(param) + " is not finite");
  if (steps == 1)
    return {lo};
  std::vector<double> out(steps);
  for (std::size_t k = 0; k < steps; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
  return out;
}

std::size_t GridSpace::size() const {
  if (ranges.empty())
    return 0;
  std::size_t total = 1;
  for (const auto &r : ranges)
    total *= r.steps;
  return total;
}

GridSpace GridSpace::defaults(bool include_gains) {
  const GainSet pub;
  GridSpace s;
  if (include_gains) {
    s.ranges.push_back({GridParam::g_inh, pub.g_inh * 1.2, pub.g_inh * 0.8, 5});
    s.ranges.push_back({GridParam::g_cos, pub.g_cos * 0.8, pub.g_cos * 1.2, 5});
  }
  s.ranges.push_back({GridParam::i_bg, 2.75, 4.75, 5});
  s.ranges.push_back({GridParam::init_current, 1.0, 3.0, 5});
  return s;
}

namespace {

void set_param(CalibrationResult &r, GridParam p, double value) {
  switch (p) {
  case GridParam::g_inh:
    r.gains.g_inh = value;
    break;
  case GridParam::g_cos:
    r.gains.g_cos = value;
    break;
  case GridParam::i_bg:
    r.i_bg = value;
    break;
  case GridParam::init_current:
    r.init_current = value;
    break;
  case GridParam::recurrent_scale:
    r.recurrent_scale = value;
    break;
  }
}

} // namespace

std::vector<CalibrationResult> grid_search(const SimConfig &base, const GridSpace &space,
                                           const CalibrationObjective &obj) {
  obj.validate();
  if (space.ranges.empty())
    throw std::invalid_argument("grid space is empty");
  std::vector<std::vector<double>> axes;
  for (const auto &r : space.ranges)
    axes.push_back(r.values());
  const std::size_t total = space.size();
  if (total > space.budget) {
    std::ostringstream msg;
    msg << "grid has " << total << " points, over the budget of " << space.budget;
    throw std::invalid_argument(msg.str());
  }

  const CalibrationResult seed = result_from_config(base);
  auto results = parallel_map<CalibrationResult>(total, [&](std::size_t index) {
    CalibrationResult r = seed;
    r.grid_index = index;
    std::size_t rest = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      set_param(r, space.ranges[a].param, axes[a][rest % axes[a].size()]);
      rest /= axes[a].size();
    }
    try {
      r.gains.validate();
      r.loss = stationarity_loss(apply_result(base, r), obj);
    } catch (const std::invalid_argument &e) {
      r.loss = kSentinelLoss;
      r.warning = e.what();
    }
    return r;
  });
  std::stable_sort(results.begin(), results.end(),
                   [](const auto &a, const auto &b) { return a.loss < b.loss; });
  return results;
}

double velocity_loss(const SimConfig &cfg, const CalibrationObjective &obj,
                     std::vector<ProbeFit> *fits) {
  obj.validate();
  const auto &probes = obj.velocity_set;
  auto measured = parallel_map<ProbeFit>(probes.size(), [&](std::size_t k) {
    const double v = probes[k];
    const auto raster =
        run(cfg, VelocityProfile::step_at(cfg.init_duration, v), obj.probe_duration).raster;
    const auto trace = decode_trace(raster, cfg.geometry, kPvaStep, kPvaWindow);
    const auto fit = fit_bump_velocity(unwrap(trace), obj.probe_fit_start, obj.probe_duration);
    return ProbeFit{v, fit.slope, fit.slope_stderr, fit.r_squared};
  });
  double loss = 0.0;
  for (const auto &f : measured)
    loss += (f.measured - f.commanded) * (f.measured - f.commanded);
  if (fits)
    *fits = std::move(measured);
  return loss;
}

std::pair<double, double> fit_kappa(const std::vector<ProbeFit> &fits) {
  double svw = 0.0, svv = 0.0;
  for (const auto &f : fits) {
    svw += f.commanded * f.measured;
    svv += f.commanded * f.commanded;
  }
  if (svv == 0.0)
    throw std::invalid_argument("kappa needs at least one nonzero probe");
  const double kappa = svw / svv;
  if (fits.size() < 2)
    return {kappa, 0.0};
  double ss = 0.0;
  for (const auto &f : fits) {
    const double r = f.measured - kappa * f.commanded;
    ss += r * r;
  }
  const double sigma2 = ss / static_cast<double>(fits.size() - 1);
  return {kappa, std::sqrt(sigma2 / svv)};
}

CalibrationResult refine_gsin(const SimConfig &base, const CalibrationResult &start,
                              const CalibrationObjective &obj, const RefineOptions &opt) {
  obj.validate();
  const double w = obj.loss_weights.velocity > 0.0 ? obj.loss_weights.velocity : 1.0;
  auto loss_at = [&](double g_sin, std::vector<ProbeFit> *fits) {
    CalibrationResult r = start;
    r.gains.g_sin = g_sin;
    return w * velocity_loss(apply_result(base, r), obj, fits);
  };

  if (stationarity_terms(apply_result(base, start), obj).dead)
    throw std::invalid_argument("refine_gsin needs a configuration with a live bump");

  CalibrationResult best = start;
  double g = start.gains.g_sin;
  double loss = loss_at(g, &best.diagnostics);
  best.loss = loss;
  best.converged = false;

  std::size_t it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (loss < opt.loss_tolerance) {
      best.converged = true;
      break;
    }
    const double h = std::min(opt.fd_step, 0.5 * g);
    const double grad = (loss_at(g + h, nullptr) - loss_at(g - h, nullptr)) / (2.0 * h);
    if (grad == 0.0 || !std::isfinite(grad)) {
      best.converged = true;
      break;
    }
    // Newton step for a loss that vanishes at the optimum, then backtrack.
    double step = 2.0 * loss / (grad * grad) * grad;
    bool accepted = false;
    for (std::size_t b = 0; b <= opt.max_backtracks; ++b, step *= 0.5) {
      const double cand = g - step;
      if (!(cand > 0.0))
        continue;
      std::vector<ProbeFit> fits;
      const double cand_loss = loss_at(cand, &fits);
      if (cand_loss < loss) {
        g = cand;
        loss = cand_loss;
        best.gains.g_sin = cand;
        best.loss = cand_loss;
        best.diagnostics = std::move(fits);
        accepted = true;
        break;
      }
    }
    if (!accepted || std::abs(step) < opt.step_tolerance) {
      best.converged = true;
      ++it;
      break;
    }
  }
  best.iterations = it;
  if (!best.converged) {
    std::ostringstream msg;
    msg << "g_sin refinement stopped after " << opt.max_iterations
        << " iterations without converging";
    best.warning = msg.str();
  }
  std::tie(best.velocity_gain_kappa, best.kappa_stderr) = fit_kappa(best.diagnostics);
  return best;
}

double calibrate_i_bg(const SimConfig &cfg, const CalibrationObjective &obj, double target_rate,
                      double lo, double hi, std::size_t iterations) {
  if (!(target_rate > 0.0) || !(hi > lo))
    throw std::invalid_argument("calibrate_i_bg needs a positive target and lo < hi");
  auto peak = [&](double i_bg) {
    SimConfig c = cfg;
    c.neuron.i_bg = i_bg;
    const auto t = stationarity_terms(c, obj);
    return t.dead || t.blew_up ? 0.0 : t.peak_rate_hz;
  };
  if (peak(lo) > target_rate || peak(hi) < target_rate) {
    std::ostringstream msg;
    msg << "target rate " << target_rate << " Hz not bracketed by i_bg in [" << lo << ", " << hi
        << "]";
    throw std::runtime_error(msg.str());
  }
  for (std::size_t k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    (peak(mid) < target_rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double trajectory_mae(const SimConfig &cfg, const Trajectory &traj) {
  SimConfig c = cfg;
  c.init_angle = wrap_angle(traj.initial_angle());
  const auto raster = run(c, traj.velocity_profile(), traj.duration()).raster;
  const auto trace = decode_trace(raster, c.geometry, kPvaStep, kPvaWindow);
  return tracking_error(trace, traj.truth()).mean_deg;
}

std::vector<SweepRow> robustness_sweep(SweepParam param, const std::vector<double> &values,
                                       const CalibrationObjective &obj,
                                       const SweepSettings &settings) {
  if (values.empty())
    throw std::invalid_argument("sweep needs at least one value");
  obj.validate();
  const Trajectory traj = make_preset(settings.trajectory);

  return parallel_map<SweepRow>(values.size(), [&](std::size_t k) {
    SweepRow row;
    row.value = values[k];
    try {
      SimConfig cfg = settings.base;
      double target = obj.target_peak_rate;
      if (param == SweepParam::n_neurons) {
        if (!(row.value >= 4.0) || row.value != std::floor(row.value))
          throw std::invalid_argument("n_neurons values must be integers >= 4");
        const auto n = static_cast<std::size_t>(row.value);
        cfg.geometry = build_geometry(n);
        cfg.weights = build_weights(cfg.geometry, cfg.gains, settings.base.weights.boundary);
      } else {
        if (!(row.value > 0.0))
          throw std::invalid_argument("rate_scale values must be positive");
        target *= row.value;
      }
      // Tune the rate on a bump inside the valid range, away from the
      // out-of-bound inhibition.
      if (const auto &b = cfg.weights.boundary)
        cfg.init_angle = wrap_angle(0.5 * (b->theta_0 + b->theta_l));
      row.i_bg = calibrate_i_bg(cfg, obj, target);
      cfg.neuron.i_bg = row.i_bg;
      row.peak_rate_hz = stationarity_terms(cfg, obj).peak_rate_hz;
      row.mae_deg = trajectory_mae(cfg, traj);
    } catch (const std::exception &e) {
      row.error = e.what();
    }
    return row;
  });
}

} // namespace ringsim
