#include "ringsim/decoder.hpp"

#include "ringsim/angles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ringsim {

namespace {

// Spike counts per neuron in [t0, t1). Events are time-ordered.
std::vector<double> window_counts(const SpikeRaster &raster, std::size_t n, double t0, double t1) {
  std::vector<double> counts(n, 0.0);
  const auto &ev = raster.events;
  auto lo = std::lower_bound(ev.begin(), ev.end(), t0,
                             [](const SpikeEvent &e, double t) { return e.time < t; });
  for (auto it = lo; it != ev.end() && it->time < t1; ++it)
    if (it->neuron < n)
      counts[it->neuron] += 1.0;
  return counts;
}

Pva pva_from_counts(const std::vector<double> &counts, const RingGeometry &geom) {
  double x = 0.0, y = 0.0, total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0.0)
      continue;
    x += counts[i] * std::cos(geom.preferred_angles[i]);
    y += counts[i] * std::sin(geom.preferred_angles[i]);
    total += counts[i];
  }
  if (total == 0.0 || std::hypot(x, y) < 1e-9 * total)
    return {};
  return {wrap_angle(std::atan2(y, x)), true};
}

Pva argmax_from_counts(const std::vector<double> &counts, const RingGeometry &geom) {
  auto it = std::max_element(counts.begin(), counts.end());
  if (it == counts.end() || *it == 0.0)
    return {};
  return {geom.preferred_angles[static_cast<std::size_t>(it - counts.begin())], true};
}

} // namespace

Pva decode_pva(const SpikeRaster &raster, const RingGeometry &geom, double t, double window) {
  if (!(window > 0.0))
    throw std::invalid_argument("decode window must be positive");
  return pva_from_counts(window_counts(raster, geom.n, t - window, t), geom);
}

Pva decode_argmax(const SpikeRaster &raster, const RingGeometry &geom, double t, double window) {
  if (!(window > 0.0))
    throw std::invalid_argument("decode window must be positive");
  return argmax_from_counts(window_counts(raster, geom.n, t - window, t), geom);
}

DecodedTrace decode_trace(const SpikeRaster &raster, const RingGeometry &geom, double dt_out,
                          double window, DecodeMethod method) {
  if (!(dt_out > 0.0))
    throw std::invalid_argument("dt_out must be positive");
  if (!(window > 0.0))
    throw std::invalid_argument("decode window must be positive");
  auto decode = [&](const std::vector<double> &counts) {
    return method == DecodeMethod::pva ? pva_from_counts(counts, geom)
                                       : argmax_from_counts(counts, geom);
  };

  DecodedTrace trace;
  const auto count = static_cast<std::size_t>(std::floor(raster.duration / dt_out + 1e-9));
  trace.samples.reserve(count);
  const bool pooled = window >= raster.duration;
  Pva pooled_estimate;
  if (pooled)
    pooled_estimate = decode(window_counts(raster, geom.n, 0.0, raster.duration + 1.0));
  for (std::size_t k = 1; k <= count; ++k) {
    const double t = static_cast<double>(k) * dt_out;
    const Pva p = pooled ? pooled_estimate : decode(window_counts(raster, geom.n, t - window, t));
    trace.samples.push_back({t, p.valid ? p.angle : 0.0, p.valid});
  }
  return trace;
}

std::vector<TimedAngle> unwrap(const DecodedTrace &trace) {
  std::vector<TimedAngle> out;
  for (const auto &s : trace.samples) {
    if (!s.valid)
      continue;
    if (out.empty())
      out.push_back({s.time, s.angle});
    else
      out.push_back({s.time, out.back().angle + wrap_diff(s.angle, out.back().angle)});
  }
  if (out.empty())
    throw std::invalid_argument("cannot unwrap a trace with no valid samples");
  return out;
}

LinearFit fit_bump_velocity(const std::vector<TimedAngle> &unwrapped, double t0, double t1) {
  std::vector<WeightedPoint> pts;
  for (const auto &s : unwrapped)
    if (s.time >= t0 && s.time <= t1)
      pts.push_back({s.time, s.angle, 1.0});
  if (pts.size() < 3)
    throw std::invalid_argument("fit_bump_velocity needs at least 3 samples in the window");

  // Ordinary least squares; stderr from the residual variance.
  const double m = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto &p : pts) {
    sx += p.x;
    sy += p.y;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto &p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (const auto &p : pts) {
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    sse += r * r;
  }
  fit.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  fit.slope_stderr = sxx > 0 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;
  return fit;
}

LinearFit weighted_linear_fit(const std::vector<WeightedPoint> &points) {
  if (points.size() < 3)
    throw std::invalid_argument("weighted_linear_fit needs at least 3 points");
  double sw = 0, swx = 0, swy = 0;
  for (const auto &p : points) {
    if (!(p.sem > 0.0))
      throw std::invalid_argument("weighted_linear_fit needs positive standard errors");
    const double w = 1.0 / (p.sem * p.sem);
    sw += w;
    swx += w * p.x;
    swy += w * p.y;
  }
  const double mx = swx / sw, my = swy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto &p : points) {
    const double w = 1.0 / (p.sem * p.sem);
    sxx += w * (p.x - mx) * (p.x - mx);
    sxy += w * (p.x - mx) * (p.y - my);
    syy += w * (p.y - my) * (p.y - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (const auto &p : points) {
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    sse += r * r / (p.sem * p.sem);
  }
  fit.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  fit.slope_stderr = sxx > 0 ? std::sqrt(1.0 / sxx) : 0.0;
  return fit;
}

std::vector<std::optional<double>> drift_windows(const DecodedTrace &trace, double target,
                                                 double window, double t_start, double t_end) {
  if (!(window > 0.0))
    throw std::invalid_argument("drift window must be positive");
  if (!(t_end > t_start))
    throw std::invalid_argument("drift_windows needs t_end > t_start");
  const auto count = static_cast<std::size_t>(std::ceil((t_end - t_start) / window - 1e-9));
  std::vector<double> sum(count, 0.0);
  std::vector<std::size_t> hits(count, 0);
  for (const auto &s : trace.samples) {
    if (!s.valid || s.time < t_start || s.time >= t_end)
      continue;
    const auto w = std::min(count - 1, static_cast<std::size_t>((s.time - t_start) / window));
    sum[w] += std::abs(to_degrees(wrap_diff(s.angle, target)));
    hits[w] += 1;
  }
  std::vector<std::optional<double>> out(count);
  for (std::size_t w = 0; w < count; ++w)
    if (hits[w] > 0)
      out[w] = sum[w] / static_cast<double>(hits[w]);
  return out;
}

TrackingError tracking_error(const DecodedTrace &trace, const std::vector<TimedAngle> &truth,
                             double window) {
  if (truth.empty())
    throw std::invalid_argument("tracking_error needs a non-empty truth");
  auto truth_at = [&](double t) {
    auto it = std::lower_bound(truth.begin(), truth.end(), t,
                               [](const TimedAngle &a, double x) { return a.time < x; });
    if (it == truth.begin())
      return it->angle;
    if (it == truth.end())
      return truth.back().angle;
    const auto &b = *it;
    const auto &a = *std::prev(it);
    const double f = (t - a.time) / (b.time - a.time);
    return a.angle + f * (b.angle - a.angle);
  };

  const double t_lo = truth.front().time, t_hi = truth.back().time;
  std::vector<double> errs;
  std::vector<double> times;
  for (const auto &s : trace.samples) {
    if (!s.valid || s.time < t_lo || s.time > t_hi)
      continue;
    errs.push_back(std::abs(to_degrees(wrap_diff(s.angle, truth_at(s.time)))));
    times.push_back(s.time);
  }
  if (errs.empty())
    throw std::invalid_argument("trace and truth do not overlap");

  TrackingError out;
  out.samples = errs.size();
  double sum = 0;
  for (double e : errs)
    sum += e;
  out.mean_deg = sum / static_cast<double>(errs.size());
  double var = 0;
  for (double e : errs)
    var += (e - out.mean_deg) * (e - out.mean_deg);
  out.std_deg = std::sqrt(var / static_cast<double>(errs.size()));

  const double origin = trace.samples.front().time;
  const double span = trace.samples.back().time - origin;
  const auto nwin = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / window - 1e-9)));
  std::vector<double> wsum(nwin, 0.0);
  std::vector<std::size_t> whits(nwin, 0);
  for (std::size_t k = 0; k < errs.size(); ++k) {
    const auto w = std::min(nwin - 1, static_cast<std::size_t>((times[k] - origin) / window));
    wsum[w] += errs[k];
    whits[w] += 1;
  }
  out.per_window.resize(nwin);
  for (std::size_t w = 0; w < nwin; ++w)
    if (whits[w] > 0)
      out.per_window[w] = wsum[w] / static_cast<double>(whits[w]);
  return out;
}

} // namespace ringsim
