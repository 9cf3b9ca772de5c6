#include "ringsim/ring.hpp"

#include "ringsim/angles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ringsim {

namespace {

// Angle of index offset d on an n-ring. Weight entries are computed from the
// offset alone so that circulant matrices are bitwise circulant.
double offset_angle(std::size_t d, std::size_t n) {
  return kTwoPi * static_cast<double>(d) / static_cast<double>(n);
}

} // namespace

double RingGeometry::spacing() const { return kTwoPi / static_cast<double>(n); }

std::size_t RingGeometry::nearest_index(double angle) const {
  const double a = wrap_angle(angle);
  std::size_t best = 0;
  double best_dist = std::abs(wrap_diff(a, preferred_angles[0]));
  for (std::size_t i = 1; i < n; ++i) {
    const double d = std::abs(wrap_diff(a, preferred_angles[i]));
    if (d < best_dist - 1e-12) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

void GainSet::validate() const {
  if (!(g_inh < 0.0))
    throw std::invalid_argument("g_inh must be negative, got " + std::to_string(g_inh));
  if (!(g_cos > 0.0))
    throw std::invalid_argument("g_cos must be positive, got " + std::to_string(g_cos));
  if (!(g_sin > 0.0))
    throw std::invalid_argument("g_sin must be positive, got " + std::to_string(g_sin));
}

double BoundaryConfig::out_of_bound_arc() const { return kTwoPi - (theta_l - theta_0); }

bool BoundaryConfig::in_range(double theta) const {
  const double t = wrap_angle(theta);
  return t >= theta_0 && t <= theta_l;
}

BoundaryConfig make_boundary(double theta_0, double theta_l, std::optional<double> ramp_width,
                             std::optional<double> oob_inhibition) {
  if (!(theta_0 >= 0.0 && theta_0 < kTwoPi))
    throw std::invalid_argument("theta_0 must lie in [0, 2pi)");
  if (!(theta_l > theta_0 && theta_l < kTwoPi))
    throw std::invalid_argument("theta_l must lie in (theta_0, 2pi)");
  BoundaryConfig bc;
  bc.theta_0 = theta_0;
  bc.theta_l = theta_l;
  bc.theta_m_star = wrap_angle((theta_0 + theta_l) / 2.0 + std::numbers::pi);
  bc.ramp_width = ramp_width.value_or(std::numbers::pi / 12.0);
  bc.oob_inhibition = oob_inhibition.value_or(GainSet{}.g_inh * -0.5);
  const double max_ramp = bc.out_of_bound_arc() / 2.0;
  if (!(bc.ramp_width > 0.0 && bc.ramp_width <= max_ramp))
    throw std::invalid_argument("ramp_width must lie in (0, " + std::to_string(max_ramp) + "]");
  if (!(bc.oob_inhibition >= 0.0))
    throw std::invalid_argument("oob_inhibition must be non-negative");
  return bc;
}

RingGeometry build_geometry(std::size_t n) {
  if (n < 4)
    throw std::invalid_argument("ring needs at least 4 neurons, got " + std::to_string(n));
  RingGeometry g;
  g.n = n;
  g.preferred_angles.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    g.preferred_angles[i] = offset_angle(i, n);
  return g;
}

Matrix symmetric_weights(const RingGeometry &geom, const GainSet &gains) {
  const std::size_t n = geom.n;
  std::vector<double> by_offset(n);
  for (std::size_t d = 0; d < n; ++d)
    by_offset[d] = gains.g_inh + gains.g_cos * std::cos(offset_angle(d, n));
  // cos is even, so make the offset table exactly symmetric too.
  for (std::size_t d = 1; d < n; ++d)
    by_offset[n - d] = by_offset[d];

  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      w(i, j) = by_offset[(j + n - i) % n];
  return w;
}

Matrix asymmetric_kernel(const RingGeometry &geom) {
  const std::size_t n = geom.n;
  std::vector<double> by_offset(n, 0.0);
  for (std::size_t d = 1; d <= n / 2; ++d) {
    double s = std::sin(offset_angle(d, n));
    if (2 * d == n)
      s = 0.0;
    by_offset[d] = s;
    by_offset[n - d] = -s;
  }
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      k(i, j) = by_offset[(j + n - i) % n];
  return k;
}

double attenuation_plus(const BoundaryConfig &bc, double theta) {
  const double t = wrap_angle(theta);
  if (!bc.in_range(t))
    return 0.0;
  return std::clamp((bc.theta_l - t) / bc.ramp_width, 0.0, 1.0);
}

double attenuation_minus(const BoundaryConfig &bc, double theta) {
  const double t = wrap_angle(theta);
  if (!bc.in_range(t))
    return 0.0;
  return std::clamp((t - bc.theta_0) / bc.ramp_width, 0.0, 1.0);
}

Attenuation build_attenuation(const RingGeometry &geom, const std::optional<BoundaryConfig> &bc) {
  Attenuation a{std::vector<double>(geom.n, 1.0), std::vector<double>(geom.n, 1.0)};
  if (!bc)
    return a;
  for (std::size_t i = 0; i < geom.n; ++i) {
    a.plus[i] = attenuation_plus(*bc, geom.preferred_angles[i]);
    a.minus[i] = attenuation_minus(*bc, geom.preferred_angles[i]);
  }
  return a;
}

std::vector<double> out_of_bound_profile(const RingGeometry &geom,
                                         const std::optional<BoundaryConfig> &bc) {
  std::vector<double> out(geom.n, 0.0);
  if (!bc)
    return out;
  const double half_arc = bc->out_of_bound_arc() / 2.0;
  for (std::size_t i = 0; i < geom.n; ++i) {
    const double t = geom.preferred_angles[i];
    if (bc->in_range(t))
      continue;
    const double dist = std::abs(wrap_diff(t, bc->theta_m_star));
    out[i] = bc->oob_inhibition * std::clamp(1.0 - dist / half_arc, 0.0, 1.0);
  }
  return out;
}

WeightSet build_weights(const RingGeometry &geom, const GainSet &gains,
                        const std::optional<BoundaryConfig> &bc) {
  WeightSet ws;
  ws.w_sym = symmetric_weights(geom, gains);
  ws.asym_kernel = asymmetric_kernel(geom);
  auto att = build_attenuation(geom, bc);
  ws.atten_plus = std::move(att.plus);
  ws.atten_minus = std::move(att.minus);
  ws.oob_inhibition = out_of_bound_profile(geom, bc);
  ws.boundary = bc;
  return ws;
}

Matrix effective_asym_weights(const WeightSet &ws, const GainSet &gains, double v) {
  const std::size_t n = ws.size();
  Matrix out(n, n);
  if (v == 0.0)
    return out;
  const auto &att = v > 0.0 ? ws.atten_plus : ws.atten_minus;
  const double scale = v * gains.g_sin;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = scale * att[i] * ws.asym_kernel(i, j);
  return out;
}

Matrix recurrent_matrix(const WeightSet &ws, const GainSet &gains, double v) {
  Matrix out = effective_asym_weights(ws, gains, v);
  const std::size_t n = ws.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) += ws.w_sym(i, j) - ws.oob_inhibition[i];
  return out;
}

} // namespace ringsim
