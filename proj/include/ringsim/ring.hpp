#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace ringsim {

/// Dense row-major matrix. Rows index the presynaptic neuron, columns the
/// postsynaptic one, so entry (i, j) is the weight of the synapse i -> j.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double> &data() const { return data_; }

  bool operator==(const Matrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct RingGeometry {
  std::size_t n = 0;
  std::vector<double> preferred_angles;

  /// Angular spacing between neighbouring neurons.
  double spacing() const;
  /// Index of the neuron whose preferred angle is closest to `angle`
  /// (ties resolve to the lower index).
  std::size_t nearest_index(double angle) const;
};

struct GainSet {
  double g_inh = -16.46;
  double g_cos = 15.86;
  double g_sin = 0.13;

  /// Throws std::invalid_argument unless g_inh < 0, g_cos > 0, g_sin > 0.
  void validate() const;
};

struct BoundaryConfig {
  double theta_0 = 0.0;
  double theta_l = 0.0;
  double theta_m_star = 0.0;
  double ramp_width = 0.0;
  /// Peak extra inhibition applied at theta_m_star; tapers to 0 at the limits.
  double oob_inhibition = 0.0;

  /// Length of the out-of-bound arc, 2π − (theta_l − theta_0).
  double out_of_bound_arc() const;
  bool in_range(double theta) const;
};

/// Builds a validated boundary description. Defaults follow the usual
/// choices: ramp of π/12 and peak out-of-bound inhibition |g_inh|/2.
BoundaryConfig make_boundary(double theta_0, double theta_l,
                             std::optional<double> ramp_width = std::nullopt,
                             std::optional<double> oob_inhibition = std::nullopt);

struct WeightSet {
  Matrix w_sym;
  Matrix asym_kernel;
  std::vector<double> atten_plus;
  std::vector<double> atten_minus;
  /// Extra inhibitory weight from each presynaptic neuron onto every
  /// neuron; non-zero only on the out-of-bound arc.
  std::vector<double> oob_inhibition;
  std::optional<BoundaryConfig> boundary;

  std::size_t size() const { return atten_plus.size(); }
  bool bounded() const { return boundary.has_value(); }
};

struct Attenuation {
  std::vector<double> plus;
  std::vector<double> minus;
};

RingGeometry build_geometry(std::size_t n);

Matrix symmetric_weights(const RingGeometry &geom, const GainSet &gains);
Matrix asymmetric_kernel(const RingGeometry &geom);

Attenuation build_attenuation(const RingGeometry &geom, const std::optional<BoundaryConfig> &bc);
double attenuation_plus(const BoundaryConfig &bc, double theta);
double attenuation_minus(const BoundaryConfig &bc, double theta);

/// Per-neuron extra inhibition for the out-of-bound arc (zeros if unbounded).
std::vector<double> out_of_bound_profile(const RingGeometry &geom,
                                         const std::optional<BoundaryConfig> &bc);

WeightSet build_weights(const RingGeometry &geom, const GainSet &gains,
                        const std::optional<BoundaryConfig> &bc = std::nullopt);

/// v·g_sin·a±[i]·kernel(i, j), attenuated by the presynaptic angle; the
/// zero matrix for v = 0.
Matrix effective_asym_weights(const WeightSet &ws, const GainSet &gains, double v);

/// Full recurrent matrix at velocity v: w_sym minus the out-of-bound bias of
/// each presynaptic row plus the effective asymmetric term.
Matrix recurrent_matrix(const WeightSet &ws, const GainSet &gains, double v);

} // namespace ringsim
