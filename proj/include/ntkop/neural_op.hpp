#pragma once

#include "ntkop/discretize.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ntkop {

/// Raised when an iterate leaves the admissible range (non-finite or any
/// entry above the overflow guard).
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kOverflowGuard = 1e8;

enum class Activation { tanh };

namespace activation {
inline double sigma(double z) { return std::tanh(z); }
inline double dsigma(double z)
{
  const double t = std::tanh(z);
  return 1.0 - t * t;
}
inline double d2sigma(double z)
{
  const double t = std::tanh(z);
  return -2.0 * t * (1.0 - t * t);
}
/// Common bound on |sigma'| and |sigma''| for tanh.
inline constexpr double c_sigma = 1.0;
} // namespace activation

struct ArchConfig {
  int width = 50; // M, must be even
  int d_k = 1;
  int d_y = 1;
  int d_b = 1;
  double tau = 2.0;
  Activation activation = Activation::tanh;
  double kernel_bandwidth = 0.2;
  /// (s_A, s_u, s_c); s_A d_k + s_u d_y + s_c d_b <= 1 keeps ||J(u)(x)||_1 <= 1.
  std::array<double, 3> feature_scales{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  int d_tilde() const { return d_k + d_y + d_b; }
  /// kappa^2 = 4 + tau^2 C_sigma^2, the uniform bound on the NTK.
  double kappa_sq() const
  {
    return 4.0 + tau * tau * activation::c_sigma * activation::c_sigma;
  }
  /// Default step size 0.5 / kappa^2.
  double default_alpha() const { return 0.5 / kappa_sq(); }
  void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// theta = (a, B): output weights a in R^M and hidden rows b_m (rows of B).
///
/// The flat layout used by every gradient in the library is the a-block
/// followed by B in row-major order, i.e. index M + m*d_tilde + j is b_m^j.
struct Params {
  Eigen::VectorXd a;
  RowMatrix B;

  Params() = default;
  Params(Eigen::VectorXd a_, RowMatrix B_);

  int width() const { return static_cast<int>(a.size()); }
  int d_tilde() const { return static_cast<int>(B.cols()); }
  Eigen::Index num_params() const { return a.size() + B.size(); }

  Eigen::VectorXd flatten() const;
  static Params from_flat(const Eigen::VectorXd& flat, int width, int d_tilde);
  /// ||theta||^2 = ||a||^2 + ||B||_F^2
  double norm_sq() const { return a.squaredNorm() + B.squaredNorm(); }
  bool is_finite() const { return a.allFinite() && B.allFinite(); }

  Params operator-(const Params& other) const;
  Params operator+(const Params& other) const;
  Params operator*(double s) const;
};

/// Rows J(u)(x_j) = (s_A A(u)(x_j), s_u u(x_j), s_c c(x_j)).
class FeatureField {
public:
  FeatureField(GridPtr grid, Eigen::MatrixXd values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index points() const { return values_.rows(); }
  Eigen::Index d_tilde() const { return values_.cols(); }

private:
  GridPtr grid_;
  Eigen::MatrixXd values_;
};

/// Gaussian-kernel integral operator x -> sum_j w_j k(x, x_j) u(x_j) on the
/// grid of `u`; each output channel is divided by max(1, sup|.|).
Eigen::MatrixXd apply_A(const SampledFunction& u, double bandwidth);

FeatureField build_features(const SampledFunction& u, const ArchConfig& cfg);

/// a_m = +tau on the first half, -tau on the second; hidden rows uniform on
/// the unit sphere and duplicated across the halves, so G_theta0 == 0.
Params init_symmetric(const ArchConfig& cfg, std::uint64_t seed);

/// G_theta(u)(x_j) = (1/sqrt M) sum_m a_m sigma(<b_m, J(u)(x_j)>)
SampledFunction forward(const Params& theta, const FeatureField& feats);

/// Gradient of G_theta(u)(x_j) w.r.t. theta in the flat layout.
Eigen::VectorXd grad(const Params& theta, const FeatureField& feats, Eigen::Index x_index);

/// All per-point gradients stacked, n_x x num_params.
Eigen::MatrixXd jacobian(const Params& theta, const FeatureField& feats);

double param_distance(const Params& theta, const Params& theta0);

} // namespace ntkop
