#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>

namespace ntkop {

enum class GridScheme { equispaced, iid_uniform, custom };

std::string to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(const std::string& name);

/// Sample locations x_1 < ... < x_n in (0,1) together with quadrature
/// weights that sum to one (a discretization of the uniform measure).
class Grid {
public:
  Grid(Eigen::VectorXd points, Eigen::VectorXd weights,
       GridScheme scheme = GridScheme::custom);

  const Eigen::VectorXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return points_.size(); }
  GridScheme scheme() const { return scheme_; }

  bool operator==(const Grid& other) const;

private:
  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
  GridScheme scheme_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Midpoints (2j-1)/(2n) for `equispaced`, sorted U(0,1) draws for
/// `iid_uniform`. Both use uniform weights 1/n.
GridPtr make_grid(int n_x, GridScheme scheme = GridScheme::equispaced,
                  std::uint64_t seed = 0);

/// Arbitrary points/weights, n >= 1. Used by tests and hand instances.
GridPtr make_custom_grid(Eigen::VectorXd points, Eigen::VectorXd weights);

bool same_grid(const Grid& a, const Grid& b);

/// Values of a (possibly vector-valued) function on a grid, one row per point.
class SampledFunction {
public:
  SampledFunction(GridPtr grid, Eigen::MatrixXd values);
  SampledFunction(GridPtr grid, const Eigen::VectorXd& values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index channels() const { return values_.cols(); }

  /// Single-channel values as a column vector.
  Eigen::VectorXd scalar() const;

private:
  GridPtr grid_;
  Eigen::MatrixXd values_;
};

/// Sum_j w_j f(x_j) g(x_j); equals (1/n) Sum f g on uniform-weight grids.
double emp_inner(const SampledFunction& f, const SampledFunction& g);
double emp_norm(const SampledFunction& f);

/// Quadrature of grid values against the grid weights.
double integrate(const Grid& grid, const Eigen::VectorXd& values);

} // namespace ntkop
