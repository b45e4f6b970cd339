#include "ntkop/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace ntkop {

std::string to_string(GridScheme scheme)
{
  switch (scheme) {
  case GridScheme::equispaced: return "equispaced";
  case GridScheme::iid_uniform: return "iid_uniform";
  case GridScheme::custom: return "custom";
  }
  return "custom";
}

GridScheme grid_scheme_from_string(const std::string& name)
{
  if (name == "equispaced") return GridScheme::equispaced;
  if (name == "iid_uniform") return GridScheme::iid_uniform;
  if (name == "custom") return GridScheme::custom;
  throw std::invalid_argument("unknown grid scheme: " + name);
}

Grid::Grid(Eigen::VectorXd points, Eigen::VectorXd weights, GridScheme scheme)
  : points_(std::move(points)), weights_(std::move(weights)), scheme_(scheme)
{
  if (points_.size() < 1)
    throw std::invalid_argument("Grid: at least one point required");
  if (points_.size() != weights_.size())
    throw std::invalid_argument("Grid: points and weights differ in length");
  for (Eigen::Index j = 0; j < points_.size(); ++j) {
    if (!(points_[j] > 0.0 && points_[j] < 1.0))
      throw std::invalid_argument("Grid: points must lie strictly inside (0,1)");
    if (j > 0 && !(points_[j] > points_[j - 1]))
      throw std::invalid_argument("Grid: points must be strictly ascending");
    if (!(weights_[j] >= 0.0) || !std::isfinite(weights_[j]))
      throw std::invalid_argument("Grid: weights must be finite and nonnegative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("Grid: weights must sum to one");
}

bool Grid::operator==(const Grid& other) const
{
  return points_.size() == other.points_.size() && points_ == other.points_ &&
         weights_ == other.weights_;
}

bool same_grid(const Grid& a, const Grid& b) { return &a == &b || a == b; }

GridPtr make_grid(int n_x, GridScheme scheme, std::uint64_t seed)
{
  if (n_x < 2)
    throw std::invalid_argument("make_grid: n_x must be at least 2");
  const auto n = static_cast<Eigen::Index>(n_x);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, 1.0 / n_x);
  Eigen::VectorXd points(n);

  switch (scheme) {
  case GridScheme::equispaced:
    for (Eigen::Index j = 0; j < n; ++j)
      points[j] = (2.0 * static_cast<double>(j) + 1.0) / (2.0 * n_x);
    break;
  case GridScheme::iid_uniform: {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> draws;
    draws.reserve(n_x);
    while (static_cast<int>(draws.size()) < n_x) {
      const double x = unif(rng);
      if (x <= 0.0 || std::find(draws.begin(), draws.end(), x) != draws.end())
        continue;
      draws.push_back(x);
    }
    std::sort(draws.begin(), draws.end());
    for (Eigen::Index j = 0; j < n; ++j) points[j] = draws[j];
    break;
  }
  case GridScheme::custom:
    throw std::invalid_argument("make_grid: use make_custom_grid for custom grids");
  }
  return std::make_shared<const Grid>(std::move(points), std::move(weights), scheme);
}

GridPtr make_custom_grid(Eigen::VectorXd points, Eigen::VectorXd weights)
{
  return std::make_shared<const Grid>(std::move(points), std::move(weights),
                                      GridScheme::custom);
}

SampledFunction::SampledFunction(GridPtr grid, Eigen::MatrixXd values)
  : grid_(std::move(grid)), values_(std::move(values))
{
  if (!grid_) throw std::invalid_argument("SampledFunction: null grid");
  if (values_.rows() != grid_->size())
    throw std::invalid_argument("SampledFunction: row count must equal grid size");
  if (!values_.allFinite())
    throw std::invalid_argument("SampledFunction: values must be finite");
}

SampledFunction::SampledFunction(GridPtr grid, const Eigen::VectorXd& values)
  : SampledFunction(std::move(grid), Eigen::MatrixXd(values))
{}

Eigen::VectorXd SampledFunction::scalar() const
{
  if (values_.cols() != 1)
    throw std::logic_error("SampledFunction::scalar: function has several channels");
  return values_.col(0);
}

double emp_inner(const SampledFunction& f, const SampledFunction& g)
{
  if (!same_grid(f.grid(), g.grid()))
    throw std::invalid_argument("emp_inner: functions live on different grids");
  if (f.channels() != 1 || g.channels() != 1)
    throw std::invalid_argument("emp_inner: scalar functions required");
  const auto& w = f.grid().weights();
  return (w.array() * f.values().col(0).array() * g.values().col(0).array()).sum();
}

double emp_norm(const SampledFunction& f) { return std::sqrt(emp_inner(f, f)); }

double integrate(const Grid& grid, const Eigen::VectorXd& values)
{
  if (values.size() != grid.size())
    throw std::invalid_argument("integrate: length mismatch");
  return grid.weights().dot(values);
}

} // namespace ntkop
