#include "ntkop/poisson.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ntkop {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs))
{
  if (coeffs_.empty())
    throw std::invalid_argument("Polynomial: at least one coefficient required");
  for (double c : coeffs_)
    if (!std::isfinite(c))
      throw std::invalid_argument("Polynomial: coefficients must be finite");
}

double Polynomial::operator()(double x) const
{
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

namespace {

std::vector<double> derivative_coeffs(const std::vector<double>& c)
{
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  while (!d.empty() && d.back() == 0.0) d.pop_back();
  return d;
}

double horner(const std::vector<double>& c, double x)
{
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// Real roots of a polynomial in [0,1] via the companion matrix, Newton-polished.
std::vector<double> real_roots_in_unit_interval(const std::vector<double>& c)
{
  std::vector<double> roots;
  const auto deg = static_cast<Eigen::Index>(c.size()) - 1;
  if (deg < 1) return roots;
  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev[i].imag()) <= 1e-7 * std::max(1.0, std::abs(ev[i].real())))
        roots.push_back(ev[i].real());
  }
  const auto dc = derivative_coeffs(c);
  std::vector<double> kept;
  for (double r : roots) {
    for (int it = 0; it < 4 && !dc.empty(); ++it) {
      const double slope = horner(dc, r);
      if (slope == 0.0) break;
      r -= horner(c, r) / slope;
    }
    if (r > -1e-9 && r < 1.0 + 1e-9) kept.push_back(std::clamp(r, 0.0, 1.0));
  }
  return kept;
}

} // namespace

double Polynomial::sup_norm() const
{
  double best = std::max(std::abs((*this)(0.0)), std::abs((*this)(1.0)));
  for (double x : real_roots_in_unit_interval(derivative_coeffs(coeffs_)))
    best = std::max(best, std::abs((*this)(x)));
  return best;
}

Polynomial Polynomial::normalized() const
{
  const double scale = std::max(1.0, sup_norm());
  std::vector<double> c = coeffs_;
  for (double& ck : c) ck /= scale;
  return Polynomial(std::move(c));
}

Polynomial sample_polynomial(std::mt19937_64& rng, int max_degree)
{
  if (max_degree < 0)
    throw std::invalid_argument("sample_polynomial: max_degree must be >= 0");
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> c(static_cast<std::size_t>(max_degree) + 1);
  for (double& ck : c) ck = unif(rng);
  return Polynomial(std::move(c)).normalized();
}

double greens_kernel(double x, double y)
{
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("greens_kernel: arguments must lie in [0,1]");
  return 0.5 * (x + y - std::abs(x - y)) - x * y;
}

PoissonSolution::PoissonSolution(Polynomial source) : source_(std::move(source)) {}

double PoissonSolution::operator()(double x) const
{
  // Per monomial y^k:
  //   (1-x) int_0^x y^{k+1} dy        = (1-x) x^{k+2}/(k+2)
  //   x int_x^1 (1-y) y^k dy          = x [(1-x^{k+1})/(k+1) - (1-x^{k+2})/(k+2)]
  const double omx = 1.0 - x;
  double v = 0.0;
  double xk1 = x; // x^{k+1}
  for (std::size_t k = 0; k < source_.coeffs().size(); ++k) {
    const double xk2 = xk1 * x;
    const double kp1 = static_cast<double>(k) + 1.0;
    const double kp2 = static_cast<double>(k) + 2.0;
    const double left = omx * xk2 / kp2;
    const double right = x * ((1.0 - xk1) / kp1 - (1.0 - xk2) / kp2);
    v += source_.coeffs()[k] * (left + right);
    xk1 = xk2;
  }
  return v;
}

Eigen::VectorXd PoissonSolution::on(const Grid& grid) const
{
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) out[j] = (*this)(grid.points()[j]);
  return out;
}

PoissonSolution solve_poisson(const Polynomial& u) { return PoissonSolution(u); }

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& name)
{
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + name);
}

Dataset make_dataset_from(std::vector<Polynomial> polys, GridPtr grid, Split split,
                          std::uint64_t seed, int max_degree)
{
  if (polys.empty()) throw std::invalid_argument("make_dataset: n_u must be >= 1");
  if (!grid) throw std::invalid_argument("make_dataset: null grid");
  Dataset d;
  d.split = split;
  d.seed = seed;
  d.max_degree = max_degree;
  d.grid = grid;
  d.inputs.reserve(polys.size());
  d.targets.reserve(polys.size());
  for (const auto& p : polys) {
    Eigen::VectorXd u(grid->size());
    for (Eigen::Index j = 0; j < grid->size(); ++j) u[j] = p(grid->points()[j]);
    d.inputs.emplace_back(grid, u);
    d.targets.emplace_back(grid, solve_poisson(p).on(*grid));
  }
  d.input_polys = std::move(polys);
  return d;
}

Dataset make_dataset(int n_u, GridPtr grid, int max_degree, std::uint64_t seed,
                     Split split)
{
  if (n_u < 1) throw std::invalid_argument("make_dataset: n_u must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Polynomial> polys;
  polys.reserve(n_u);
  for (int i = 0; i < n_u; ++i) polys.push_back(sample_polynomial(rng, max_degree));
  return make_dataset_from(std::move(polys), std::move(grid), split, seed, max_degree);
}

Dataset regrid(const Dataset& data, GridPtr grid)
{
  return make_dataset_from(data.input_polys, std::move(grid), data.split, data.seed,
                           data.max_degree);
}

} // namespace ntkop
