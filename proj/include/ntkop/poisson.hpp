#pragma once

#include "ntkop/discretize.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ntkop {

/// Polynomial in monomial form, coeffs[k] multiplies x^k.
class Polynomial {
public:
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double x) const;
  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  /// max_{x in [0,1]} |p(x)|, from the endpoints and the real roots of p'.
  double sup_norm() const;
  /// p / max(1, sup|p|).
  Polynomial normalized() const;

private:
  std::vector<double> coeffs_;
};

/// Coefficients iid U[-1,1] up to max_degree, then sup-normalized.
Polynomial sample_polynomial(std::mt19937_64& rng, int max_degree);

/// Green's function of -d^2/dx^2 on (0,1) with zero boundary values.
double greens_kernel(double x, double y);

/// Exact v(x) = int_0^1 G(x,y) u(y) dy for polynomial u, evaluated through
/// v(x) = (1-x) int_0^x y u(y) dy + x int_x^1 (1-y) u(y) dy.
class PoissonSolution {
public:
  explicit PoissonSolution(Polynomial source);

  double operator()(double x) const;
  Eigen::VectorXd on(const Grid& grid) const;
  const Polynomial& source() const { return source_; }

private:
  Polynomial source_;
};

PoissonSolution solve_poisson(const Polynomial& u);

enum class Split { train, test };
std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  Split split = Split::train;
  std::uint64_t seed = 0;
  int max_degree = 0;
  GridPtr grid;
  std::vector<Polynomial> input_polys;
  std::vector<SampledFunction> inputs;
  std::vector<SampledFunction> targets;

  std::size_t size() const { return input_polys.size(); }
};

Dataset make_dataset(int n_u, GridPtr grid, int max_degree, std::uint64_t seed,
                     Split split);

/// Dataset over given inputs; targets come from the closed-form solve.
Dataset make_dataset_from(std::vector<Polynomial> polys, GridPtr grid, Split split,
                          std::uint64_t seed = 0, int max_degree = 0);

/// Same input polynomials re-evaluated on another grid.
Dataset regrid(const Dataset& data, GridPtr grid);

} // namespace ntkop
