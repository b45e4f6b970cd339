#pragma once

#include "ntkop/neural_op.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ntkop {

/// Discretized operator K_M(u, u'): entry (p, q) = k((u, x_p), (u', x_q)).
/// It acts on grid functions by (K c)(x_p) = sum_q w_q k(x_p, x_q) c(x_q).
struct KernelBlock {
  Eigen::MatrixXd matrix;
  GridPtr grid;     // rows (u)
  GridPtr col_grid; // columns (u'); same as `grid` for training blocks

  /// sqrt(sum_{p,q} w_p w_q k_pq^2), the discrete Hilbert-Schmidt norm.
  double hs_norm() const;
};

/// Empirical NTK at a symmetric initialization:
///   (1/M) sum_m [ sigma(z_m) sigma(z'_m) + tau^2 sigma'(z_m) sigma'(z'_m) <J, J'> ]
/// Requires |a_m| = tau for every m.
KernelBlock ntk_block(const Params& theta0, const FeatureField& feats_u,
                      const FeatureField& feats_v, double tau);

/// Anything that applies the flattened training Gram with the quadrature
/// weights folded in: c -> (sum_j K(u_i, u_j) W c_j)_i.
class GramOperator {
public:
  virtual ~GramOperator() = default;
  virtual Eigen::Index n_u() const = 0;
  virtual Eigen::Index n_x() const = 0;
  virtual const Grid& grid() const = 0;
  virtual Eigen::VectorXd apply_weighted(const Eigen::VectorXd& flat_coeffs) const = 0;
};

/// Fully materialized (n_U n_X)^2 training Gram, sample-major ordering.
class GramTensor final : public GramOperator {
public:
  static constexpr Eigen::Index kMaxMaterializedRows = 32768;

  GramTensor(Eigen::MatrixXd flat, GridPtr grid, Eigen::Index n_u);

  static GramTensor assemble(const Params& theta0, const std::vector<FeatureField>& feats,
                             double tau);

  Eigen::Index n_u() const override { return n_u_; }
  Eigen::Index n_x() const override { return grid_->size(); }
  const Grid& grid() const override { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::MatrixXd& flat() const { return flat_; }
  KernelBlock block(Eigen::Index i, Eigen::Index j) const;

  /// W^{1/2} K W^{1/2} with W the block-diagonal quadrature weights.
  Eigen::MatrixXd weighted() const;

  Eigen::VectorXd apply_weighted(const Eigen::VectorXd& flat_coeffs) const override;

private:
  Eigen::MatrixXd flat_;
  GridPtr grid_;
  Eigen::Index n_u_;
};

/// Gram applied through the factorized kernel formula without materializing
/// it; memory is O(n_U n_X M). For training sets too large for GramTensor.
class FactoredGram final : public GramOperator {
public:
  FactoredGram(const Params& theta0, const std::vector<FeatureField>& feats, double tau);

  Eigen::Index n_u() const override { return static_cast<Eigen::Index>(features_.size()); }
  Eigen::Index n_x() const override { return grid_->size(); }
  const Grid& grid() const override { return *grid_; }
  Eigen::VectorXd apply_weighted(const Eigen::VectorXd& flat_coeffs) const override;

private:
  GridPtr grid_;
  double tau_sq_;
  int width_;
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Eigen::MatrixXd> sig_;
  std::vector<Eigen::MatrixXd> dsig_;
};

/// F_t(u) = sum_i K(u, u_i) W c_i; coefficients are sample-major.
struct KgdState {
  std::vector<Eigen::VectorXd> coefficients;
  int t = 0;
};

struct KgdTrajectory {
  std::vector<KgdState> states;
  /// F_T on the training inputs, one vector per sample.
  std::vector<Eigen::VectorXd> final_predictions;

  const KgdState& final_state() const { return states.back(); }
};

/// Kernel gradient descent from F_0 = 0:
///   c_j <- c_j - (alpha/n_U) (F_t(u_j) - v_j).
/// States are kept every `record_every` steps plus the last one.
KgdTrajectory kgd_run(const GramOperator& gram, const std::vector<Eigen::VectorXd>& targets,
                      double alpha, int iterations, int record_every = 1);

/// F_t(u) evaluated on a new input via cross blocks K(u, u_i).
SampledFunction kgd_predict(const Params& theta0, const std::vector<FeatureField>& train_feats,
                            const KgdState& state, const FeatureField& feats_u, double tau);

/// H(u)(x_p) = <grad G_theta0(u)(x_p), theta - theta0>
SampledFunction linearized_iterate(const Params& theta, const Params& theta0,
                                   const FeatureField& feats);

/// sup_p |G_theta(u)(x_p) - G_theta0(u)(x_p) - H(u)(x_p)|
double taylor_remainder(const Params& theta, const Params& theta0, const FeatureField& feats);

/// Unit-norm perturbation with every a_m = c and every b_m = c v, for the
/// unit vector v = (1, ..., 1)/sqrt(d). The second-order Taylor terms of
/// all neurons then share a sign, which is the worst case for the
/// remainder. Directions that are odd under the symmetric pairing
/// (a_m, b_m) <-> (-a_{m'}, b_{m'}) have no second-order term at all.
Params coherent_direction(int width, int d_tilde);

struct SpectralReport {
  Eigen::VectorXd eigenvalues; // descending
  std::vector<double> lambdas;
  std::vector<double> n_eff;
  double decay_exponent = 0.0; // b-hat
};

/// sum_i mu_i / (mu_i + lambda)
double effective_dimension(const Eigen::VectorXd& eigenvalues, double lambda);

/// Eigenvalues of W^{1/2} K W^{1/2} / n_U; entries below 1e-12 lambda_max
/// clamp to zero. b-hat is minus the least-squares slope of log N(lambda)
/// against log lambda over the middle decade of the lambda grid.
SpectralReport spectral_report(const GramTensor& gram, const std::vector<double>& lambda_grid);
SpectralReport spectral_report_from_eigenvalues(Eigen::VectorXd eigenvalues,
                                                const std::vector<double>& lambda_grid);

struct DeviationSample {
  int width = 0;
  std::uint64_t seed = 0;
  double hs_dev = 0.0;
};

struct ReferenceKernel {
  KernelBlock mean;
  std::vector<DeviationSample> deviations;
};

/// Monte-Carlo stand-in for K_infinity: the NTK block at width m_ref drawn
/// with ref_seed. Each width in `widths` is then drawn with seeds
/// seed, seed+1, ..., seed+n_rep-1 and its HS distance to the reference kept.
ReferenceKernel reference_kernel(const FeatureField& feats_u, const FeatureField& feats_v,
                                 const ArchConfig& arch, int m_ref,
                                 const std::vector<int>& widths, int n_rep, std::uint64_t seed,
                                 std::uint64_t ref_seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> values);

} // namespace ntkop
