#include "ntkop/ntk.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ntkop {

double KernelBlock::hs_norm() const
{
  const Grid& rows = *grid;
  const Grid& cols = col_grid ? *col_grid : *grid;
  const Eigen::ArrayXXd weighted =
    (rows.weights() * cols.weights().transpose()).array() * matrix.array().square();
  return std::sqrt(weighted.sum());
}

namespace {

void check_symmetric_init(const Params& theta0, double tau)
{
  if (!(tau > 0.0)) throw std::invalid_argument("ntk: tau must be positive");
  for (Eigen::Index m = 0; m < theta0.a.size(); ++m)
    if (std::abs(std::abs(theta0.a[m]) - tau) > 1e-12 * tau)
      throw std::invalid_argument("ntk: output weights must satisfy |a_m| = tau");
}

Eigen::MatrixXd sig(const Eigen::MatrixXd& Z)
{
  return Z.unaryExpr([](double z) { return activation::sigma(z); });
}

Eigen::MatrixXd dsig(const Eigen::MatrixXd& Z)
{
  return Z.unaryExpr([](double z) { return activation::dsigma(z); });
}

Eigen::MatrixXd kernel_matrix(const Params& theta0, const Eigen::MatrixXd& Ju,
                              const Eigen::MatrixXd& Jv, double tau)
{
  const Eigen::MatrixXd Zu = Ju * theta0.B.transpose();
  const Eigen::MatrixXd Zv = Jv * theta0.B.transpose();
  const Eigen::MatrixXd first = sig(Zu) * sig(Zv).transpose();
  const Eigen::MatrixXd second =
    (dsig(Zu) * dsig(Zv).transpose()).cwiseProduct(Ju * Jv.transpose());
  return (first + tau * tau * second) / static_cast<double>(theta0.width());
}

} // namespace

KernelBlock ntk_block(const Params& theta0, const FeatureField& feats_u,
                      const FeatureField& feats_v, double tau)
{
  check_symmetric_init(theta0, tau);
  if (feats_u.d_tilde() != theta0.d_tilde() || feats_v.d_tilde() != theta0.d_tilde())
    throw std::invalid_argument("ntk_block: feature width differs from the parameters");
  KernelBlock block;
  block.matrix = kernel_matrix(theta0, feats_u.values(), feats_v.values(), tau);
  block.grid = feats_u.grid_ptr();
  block.col_grid = feats_v.grid_ptr();
  return block;
}

GramTensor::GramTensor(Eigen::MatrixXd flat, GridPtr grid, Eigen::Index n_u)
  : flat_(std::move(flat)), grid_(std::move(grid)), n_u_(n_u)
{
  if (!grid_) throw std::invalid_argument("GramTensor: null grid");
  const Eigen::Index rows = n_u_ * grid_->size();
  if (n_u_ < 1 || flat_.rows() != rows || flat_.cols() != rows)
    throw std::invalid_argument("GramTensor: matrix must be (n_u n_x) square");
}

GramTensor GramTensor::assemble(const Params& theta0, const std::vector<FeatureField>& feats,
                                double tau)
{
  check_symmetric_init(theta0, tau);
  if (feats.empty()) throw std::invalid_argument("GramTensor: no inputs");
  const GridPtr grid = feats.front().grid_ptr();
  const Eigen::Index n_x = grid->size();
  const auto n_u = static_cast<Eigen::Index>(feats.size());
  if (n_u * n_x > kMaxMaterializedRows)
    throw std::length_error("GramTensor: " + std::to_string(n_u * n_x) +
                            " rows exceed the materialization limit; use FactoredGram");

  Eigen::MatrixXd J(n_u * n_x, theta0.d_tilde());
  for (Eigen::Index i = 0; i < n_u; ++i) {
    if (!same_grid(feats[i].grid(), *grid))
      throw std::invalid_argument("GramTensor: all inputs must share one grid");
    if (feats[i].d_tilde() != theta0.d_tilde())
      throw std::invalid_argument("GramTensor: feature width differs from the parameters");
    J.middleRows(i * n_x, n_x) = feats[i].values();
  }
  Eigen::MatrixXd K = kernel_matrix(theta0, J, J, tau);
  // Exact symmetry; the two products above agree only to rounding.
  K = 0.5 * (K + K.transpose()).eval();
  return GramTensor(std::move(K), grid, n_u);
}

KernelBlock GramTensor::block(Eigen::Index i, Eigen::Index j) const
{
  const Eigen::Index n_x = grid_->size();
  if (i < 0 || j < 0 || i >= n_u_ || j >= n_u_)
    throw std::out_of_range("GramTensor::block: index out of range");
  return KernelBlock{flat_.block(i * n_x, j * n_x, n_x, n_x), grid_, grid_};
}

namespace {
Eigen::VectorXd tiled_weights(const Grid& grid, Eigen::Index n_u)
{
  return grid.weights().replicate(n_u, 1);
}
} // namespace

Eigen::MatrixXd GramTensor::weighted() const
{
  const Eigen::VectorXd s = tiled_weights(*grid_, n_u_).cwiseSqrt();
  return s.asDiagonal() * flat_ * s.asDiagonal();
}

Eigen::VectorXd GramTensor::apply_weighted(const Eigen::VectorXd& flat_coeffs) const
{
  if (flat_coeffs.size() != flat_.cols())
    throw std::invalid_argument("GramTensor::apply_weighted: length mismatch");
  return flat_ * tiled_weights(*grid_, n_u_).cwiseProduct(flat_coeffs);
}

FactoredGram::FactoredGram(const Params& theta0, const std::vector<FeatureField>& feats,
                           double tau)
  : tau_sq_(tau * tau), width_(theta0.width())
{
  check_symmetric_init(theta0, tau);
  if (feats.empty()) throw std::invalid_argument("FactoredGram: no inputs");
  grid_ = feats.front().grid_ptr();
  for (const auto& f : feats) {
    if (!same_grid(f.grid(), *grid_))
      throw std::invalid_argument("FactoredGram: all inputs must share one grid");
    const Eigen::MatrixXd Z = f.values() * theta0.B.transpose();
    features_.push_back(f.values());
    sig_.push_back(sig(Z));
    dsig_.push_back(dsig(Z));
  }
}

Eigen::VectorXd FactoredGram::apply_weighted(const Eigen::VectorXd& flat_coeffs) const
{
  const Eigen::Index n_x = grid_->size();
  const Eigen::Index n_u = this->n_u();
  if (flat_coeffs.size() != n_u * n_x)
    throw std::invalid_argument("FactoredGram::apply_weighted: length mismatch");
  const Eigen::Index d = features_.front().cols();

  Eigen::VectorXd g = Eigen::VectorXd::Zero(width_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(width_, d);
  for (Eigen::Index j = 0; j < n_u; ++j) {
    const Eigen::VectorXd r =
      grid_->weights().cwiseProduct(flat_coeffs.segment(j * n_x, n_x));
    g.noalias() += sig_[j].transpose() * r;
    h.noalias() += (dsig_[j].array().colwise() * r.array()).matrix().transpose() * features_[j];
  }
  Eigen::VectorXd out(n_u * n_x);
  for (Eigen::Index i = 0; i < n_u; ++i) {
    const Eigen::MatrixXd Jh = features_[i] * h.transpose(); // n_x x M
    out.segment(i * n_x, n_x) =
      (sig_[i] * g + tau_sq_ * dsig_[i].cwiseProduct(Jh).rowwise().sum()) /
      static_cast<double>(width_);
  }
  return out;
}

KgdTrajectory kgd_run(const GramOperator& gram, const std::vector<Eigen::VectorXd>& targets,
                      double alpha, int iterations, int record_every)
{
  const Eigen::Index n_u = gram.n_u();
  const Eigen::Index n_x = gram.n_x();
  if (static_cast<Eigen::Index>(targets.size()) != n_u)
    throw std::invalid_argument("kgd_run: one target per training input required");
  if (!(alpha > 0.0)) throw std::invalid_argument("kgd_run: alpha must be positive");
  if (iterations < 0 || record_every < 1)
    throw std::invalid_argument("kgd_run: T >= 0 and record_every >= 1 required");

  Eigen::VectorXd v(n_u * n_x);
  for (Eigen::Index i = 0; i < n_u; ++i) {
    if (targets[i].size() != n_x) throw std::invalid_argument("kgd_run: target length mismatch");
    v.segment(i * n_x, n_x) = targets[i];
  }

  auto unflatten = [&](const Eigen::VectorXd& flat) {
    std::vector<Eigen::VectorXd> out(n_u);
    for (Eigen::Index i = 0; i < n_u; ++i) out[i] = flat.segment(i * n_x, n_x);
    return out;
  };

  KgdTrajectory traj;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_u * n_x);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(n_u * n_x);
  const double step = alpha / static_cast<double>(n_u);
  for (int t = 0;; ++t) {
    if (t % record_every == 0 || t == iterations) traj.states.push_back({unflatten(c), t});
    if (t == iterations) break;
    c -= step * (F - v);
    F = gram.apply_weighted(c);
    if (!F.allFinite() || c.cwiseAbs().maxCoeff() > kOverflowGuard)
      throw DivergenceError("kgd_run: iterates diverged at t = " + std::to_string(t + 1) +
                            "; the step size is not admissible");
  }
  traj.final_predictions = unflatten(F);
  return traj;
}

SampledFunction kgd_predict(const Params& theta0, const std::vector<FeatureField>& train_feats,
                            const KgdState& state, const FeatureField& feats_u, double tau)
{
  if (state.coefficients.size() != train_feats.size())
    throw std::invalid_argument("kgd_predict: state does not match the training inputs");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(feats_u.points());
  for (std::size_t i = 0; i < train_feats.size(); ++i) {
    const KernelBlock k = ntk_block(theta0, feats_u, train_feats[i], tau);
    out += k.matrix * train_feats[i].grid().weights().cwiseProduct(state.coefficients[i]);
  }
  return SampledFunction(feats_u.grid_ptr(), out);
}

SampledFunction linearized_iterate(const Params& theta, const Params& theta0,
                                   const FeatureField& feats)
{
  const Eigen::VectorXd delta = (theta - theta0).flatten();
  Eigen::VectorXd out(feats.points());
  for (Eigen::Index p = 0; p < feats.points(); ++p) out[p] = grad(theta0, feats, p).dot(delta);
  return SampledFunction(feats.grid_ptr(), out);
}

double taylor_remainder(const Params& theta, const Params& theta0, const FeatureField& feats)
{
  const Eigen::VectorXd r = forward(theta, feats).scalar() - forward(theta0, feats).scalar() -
                            linearized_iterate(theta, theta0, feats).scalar();
  return r.cwiseAbs().maxCoeff();
}

Params coherent_direction(int width, int d_tilde)
{
  if (width < 1 || d_tilde < 1)
    throw std::invalid_argument("coherent_direction: positive sizes required");
  const double c = 1.0 / std::sqrt(2.0 * width);
  Params p;
  p.a = Eigen::VectorXd::Constant(width, c);
  p.B = RowMatrix::Constant(width, d_tilde, c / std::sqrt(static_cast<double>(d_tilde)));
  return p;
}

double effective_dimension(const Eigen::VectorXd& eigenvalues, double lambda)
{
  if (!(lambda > 0.0)) throw std::invalid_argument("effective_dimension: lambda must be positive");
  return (eigenvalues.array() / (eigenvalues.array() + lambda)).sum();
}

SpectralReport spectral_report_from_eigenvalues(Eigen::VectorXd eigenvalues,
                                                const std::vector<double>& lambda_grid)
{
  std::sort(eigenvalues.data(), eigenvalues.data() + eigenvalues.size(), std::greater<>());
  const double top = eigenvalues.size() ? std::max(eigenvalues[0], 0.0) : 0.0;
  for (auto& mu : eigenvalues)
    if (mu < 1e-12 * top) mu = 0.0;

  SpectralReport rep;
  rep.eigenvalues = std::move(eigenvalues);
  rep.lambdas = lambda_grid;
  std::sort(rep.lambdas.begin(), rep.lambdas.end());
  for (double lam : rep.lambdas) rep.n_eff.push_back(effective_dimension(rep.eigenvalues, lam));

  if (rep.lambdas.size() >= 2) {
    const double lo = std::log10(rep.lambdas.front());
    const double hi = std::log10(rep.lambdas.back());
    const double centre = 0.5 * (lo + hi);
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < rep.lambdas.size(); ++k)
      if (std::abs(std::log10(rep.lambdas[k]) - centre) <= 0.5 + 1e-12 && rep.n_eff[k] > 0.0) {
        xs.push_back(rep.lambdas[k]);
        ys.push_back(rep.n_eff[k]);
      }
    if (xs.size() < 2) {
      xs.clear();
      ys.clear();
      for (std::size_t k = 0; k < rep.lambdas.size(); ++k)
        if (rep.n_eff[k] > 0.0) {
          xs.push_back(rep.lambdas[k]);
          ys.push_back(rep.n_eff[k]);
        }
    }
    if (xs.size() >= 2) rep.decay_exponent = -loglog_slope(xs, ys);
  }
  return rep;
}

SpectralReport spectral_report(const GramTensor& gram, const std::vector<double>& lambda_grid)
{
  const Eigen::MatrixXd op = gram.weighted() / static_cast<double>(gram.n_u());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectral_report: eigensolver failed");
  return spectral_report_from_eigenvalues(solver.eigenvalues(), lambda_grid);
}

ReferenceKernel reference_kernel(const FeatureField& feats_u, const FeatureField& feats_v,
                                 const ArchConfig& arch, int m_ref,
                                 const std::vector<int>& widths, int n_rep, std::uint64_t seed,
                                 std::uint64_t ref_seed)
{
  if (n_rep < 1) throw std::invalid_argument("reference_kernel: n_rep must be >= 1");
  ArchConfig cfg = arch;
  cfg.width = m_ref;
  ReferenceKernel out;
  out.mean = ntk_block(init_symmetric(cfg, ref_seed), feats_u, feats_v, cfg.tau);
  for (int w : widths) {
    cfg.width = w;
    for (int r = 0; r < n_rep; ++r) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
      KernelBlock diff = ntk_block(init_symmetric(cfg, s), feats_u, feats_v, cfg.tau);
      diff.matrix -= out.mean.matrix;
      out.deviations.push_back({w, s, diff.hs_norm()});
    }
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need at least two paired points");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double median(std::vector<double> values)
{
  if (values.empty()) throw std::invalid_argument("median: empty input");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

} // namespace ntkop
