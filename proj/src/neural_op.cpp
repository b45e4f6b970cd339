#include "ntkop/neural_op.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace ntkop {

void ArchConfig::validate() const
{
  if (width < 2 || width % 2 != 0)
    throw std::invalid_argument("ArchConfig: width M must be a positive even integer");
  if (d_k != 1)
    throw std::invalid_argument("ArchConfig: only a single-channel integral operator (d_k = 1) is supported");
  if (d_y < 1 || d_b != 1)
    throw std::invalid_argument("ArchConfig: d_y >= 1 and d_b = 1 required");
  if (!(tau > 0.0)) throw std::invalid_argument("ArchConfig: tau must be positive");
  if (!(kernel_bandwidth > 0.0))
    throw std::invalid_argument("ArchConfig: kernel bandwidth must be positive");
  for (double s : feature_scales)
    if (!(s > 0.0)) throw std::invalid_argument("ArchConfig: feature scales must be positive");
  const double budget =
    feature_scales[0] * d_k + feature_scales[1] * d_y + feature_scales[2] * d_b;
  if (budget > 1.0 + 1e-12)
    throw std::invalid_argument("ArchConfig: feature scale budget exceeds 1 (got " +
                                std::to_string(budget) + ")");
}

Params::Params(Eigen::VectorXd a_, RowMatrix B_) : a(std::move(a_)), B(std::move(B_))
{
  if (a.size() != B.rows())
    throw std::invalid_argument("Params: a and B disagree on the width");
}

Eigen::VectorXd Params::flatten() const
{
  Eigen::VectorXd flat(num_params());
  flat.head(a.size()) = a;
  flat.tail(B.size()) = Eigen::Map<const Eigen::VectorXd>(B.data(), B.size());
  return flat;
}

Params Params::from_flat(const Eigen::VectorXd& flat, int width, int d_tilde)
{
  const Eigen::Index n = static_cast<Eigen::Index>(width) * (d_tilde + 1);
  if (flat.size() != n) throw std::invalid_argument("Params::from_flat: length mismatch");
  Params p;
  p.a = flat.head(width);
  p.B = Eigen::Map<const RowMatrix>(flat.data() + width, width, d_tilde);
  return p;
}

namespace {
void check_same_shape(const Params& x, const Params& y, const char* what)
{
  if (x.a.size() != y.a.size() || x.B.rows() != y.B.rows() || x.B.cols() != y.B.cols())
    throw std::invalid_argument(std::string(what) + ": parameter shapes differ");
}
} // namespace

Params Params::operator-(const Params& other) const
{
  check_same_shape(*this, other, "Params::operator-");
  return Params(a - other.a, B - other.B);
}

Params Params::operator+(const Params& other) const
{
  check_same_shape(*this, other, "Params::operator+");
  return Params(a + other.a, B + other.B);
}

Params Params::operator*(double s) const { return Params(a * s, B * s); }

FeatureField::FeatureField(GridPtr grid, Eigen::MatrixXd values)
  : grid_(std::move(grid)), values_(std::move(values))
{
  if (!grid_) throw std::invalid_argument("FeatureField: null grid");
  if (values_.rows() != grid_->size())
    throw std::invalid_argument("FeatureField: row count must equal grid size");
}

Eigen::MatrixXd apply_A(const SampledFunction& u, double bandwidth)
{
  if (!(bandwidth > 0.0)) throw std::invalid_argument("apply_A: bandwidth must be positive");
  const auto& x = u.grid().points();
  const auto& w = u.grid().weights();
  const Eigen::Index n = x.size();
  const double inv_two_l2 = 1.0 / (2.0 * bandwidth * bandwidth);

  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) {
      const double d = x[p] - x[q];
      kernel(p, q) = std::exp(-d * d * inv_two_l2) * w[q];
    }
  // d_k = 1: the operator acts on the first input channel.
  Eigen::MatrixXd out = kernel * u.values().col(0);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sup = out.col(c).cwiseAbs().maxCoeff();
    if (sup > 1.0) out.col(c) /= sup;
  }
  return out;
}

FeatureField build_features(const SampledFunction& u, const ArchConfig& cfg)
{
  cfg.validate();
  if (u.channels() != cfg.d_y)
    throw std::invalid_argument("build_features: input channel count differs from d_y");
  const Eigen::Index n = u.grid().size();
  const auto [s_a, s_u, s_c] = cfg.feature_scales;

  Eigen::MatrixXd J(n, cfg.d_tilde());
  J.leftCols(cfg.d_k) = s_a * apply_A(u, cfg.kernel_bandwidth);
  J.middleCols(cfg.d_k, cfg.d_y) = s_u * u.values();
  J.rightCols(cfg.d_b).setConstant(s_c); // c(x) = 1

  for (Eigen::Index p = 0; p < n; ++p) {
    const double l1 = J.row(p).cwiseAbs().sum();
    if (l1 > 1.0 + 1e-12)
      throw std::domain_error("build_features: feature row has l1-norm " +
                              std::to_string(l1) + " > 1");
  }
  return FeatureField(u.grid_ptr(), std::move(J));
}

Params init_symmetric(const ArchConfig& cfg, std::uint64_t seed)
{
  cfg.validate();
  const int M = cfg.width;
  const int half = M / 2;
  const int d = cfg.d_tilde();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Params p;
  p.a.resize(M);
  p.a.head(half).setConstant(cfg.tau);
  p.a.tail(half).setConstant(-cfg.tau);
  p.B.resize(M, d);
  for (int m = 0; m < half; ++m) {
    Eigen::VectorXd b(d);
    double nrm = 0.0;
    do {
      for (int j = 0; j < d; ++j) b[j] = normal(rng);
      nrm = b.norm();
    } while (nrm < 1e-12);
    p.B.row(m) = (b / nrm).transpose();
    p.B.row(m + half) = p.B.row(m);
  }
  return p;
}

namespace {
void check_dims(const Params& theta, const FeatureField& feats)
{
  if (theta.d_tilde() != feats.d_tilde())
    throw std::invalid_argument("neural operator: parameter and feature dimensions differ");
}
} // namespace

SampledFunction forward(const Params& theta, const FeatureField& feats)
{
  check_dims(theta, feats);
  const Eigen::MatrixXd Z = feats.values() * theta.B.transpose();
  const Eigen::MatrixXd S = Z.unaryExpr([](double z) { return activation::sigma(z); });
  const Eigen::VectorXd out = S * theta.a / std::sqrt(static_cast<double>(theta.width()));
  return SampledFunction(feats.grid_ptr(), out);
}

Eigen::VectorXd grad(const Params& theta, const FeatureField& feats, Eigen::Index x_index)
{
  check_dims(theta, feats);
  if (x_index < 0 || x_index >= feats.points())
    throw std::out_of_range("grad: x_index out of range");
  const int M = theta.width();
  const int d = theta.d_tilde();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(M));
  const Eigen::VectorXd J = feats.values().row(x_index).transpose();

  Eigen::VectorXd g(theta.num_params());
  for (int m = 0; m < M; ++m) {
    const double z = theta.B.row(m).dot(J);
    g[m] = activation::sigma(z) * inv_sqrt_m;
    const double coef = theta.a[m] * activation::dsigma(z) * inv_sqrt_m;
    for (int j = 0; j < d; ++j) g[M + m * d + j] = coef * J[j];
  }
  return g;
}

Eigen::MatrixXd jacobian(const Params& theta, const FeatureField& feats)
{
  Eigen::MatrixXd jac(feats.points(), theta.num_params());
  for (Eigen::Index p = 0; p < feats.points(); ++p) jac.row(p) = grad(theta, feats, p).transpose();
  return jac;
}

double param_distance(const Params& theta, const Params& theta0)
{
  return std::sqrt((theta - theta0).norm_sq());
}

} // namespace ntkop
