#include "ntkop/neural_op.hpp"
#include "ntkop/ntk.hpp"
#include "ntkop/poisson.hpp"
#include "ntkop/serialize.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ntkop;

namespace {

SampledFunction sample_on(const Polynomial& p, const GridPtr& g)
{
  Eigen::VectorXd v(g->size());
  for (Eigen::Index j = 0; j < g->size(); ++j) v[j] = p(g->points()[j]);
  return {g, v};
}

FeatureField single_row(double a, double b, double c)
{
  Eigen::MatrixXd row(1, 3);
  row << a, b, c;
  return {make_custom_grid(Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Ones(1)), row};
}

Params random_params(int width, int d, std::mt19937_64& rng)
{
  std::normal_distribution<double> normal;
  Params p(Eigen::VectorXd(width), RowMatrix(width, d));
  for (auto& x : p.a) x = normal(rng);
  for (Eigen::Index k = 0; k < p.B.size(); ++k) p.B.data()[k] = normal(rng);
  return p;
}

} // namespace

TEST_CASE("tanh satisfies the activation bounds on [-10, 10]")
{
  for (int k = 0; k <= 20000; ++k) {
    const double z = -10.0 + 20.0 * k / 20000.0;
    CHECK(std::abs(activation::dsigma(z)) <= 1.0);
    CHECK(std::abs(activation::d2sigma(z)) <= 0.77);
    CHECK(std::abs(activation::sigma(z)) <= 1.0 + std::abs(z));
  }
  for (double z : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    const double h = 1e-5;
    CHECK(activation::dsigma(z) ==
          doctest::Approx((activation::sigma(z + h) - activation::sigma(z - h)) / (2 * h)).epsilon(1e-9));
    CHECK(activation::d2sigma(z) ==
          doctest::Approx((activation::dsigma(z + h) - activation::dsigma(z - h)) / (2 * h))
            .epsilon(1e-8)
            .scale(1.0));
  }
}

TEST_CASE("architecture validation")
{
  ArchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.kappa_sq() == doctest::Approx(4.0 + cfg.tau * cfg.tau));
  CHECK(cfg.default_alpha() * cfg.kappa_sq() == doctest::Approx(0.5));
  cfg.width = 7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.width = 8;
  cfg.feature_scales = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("apply_A examples")
{
  const auto g = make_grid(16);
  const SampledFunction zero(g, Eigen::VectorXd(Eigen::VectorXd::Zero(16)));
  CHECK(apply_A(zero, 0.2).cwiseAbs().maxCoeff() == 0.0);

  const SampledFunction one(g, Eigen::VectorXd(Eigen::VectorXd::Ones(16)));
  const Eigen::MatrixXd wide = apply_A(one, 1e6);
  for (Eigen::Index j = 0; j < 16; ++j) CHECK(wide(j, 0) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(apply_A(one, 0.0), std::invalid_argument);
}

TEST_CASE("apply_A matches an independent dense quadrature")
{
  const int n = 128;
  const double ell = 0.2;
  const auto g = make_grid(n);
  const SampledFunction u(g, Eigen::VectorXd(g->points()));
  const Eigen::MatrixXd au = apply_A(u, ell);

  std::vector<double> ref(n);
  double sup = 0.0;
  for (int p = 0; p < n; ++p) {
    const double xp = (2.0 * p + 1.0) / (2.0 * n);
    double s = 0.0;
    for (int q = 0; q < n; ++q) {
      const double xq = (2.0 * q + 1.0) / (2.0 * n);
      s += std::exp(-(xp - xq) * (xp - xq) / (2.0 * ell * ell)) * xq / n;
    }
    ref[p] = s;
    sup = std::max(sup, std::abs(s));
  }
  for (int p = 0; p < n; ++p) CHECK(std::abs(au(p, 0) - ref[p] / std::max(1.0, sup)) <= 1e-12);
}

TEST_CASE("feature rows stay inside the unit l1 ball")
{
  const ArchConfig cfg;
  const auto g = make_grid(20);

  const auto f0 = build_features(SampledFunction(g, Eigen::VectorXd(Eigen::VectorXd::Zero(20))), cfg);
  for (Eigen::Index j = 0; j < 20; ++j) {
    CHECK(f0.values()(j, 0) == 0.0);
    CHECK(f0.values()(j, 1) == 0.0);
    CHECK(f0.values()(j, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  const auto f1 = build_features(SampledFunction(g, Eigen::VectorXd(Eigen::VectorXd::Ones(20))), cfg);
  CHECK(f1.values().rowwise().lpNorm<1>().maxCoeff() <= 1.0 + 1e-12);

  std::mt19937_64 rng(77);
  for (int k = 0; k < 100; ++k) {
    const auto grid = make_grid(5 + k % 40, k % 2 ? GridScheme::iid_uniform : GridScheme::equispaced, k);
    const auto f = build_features(sample_on(sample_polynomial(rng, 4), grid), cfg);
    CHECK(f.values().rowwise().lpNorm<1>().maxCoeff() <= 1.0 + 1e-12);
  }

  ArchConfig loose;
  loose.feature_scales = {0.1, 0.8, 0.1};
  CHECK_THROWS_AS(build_features(SampledFunction(g, Eigen::VectorXd(Eigen::VectorXd::Constant(20, 2.0))), loose),
                  std::domain_error);
}

TEST_CASE("symmetric initialization")
{
  for (int width : {2, 8, 50, 256}) {
    ArchConfig cfg;
    cfg.width = width;
    const auto theta = init_symmetric(cfg, 5);
    const auto again = init_symmetric(cfg, 5);
    CHECK(theta.a == again.a);
    CHECK(theta.B == again.B);
    for (int m = 0; m < width; ++m) {
      CHECK(std::abs(theta.B.row(m).norm() - 1.0) <= 1e-12);
      CHECK(theta.a[m] == (m < width / 2 ? cfg.tau : -cfg.tau));
    }
    CHECK(theta.B.topRows(width / 2) == theta.B.bottomRows(width / 2));
    CHECK(theta.norm_sq() == doctest::Approx(width * cfg.tau * cfg.tau + width).epsilon(1e-12));
  }
  ArchConfig odd;
  odd.width = 5;
  CHECK_THROWS_AS(init_symmetric(odd, 0), std::invalid_argument);
}

TEST_CASE("symmetric initialization gives the zero operator")
{
  std::mt19937_64 rng(1);
  ArchConfig cfg;
  cfg.width = 64;
  const auto theta = init_symmetric(cfg, 3);
  for (int k = 0; k < 50; ++k) {
    const auto f = build_features(sample_on(sample_polynomial(rng, 4), make_grid(13)), cfg);
    CHECK(forward(theta, f).values().cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward hand values")
{
  const auto feats = single_row(0.5, 0.0, 0.0);
  Params p(Eigen::Vector2d(1.0, 0.0), RowMatrix::Zero(2, 3));
  p.B(0, 0) = 1.0;
  CHECK(forward(p, feats).values()(0, 0) ==
        doctest::Approx(std::tanh(0.5) / std::sqrt(2.0)).epsilon(1e-15));

  Params cancel(Eigen::Vector2d(1.0, -1.0), RowMatrix::Constant(2, 3, 0.3));
  CHECK(forward(cancel, single_row(0.2, -0.4, 0.1)).values()(0, 0) == 0.0);

  Params wrong(Eigen::Vector2d(1.0, 0.0), RowMatrix::Zero(2, 4));
  CHECK_THROWS_AS(forward(wrong, feats), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central differences")
{
  std::mt19937_64 rng(8);
  ArchConfig cfg;
  const auto grid = make_grid(7);
  for (int width : {2, 8, 32}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto theta = random_params(width, 3, rng);
      const auto feats = build_features(sample_on(sample_polynomial(rng, 4), grid), cfg);
      const Eigen::VectorXd flat = theta.flatten();
      const double h = 1e-6;
      for (Eigen::Index p = 0; p < grid->size(); ++p) {
        const Eigen::VectorXd g = grad(theta, feats, p);
        REQUIRE(g.size() == width * 4);
        double worst = 0.0;
        for (Eigen::Index k = 0; k < flat.size(); ++k) {
          Eigen::VectorXd up = flat, dn = flat;
          up[k] += h;
          dn[k] -= h;
          const double fd = (forward(Params::from_flat(up, width, 3), feats).values()(p, 0) -
                             forward(Params::from_flat(dn, width, 3), feats).values()(p, 0)) /
                            (2 * h);
          worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1e-3}));
        }
        CHECK(worst <= 1e-5);
      }
    }
  }
}

TEST_CASE("gradient structure at the symmetric initialization")
{
  ArchConfig cfg;
  cfg.width = 10;
  const auto theta = init_symmetric(cfg, 2);
  std::mt19937_64 rng(4);
  const auto feats = build_features(sample_on(sample_polynomial(rng, 4), make_grid(6)), cfg);
  const Eigen::VectorXd g = grad(theta, feats, 2);
  const double s = 1.0 / std::sqrt(10.0);
  for (int m = 0; m < 5; ++m) {
    CHECK(g[m] == g[m + 5]);
    CHECK(g[m] == doctest::Approx(s * std::tanh(theta.B.row(m).dot(feats.values().row(2)))));
  }
  const Eigen::MatrixXd jac = jacobian(theta, feats);
  for (Eigen::Index p = 0; p < 6; ++p) CHECK((jac.row(p).transpose() - grad(theta, feats, p)).norm() == 0.0);

  const auto zero = single_row(0.0, 0.0, 0.0);
  CHECK(grad(theta, zero, 0).head(10).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("param_distance")
{
  ArchConfig cfg;
  cfg.width = 6;
  const auto theta0 = init_symmetric(cfg, 1);
  CHECK(param_distance(theta0, theta0) == 0.0);

  auto shifted = theta0;
  shifted.a[0] += 1.0;
  CHECK(param_distance(shifted, theta0) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    auto dir = random_params(6, 3, rng);
    dir = dir * (0.5 / std::sqrt(dir.norm_sq()));
    CHECK(std::abs(param_distance(theta0 + dir, theta0) - 0.5) <= 1e-12);
  }
  ArchConfig wider;
  wider.width = 8;
  CHECK_THROWS_AS(param_distance(init_symmetric(wider, 1), theta0), std::invalid_argument);
}

TEST_CASE("params flat layout and JSON round trip")
{
  std::mt19937_64 rng(6);
  const auto p = random_params(4, 3, rng);
  const Eigen::VectorXd flat = p.flatten();
  CHECK(flat[4 + 1 * 3 + 2] == p.B(1, 2));
  const auto q = Params::from_flat(flat, 4, 3);
  CHECK(q.a == p.a);
  CHECK(q.B == p.B);
  const auto r = params_from_json(params_to_json(p, 2.0));
  CHECK(r.a == p.a);
  CHECK(r.B == p.B);
}

TEST_CASE("Taylor remainder shrinks with width at unit perturbation")
{
  std::mt19937_64 rng(12);
  ArchConfig base;
  const auto grid = make_grid(10);
  std::vector<FeatureField> probes;
  for (int k = 0; k < 4; ++k) probes.push_back(build_features(sample_on(sample_polynomial(rng, 4), grid), base));

  std::vector<double> widths, rems;
  for (int width : {16, 64, 256, 1024}) {
    ArchConfig cfg = base;
    cfg.width = width;
    const auto theta0 = init_symmetric(cfg, 1);
    const auto theta = theta0 + coherent_direction(width, 3);
    double r = 0.0;
    for (const auto& f : probes) r = std::max(r, taylor_remainder(theta, theta0, f));
    widths.push_back(width);
    rems.push_back(r);
  }
  const double slope = loglog_slope(widths, rems);
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
}
