#include "ntkop/train.hpp"

#include "ntkop/ntk.hpp"
#include "ntkop/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace ntkop {

TrainingSet make_training_set(const Dataset& data, const ArchConfig& arch)
{
  TrainingSet set;
  set.grid = data.grid;
  set.features.reserve(data.size());
  set.targets.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    set.features.push_back(build_features(data.inputs[i], arch));
    set.targets.push_back(data.targets[i].scalar());
  }
  return set;
}

TrainingSet make_eval_set(const Dataset& data, const ArchConfig& arch, GridPtr eval_grid)
{
  return make_training_set(regrid(data, std::move(eval_grid)), arch);
}

namespace {

struct Gradient {
  Eigen::VectorXd a;
  Eigen::MatrixXd B;
};

// Hidden activations at one parameter point for one input.
struct Activations {
  Eigen::MatrixXd S; // sigma(z), n_x x M
  Eigen::MatrixXd D; // sigma'(z)
};

Activations activations(const Params& theta, const FeatureField& feats)
{
  const Eigen::MatrixXd Z = feats.values() * theta.B.transpose();
  Activations act;
  act.S = Z.unaryExpr([](double z) { return activation::sigma(z); });
  act.D = Z.unaryExpr([](double z) { return activation::dsigma(z); });
  return act;
}

void accumulate_sample(const Params& theta, const Params& src, const FeatureField& feats,
                       const Eigen::VectorXd& target, StepMode mode, Gradient& acc)
{
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(src.width()));
  const Activations act = activations(src, feats);
  Eigen::VectorXd pred = act.S * src.a * inv_sqrt_m;
  if (mode == StepMode::linearized) {
    const Params delta = theta - src;
    const Eigen::MatrixXd JdB = feats.values() * delta.B.transpose();
    pred += (act.S * delta.a + act.D.cwiseProduct(JdB) * src.a) * inv_sqrt_m;
  }
  const Eigen::VectorXd r =
    feats.grid().weights().cwiseProduct(pred - target);

  acc.a.noalias() += act.S.transpose() * r * inv_sqrt_m;
  Eigen::MatrixXd gB = (act.D.array().colwise() * r.array()).matrix().transpose() *
                       feats.values();
  gB.array().colwise() *= (src.a * inv_sqrt_m).array();
  acc.B += gB;
}

void check_sizes(const TrainingSet& data)
{
  if (data.features.size() != data.targets.size() || data.features.empty())
    throw std::invalid_argument("training set: features and targets must be non-empty and aligned");
}

} // namespace

Params gd_step(const Params& theta, const Params& grad_source, const TrainingSet& data,
               double alpha, StepMode mode, int threads)
{
  check_sizes(data);
  if (mode == StepMode::standard && &theta != &grad_source &&
      (theta.a != grad_source.a || theta.B != grad_source.B))
    throw std::invalid_argument("gd_step: standard mode takes gradients at theta itself");
  const Params& src = mode == StepMode::standard ? theta : grad_source;

  const std::size_t n = data.size();
  const std::size_t chunks = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n);
  std::vector<Gradient> partial(chunks);
  for (auto& g : partial) {
    g.a = Eigen::VectorXd::Zero(src.width());
    g.B = Eigen::MatrixXd::Zero(src.width(), src.d_tilde());
  }
  auto work = [&](std::size_t c) {
    const std::size_t begin = c * n / chunks;
    const std::size_t end = (c + 1) * n / chunks;
    for (std::size_t i = begin; i < end; ++i)
      accumulate_sample(theta, src, data.features[i], data.targets[i], mode, partial[c]);
  };
  if (chunks == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(work, c);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c = 1; c < chunks; ++c) {
    partial[0].a += partial[c].a;
    partial[0].B += partial[c].B;
  }

  const double scale = alpha / static_cast<double>(n);
  Params next(theta.a - scale * partial[0].a, theta.B - scale * partial[0].B);
  const double biggest =
    std::max(next.a.cwiseAbs().maxCoeff(), next.B.cwiseAbs().maxCoeff());
  if (!next.is_finite() || biggest > kOverflowGuard) {
    std::ostringstream msg;
    msg << "gd_step: iterate diverged (max |theta| = " << biggest << ", alpha = " << alpha
        << "); the step size is not admissible";
    throw DivergenceError(msg.str());
  }
  return next;
}

namespace {

template <class Predict>
double mean_weighted_sq_error(const TrainingSet& data, Predict&& predict)
{
  check_sizes(data);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd err = predict(data.features[i]) - data.targets[i];
    total += data.features[i].grid().weights().dot(err.cwiseAbs2());
  }
  return total / static_cast<double>(data.size());
}

} // namespace

double empirical_risk(const Params& theta, const TrainingSet& data)
{
  return mean_weighted_sq_error(
    data, [&](const FeatureField& f) { return forward(theta, f).scalar(); });
}

double eval_risk(const Params& theta, const TrainingSet& eval_set)
{
  return empirical_risk(theta, eval_set);
}

double eval_risk(const Params& theta, const Dataset& data, const ArchConfig& arch,
                 GridPtr eval_grid)
{
  return eval_risk(theta, make_eval_set(data, arch, std::move(eval_grid)));
}

void TrainConfig::validate(const ArchConfig& arch) const
{
  if (!(alpha > 0.0)) throw std::invalid_argument("TrainConfig: alpha must be positive");
  if (!(alpha < 1.0 / arch.kappa_sq()))
    throw std::invalid_argument("TrainConfig: alpha must be below 1/kappa^2 = " +
                                format_double(1.0 / arch.kappa_sq()));
  if (iterations < 0) throw std::invalid_argument("TrainConfig: T must be >= 0");
  if (record_every < 1) throw std::invalid_argument("TrainConfig: record_every must be >= 1");
  if (!eval_grid) throw std::invalid_argument("TrainConfig: eval grid required");
  if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
}

double TrainReport::max_weight_dist() const
{
  double best = 0.0;
  for (const auto& r : records) best = std::max(best, r.weight_dist);
  return best;
}

TrainReport train(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_data,
                  const Dataset& test_data, std::uint64_t seed)
{
  cfg.validate(arch);
  return train(cfg, arch, make_training_set(train_data, arch),
               make_eval_set(test_data, arch, cfg.eval_grid), seed);
}

TrainReport train(const TrainConfig& cfg, const ArchConfig& arch, const TrainingSet& train_set,
                  const TrainingSet& eval_set, std::uint64_t seed)
{
  cfg.validate(arch);
  const Params theta0 = init_symmetric(arch, seed);
  Params theta = theta0;
  const StepMode mode = cfg.linearized ? StepMode::linearized : StepMode::standard;

  auto predictor = [&](const Params& th) {
    return [&th, &theta0, mode](const FeatureField& f) -> Eigen::VectorXd {
      if (mode == StepMode::linearized)
        return forward(theta0, f).scalar() + linearized_iterate(th, theta0, f).scalar();
      return forward(th, f).scalar();
    };
  };
  auto wanted = [&](int t) {
    if (t == 0 || t == cfg.iterations) return true;
    if (!cfg.record_steps.empty())
      return std::find(cfg.record_steps.begin(), cfg.record_steps.end(), t) !=
             cfg.record_steps.end();
    return t % cfg.record_every == 0;
  };

  TrainReport report;
  for (int t = 0;; ++t) {
    if (wanted(t)) {
      TrainRecord rec;
      rec.t = t;
      rec.emp_risk = mean_weighted_sq_error(train_set, predictor(theta));
      rec.test_risk = mean_weighted_sq_error(eval_set, predictor(theta));
      rec.weight_dist = param_distance(theta, theta0);
      if (cfg.track_remainder) {
        double sup = 0.0;
        for (const auto& f : train_set.features)
          sup = std::max(sup, taylor_remainder(theta, theta0, f));
        rec.remainder_sup = sup;
      }
      report.records.push_back(rec);
    }
    if (t == cfg.iterations) break;
    theta = gd_step(theta, mode == StepMode::linearized ? theta0 : theta, train_set,
                    cfg.alpha, mode, cfg.threads);
  }
  report.initial = theta0;
  report.final_params = std::move(theta);
  return report;
}

std::string report_csv(const TrainReport& report, const std::string& config_hash)
{
  std::string out = "t,emp_risk,test_risk,weight_dist,remainder_sup,config_hash\n";
  for (const auto& r : report.records) {
    out += std::to_string(r.t) + ',' + format_double(r.emp_risk) + ',' +
           format_double(r.test_risk) + ',' + format_double(r.weight_dist) + ',' +
           (std::isnan(r.remainder_sup) ? std::string() : format_double(r.remainder_sup)) +
           ',' + config_hash + '\n';
  }
  return out;
}

} // namespace ntkop
