// ntkop: experiment harness for the two-layer neural operator.
//
//   ntkop gen-data        --n-u 400 --n-x 50 --out data/
//   ntkop train-one       --m 50 --t 50 --out runs/
//   ntkop sweep mt        --widths 6,10,20 --budgets 5,10,20 --out runs/
//   ntkop ntk-convergence --widths 64,256,1024,4096 --n-rep 10
//   ntkop taylor-check    --widths 16,64,256,1024 --m 1024
//   ntkop spectrum        --n-u 50 --n-x 20 --m 256

#include "ntkop/experiment.hpp"
#include "ntkop/serialize.hpp"

#include <CLI11.hpp>

#include <functional>
#include <map>
#include <optional>
#include <type_traits>
#include <iostream>

namespace {

using ntkop::ExperimentConfig;
using Apply = std::function<void(ExperimentConfig& dst, const ExperimentConfig& src)>;

struct Bound {
  CLI::Option* option;
  Apply apply;
};

template <class T>
void bind_option(CLI::App* app, std::vector<Bound>& bound, const std::string& flags, T ExperimentConfig::*field,
          ExperimentConfig& staging, const std::string& help)
{
  CLI::Option* opt = nullptr;
  if constexpr (std::is_same_v<T, bool>)
    opt = app->add_flag(flags, staging.*field, help);
  else if constexpr (std::is_same_v<T, std::string>)
    opt = app->add_option(flags, staging.*field, help);
  else
    opt = app->add_option(flags, staging.*field, help)->delimiter(',');
  bound.push_back({opt, [field](ExperimentConfig& dst, const ExperimentConfig& src) {
                     dst.*field = src.*field;
                   }});
}

void add_common(CLI::App* app, ExperimentConfig& s, std::vector<Bound>& b, double& alpha)
{
  bind_option(app, b, "--n-u", &ExperimentConfig::n_u, s, "training functions");
  bind_option(app, b, "--n-u-test", &ExperimentConfig::n_u_test, s, "test functions");
  bind_option(app, b, "--n-x", &ExperimentConfig::n_x, s, "training grid points");
  bind_option(app, b, "--m", &ExperimentConfig::width, s, "width M (even)");
  bind_option(app, b, "--t", &ExperimentConfig::iterations, s, "GD iterations T");
  bind_option(app, b, "--tau", &ExperimentConfig::tau, s, "output-layer init scale");
  bind_option(app, b, "--seed", &ExperimentConfig::seed, s, "random seed");
  bind_option(app, b, "--out", &ExperimentConfig::out_dir, s, "output directory");
  bind_option(app, b, "--threads", &ExperimentConfig::threads, s, "worker threads per GD step");
  bind_option(app, b, "--scheme", &ExperimentConfig::scheme, s, "grid scheme: equispaced | iid_uniform");
  bind_option(app, b, "--max-degree", &ExperimentConfig::max_degree, s, "polynomial degree");
  bind_option(app, b, "--eval-points", &ExperimentConfig::eval_points, s, "evaluation grid size");
  bind_option(app, b, "--bandwidth", &ExperimentConfig::bandwidth, s, "Gaussian kernel bandwidth of A");
  bind_option(app, b, "--record-every", &ExperimentConfig::record_every, s, "metric recording period");
  bind_option(app, b, "--linearized", &ExperimentConfig::linearized, s, "train the linearized model");
  bind_option(app, b, "--track-remainder", &ExperimentConfig::track_remainder, s,
       "record sup |G - H| over the training inputs");
  bind_option(app, b, "--train-data", &ExperimentConfig::train_data, s, "training dataset JSON");
  bind_option(app, b, "--test-data", &ExperimentConfig::test_data, s, "test dataset JSON");
  bind_option(app, b, "--widths", &ExperimentConfig::widths, s, "width sweep, comma separated");
  bind_option(app, b, "--grid-sizes", &ExperimentConfig::grid_sizes, s, "n_x sweep");
  bind_option(app, b, "--budgets", &ExperimentConfig::budgets, s, "T sweep");
  bind_option(app, b, "--norms", &ExperimentConfig::norms, s, "perturbation norms (taylor-check)");
  bind_option(app, b, "--lambdas", &ExperimentConfig::lambdas, s, "lambda grid (spectrum)");
  bind_option(app, b, "--m-ref", &ExperimentConfig::m_ref, s, "reference width for K_infinity");
  bind_option(app, b, "--n-rep", &ExperimentConfig::n_rep, s, "seeds per width");
  auto* a = app->add_option("--alpha", alpha, "step size (default 0.5/kappa^2)");
  b.push_back({a, [&alpha](ExperimentConfig& dst, const ExperimentConfig&) { dst.alpha = alpha; }});
  auto* c = app->add_option("--config", "JSON config; explicit flags override it");
  b.push_back({c, nullptr});
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Neural operator NTK experiments"};
  app.require_subcommand(1);

  ExperimentConfig staging;
  double alpha = 0.0;
  std::vector<Bound> bound;
  std::string sweep_kind;

  struct Sub {
    CLI::App* app;
    std::optional<ntkop::ExperimentKind> kind;
  };
  std::vector<Sub> subs;
  auto make = [&](const std::string& name, const std::string& help,
                  std::optional<ntkop::ExperimentKind> kind) {
    auto* sub = app.add_subcommand(name, help);
    std::vector<Bound> local;
    add_common(sub, staging, local, alpha);
    local.back().option->check(CLI::ExistingFile);
    for (auto& l : local) bound.push_back(l);
    subs.push_back({sub, kind});
    return sub;
  };
  using K = ntkop::ExperimentKind;
  make("gen-data", "generate train/test Poisson datasets", K::gen_data);
  make("train-one", "one GD run, timeline CSV", K::train_one);
  auto* sweep = make("sweep", "test-risk sweeps: m | nx | t | mt | nxt", std::nullopt);
  sweep->add_option("kind", sweep_kind, "sweep axis")
    ->required()
    ->check(CLI::IsMember({"m", "nx", "t", "mt", "nxt"}));
  make("ntk-convergence", "HS deviation of K_M from a wide reference", K::ntk_convergence);
  make("taylor-check", "Taylor remainder scaling in M and perturbation norm", K::taylor_check);
  make("spectrum", "Gram spectrum and effective dimension", K::spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    for (const auto& b : bound)
      if (b.option->count() > 0 && b.option->get_name() == "--config")
        cfg = ExperimentConfig::from_json(
          nlohmann::json::parse(ntkop::read_text_file(b.option->as<std::string>())));
    for (const auto& b : bound)
      if (b.apply && b.option->count() > 0) b.apply(cfg, staging);

    for (const auto& s : subs) {
      if (!s.app->parsed()) continue;
      if (s.kind) {
        cfg.kind = *s.kind;
      } else {
        static const std::map<std::string, K> sweeps{{"m", K::sweep_m},   {"nx", K::sweep_nx},
                                                     {"t", K::sweep_t},   {"mt", K::grid_mt},
                                                     {"nxt", K::grid_nxt}};
        cfg.kind = sweeps.at(sweep_kind);
      }
    }

    const auto out = ntkop::run(cfg);
    for (const auto& f : out.files) std::cout << f << '\n';
    std::cout << out.summary.dump() << '\n';
  } catch (const ntkop::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
