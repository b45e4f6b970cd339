#include "ntkop/experiment.hpp"

#include "ntkop/ntk.hpp"
#include "ntkop/serialize.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <stdexcept>

namespace ntkop {

namespace {
const std::map<ExperimentKind, std::string> kKindNames{
  {ExperimentKind::gen_data, "gen-data"},
  {ExperimentKind::train_one, "train-one"},
  {ExperimentKind::sweep_m, "sweep-m"},
  {ExperimentKind::sweep_nx, "sweep-nx"},
  {ExperimentKind::sweep_t, "sweep-t"},
  {ExperimentKind::grid_mt, "grid-mt"},
  {ExperimentKind::grid_nxt, "grid-nxt"},
  {ExperimentKind::ntk_convergence, "ntk-convergence"},
  {ExperimentKind::taylor_check, "taylor-check"},
  {ExperimentKind::spectrum, "spectrum"},
};
} // namespace

std::string to_string(ExperimentKind kind) { return kKindNames.at(kind); }

ExperimentKind experiment_kind_from_string(const std::string& name)
{
  for (const auto& [k, v] : kKindNames)
    if (v == name) return k;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

ArchConfig ExperimentConfig::arch() const { return arch(width); }

ArchConfig ExperimentConfig::arch(int width_override) const
{
  ArchConfig a;
  a.width = width_override;
  a.tau = tau;
  a.kernel_bandwidth = bandwidth;
  return a;
}

double ExperimentConfig::step_size() const
{
  return alpha ? *alpha : arch().default_alpha();
}

nlohmann::json ExperimentConfig::to_json() const
{
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["n_u"] = n_u;
  j["n_u_test"] = n_u_test;
  j["n_x"] = n_x;
  j["max_degree"] = max_degree;
  j["eval_points"] = eval_points;
  j["scheme"] = scheme;
  j["train_data"] = train_data;
  j["test_data"] = test_data;
  j["width"] = width;
  j["tau"] = tau;
  j["bandwidth"] = bandwidth;
  j["iterations"] = iterations;
  j["alpha"] = step_size();
  j["record_every"] = record_every;
  j["linearized"] = linearized;
  j["track_remainder"] = track_remainder;
  j["widths"] = widths;
  j["grid_sizes"] = grid_sizes;
  j["budgets"] = budgets;
  j["norms"] = norms;
  j["lambdas"] = lambdas;
  j["m_ref"] = m_ref;
  j["n_rep"] = n_rep;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  if (j.contains("kind")) c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
  get("n_u", c.n_u);
  get("n_u_test", c.n_u_test);
  get("n_x", c.n_x);
  get("max_degree", c.max_degree);
  get("eval_points", c.eval_points);
  get("scheme", c.scheme);
  get("train_data", c.train_data);
  get("test_data", c.test_data);
  get("width", c.width);
  get("tau", c.tau);
  get("bandwidth", c.bandwidth);
  get("iterations", c.iterations);
  if (j.contains("alpha") && !j.at("alpha").is_null()) c.alpha = j.at("alpha").get<double>();
  get("record_every", c.record_every);
  get("linearized", c.linearized);
  get("track_remainder", c.track_remainder);
  get("widths", c.widths);
  get("grid_sizes", c.grid_sizes);
  get("budgets", c.budgets);
  get("norms", c.norms);
  get("lambdas", c.lambdas);
  get("m_ref", c.m_ref);
  get("n_rep", c.n_rep);
  get("seed", c.seed);
  get("threads", c.threads);
  get("out_dir", c.out_dir);
  return c;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

void ExperimentConfig::validate() const
{
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("invalid config: " + msg);
  };
  require(n_u >= 1 && n_u_test >= 1, "n_u and n_u_test must be >= 1");
  require(n_x >= 2, "n_x must be >= 2");
  require(max_degree >= 0, "max_degree must be >= 0");
  require(eval_points >= 2, "eval_points must be >= 2");
  require(iterations >= 0, "iterations must be >= 0");
  require(threads >= 1, "threads must be >= 1");
  require(record_every >= 1, "record_every must be >= 1");
  require(n_rep >= 1 && m_ref >= 2, "n_rep >= 1 and m_ref >= 2 required");
  grid_scheme_from_string(scheme);
  arch().validate();
  const double a = step_size();
  require(a > 0.0 && a < 1.0 / arch().kappa_sq(), "alpha must lie in (0, 1/kappa^2)");
  for (int w : widths) require(w >= 2 && w % 2 == 0, "sweep widths must be even and >= 2");
  for (int n : grid_sizes) require(n >= 2, "grid sizes must be >= 2");
  for (int t : budgets) require(t >= 0, "budgets must be >= 0");
  for (double s : norms) require(s > 0.0, "perturbation norms must be positive");
  for (double l : lambdas) require(l > 0.0, "lambdas must be positive");
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_hash)
{
  std::string out = "axis1,axis2,test_risk,config_hash\n";
  for (const auto& r : rows)
    out += std::to_string(r.axis1) + ',' + std::to_string(r.axis2) + ',' +
           format_double(r.test_risk) + ',' + config_hash + '\n';
  return out;
}

namespace {

struct Data {
  Dataset train;
  Dataset test;
};

GridPtr training_grid(const ExperimentConfig& cfg, int n_x)
{
  return make_grid(n_x, grid_scheme_from_string(cfg.scheme), cfg.seed);
}

Data load_or_make_data(const ExperimentConfig& cfg)
{
  Data d{cfg.train_data.empty()
           ? make_dataset(cfg.n_u, training_grid(cfg, cfg.n_x), cfg.max_degree, cfg.seed, Split::train)
           : load_dataset(cfg.train_data),
         cfg.test_data.empty()
           ? make_dataset(cfg.n_u_test, training_grid(cfg, cfg.n_x), cfg.max_degree,
                          cfg.test_seed(), Split::test)
           : load_dataset(cfg.test_data)};
  return d;
}

TrainConfig train_config(const ExperimentConfig& cfg, GridPtr eval_grid, int iterations,
                         std::vector<int> record_steps = {})
{
  TrainConfig t;
  t.alpha = cfg.step_size();
  t.iterations = iterations;
  t.linearized = cfg.linearized;
  t.record_every = cfg.record_every;
  t.record_steps = std::move(record_steps);
  t.eval_grid = std::move(eval_grid);
  t.track_remainder = cfg.track_remainder;
  t.threads = cfg.threads;
  return t;
}

double risk_at(const TrainReport& report, int t)
{
  for (const auto& r : report.records)
    if (r.t == t) return r.test_risk;
  throw std::logic_error("no record at t = " + std::to_string(t));
}

class Writer {
public:
  Writer(const ExperimentConfig& cfg, ExperimentOutput& out) : cfg_(cfg), out_(out)
  {
    std::filesystem::create_directories(cfg.out_dir);
  }
  void write(const std::string& name, const std::string& text)
  {
    const auto path = (std::filesystem::path(cfg_.out_dir) / name).string();
    write_text_file(path, text);
    out_.files.push_back(path);
  }

private:
  const ExperimentConfig& cfg_;
  ExperimentOutput& out_;
};

std::vector<SweepRow> run_width_sweep(const ExperimentConfig& cfg, const Data& data,
                                      GridPtr eval_grid, const std::vector<int>& budgets,
                                      bool budget_first)
{
  const int t_max = budgets.empty() ? 0 : *std::max_element(budgets.begin(), budgets.end());
  const TrainingSet eval_set = make_eval_set(data.test, cfg.arch(), eval_grid);
  const TrainingSet train_set = make_training_set(data.train, cfg.arch());
  std::vector<SweepRow> rows;
  const std::vector<int> widths = budget_first ? std::vector<int>{cfg.width} : cfg.widths;
  for (int m : widths) {
    const auto report =
      train(train_config(cfg, eval_grid, t_max, budgets), cfg.arch(m), train_set, eval_set, cfg.seed);
    for (int t : budgets)
      rows.push_back(budget_first ? SweepRow{t, m, risk_at(report, t)}
                                  : SweepRow{m, t, risk_at(report, t)});
  }
  return rows;
}

std::vector<SweepRow> run_grid_sweep(const ExperimentConfig& cfg, const Data& data,
                                     GridPtr eval_grid, const std::vector<int>& budgets)
{
  const int t_max = budgets.empty() ? 0 : *std::max_element(budgets.begin(), budgets.end());
  const TrainingSet eval_set = make_eval_set(data.test, cfg.arch(), eval_grid);
  std::vector<SweepRow> rows;
  for (int n_x : cfg.grid_sizes) {
    const Dataset regridded = regrid(data.train, training_grid(cfg, n_x));
    const auto report = train(train_config(cfg, eval_grid, t_max, budgets), cfg.arch(),
                              make_training_set(regridded, cfg.arch()), eval_set, cfg.seed);
    for (int t : budgets) rows.push_back({n_x, t, risk_at(report, t)});
  }
  return rows;
}

} // namespace

ExperimentOutput run(const ExperimentConfig& cfg)
{
  cfg.validate();
  ExperimentOutput out;
  Writer writer(cfg, out);
  const std::string hash = cfg.hash();
  const std::string kind = to_string(cfg.kind);
  writer.write("config_" + hash + ".json", cfg.to_json().dump(2) + "\n");
  out.summary["config_hash"] = hash;
  out.summary["kind"] = kind;

  const Data data = load_or_make_data(cfg);
  const GridPtr eval_grid = make_grid(cfg.eval_points, GridScheme::equispaced);

  switch (cfg.kind) {
  case ExperimentKind::gen_data:
    writer.write("dataset_train_" + hash + ".json", dataset_to_json(data.train).dump() + "\n");
    writer.write("dataset_test_" + hash + ".json", dataset_to_json(data.test).dump() + "\n");
    break;

  case ExperimentKind::train_one: {
    const auto report =
      train(train_config(cfg, eval_grid, cfg.iterations), cfg.arch(), data.train, data.test, cfg.seed);
    writer.write("train_" + hash + ".csv", report_csv(report, hash));
    writer.write("params_" + hash + ".json",
                 params_to_json(report.final_params, cfg.tau).dump() + "\n");
    out.summary["final_test_risk"] = report.records.back().test_risk;
    out.summary["final_emp_risk"] = report.records.back().emp_risk;
    out.summary["max_weight_dist"] = report.max_weight_dist();
    break;
  }

  case ExperimentKind::sweep_m: {
    const auto rows = run_width_sweep(cfg, data, eval_grid, {cfg.iterations}, false);
    writer.write("sweep_m_" + hash + ".csv", sweep_csv(rows, hash));
    break;
  }
  case ExperimentKind::sweep_t: {
    const auto rows = run_width_sweep(cfg, data, eval_grid, cfg.budgets, true);
    writer.write("sweep_t_" + hash + ".csv", sweep_csv(rows, hash));
    break;
  }
  case ExperimentKind::grid_mt: {
    const auto rows = run_width_sweep(cfg, data, eval_grid, cfg.budgets, false);
    writer.write("grid_mt_" + hash + ".csv", sweep_csv(rows, hash));
    break;
  }
  case ExperimentKind::sweep_nx: {
    const auto rows = run_grid_sweep(cfg, data, eval_grid, {cfg.iterations});
    writer.write("sweep_nx_" + hash + ".csv", sweep_csv(rows, hash));
    break;
  }
  case ExperimentKind::grid_nxt: {
    const auto rows = run_grid_sweep(cfg, data, eval_grid, cfg.budgets);
    writer.write("grid_nxt_" + hash + ".csv", sweep_csv(rows, hash));
    break;
  }

  case ExperimentKind::ntk_convergence: {
    if (data.train.size() < 2)
      throw std::invalid_argument("invalid config: ntk-convergence needs n_u >= 2");
    const FeatureField fu = build_features(data.train.inputs[0], cfg.arch());
    const FeatureField fv = build_features(data.train.inputs[1], cfg.arch());
    const auto ref = reference_kernel(fu, fv, cfg.arch(), cfg.m_ref, cfg.widths, cfg.n_rep,
                                      cfg.seed + 1, cfg.seed);
    std::string csv = "m,seed,hs_dev,config_hash\n";
    std::map<int, std::vector<double>> by_width;
    for (const auto& d : ref.deviations) {
      csv += std::to_string(d.width) + ',' + std::to_string(d.seed) + ',' +
             format_double(d.hs_dev) + ',' + hash + '\n';
      by_width[d.width].push_back(d.hs_dev);
    }
    writer.write("ntk_deviation_" + hash + ".csv", csv);
    std::vector<double> ms, meds;
    for (const auto& [m, devs] : by_width) {
      ms.push_back(m);
      meds.push_back(median(devs));
    }
    if (ms.size() >= 2) out.summary["slope"] = loglog_slope(ms, meds);
    break;
  }

  case ExperimentKind::taylor_check: {
    std::vector<FeatureField> probes;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, data.train.size()); ++i)
      probes.push_back(build_features(data.train.inputs[i], cfg.arch()));
    auto sup_remainder = [&](int m, double norm) {
      const Params theta0 = init_symmetric(cfg.arch(m), cfg.seed);
      const Params theta = theta0 + coherent_direction(m, theta0.d_tilde()) * norm;
      double sup = 0.0;
      for (const auto& f : probes) sup = std::max(sup, taylor_remainder(theta, theta0, f));
      return sup;
    };
    std::string csv = "sweep,m,norm,remainder,config_hash\n";
    std::vector<double> ms, rm, ns, rn;
    for (int m : cfg.widths) {
      const double r = sup_remainder(m, 1.0);
      csv += "width," + std::to_string(m) + ",1," + format_double(r) + ',' + hash + '\n';
      ms.push_back(m);
      rm.push_back(r);
    }
    for (double s : cfg.norms) {
      const double r = sup_remainder(cfg.width, s);
      csv += "norm," + std::to_string(cfg.width) + ',' + format_double(s) + ',' +
             format_double(r) + ',' + hash + '\n';
      ns.push_back(s);
      rn.push_back(r);
    }
    writer.write("taylor_" + hash + ".csv", csv);
    if (ms.size() >= 2) out.summary["width_slope"] = loglog_slope(ms, rm);
    if (ns.size() >= 2) out.summary["norm_slope"] = loglog_slope(ns, rn);
    break;
  }

  case ExperimentKind::spectrum: {
    const TrainingSet set = make_training_set(data.train, cfg.arch());
    const Params theta0 = init_symmetric(cfg.arch(), cfg.seed);
    const auto gram = GramTensor::assemble(theta0, set.features, cfg.tau);
    const auto rep = spectral_report(gram, cfg.lambdas);
    std::string csv = "lambda,n_eff,config_hash\n";
    for (std::size_t k = 0; k < rep.lambdas.size(); ++k)
      csv += format_double(rep.lambdas[k]) + ',' + format_double(rep.n_eff[k]) + ',' + hash + '\n';
    writer.write("spectrum_" + hash + ".csv", csv);
    std::string eig = "index,eigenvalue,config_hash\n";
    for (Eigen::Index k = 0; k < rep.eigenvalues.size(); ++k)
      eig += std::to_string(k) + ',' + format_double(rep.eigenvalues[k]) + ',' + hash + '\n';
    writer.write("eigenvalues_" + hash + ".csv", eig);
    out.summary["decay_exponent"] = rep.decay_exponent;
    break;
  }
  }
  return out;
}

} // namespace ntkop
