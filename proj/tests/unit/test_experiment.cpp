#include "ntkop/experiment.hpp"
#include "ntkop/serialize.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace ntkop;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const auto p = fs::temp_directory_path() / ("ntkop_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(ExperimentKind kind, const fs::path& dir)
{
  ExperimentConfig c;
  c.kind = kind;
  c.n_u = 12;
  c.n_u_test = 10;
  c.n_x = 8;
  c.eval_points = 64;
  c.width = 10;
  c.iterations = 6;
  c.widths = {4, 8};
  c.grid_sizes = {5, 8};
  c.budgets = {0, 3, 6};
  c.m_ref = 512;
  c.n_rep = 3;
  c.out_dir = dir.string();
  return c;
}

std::vector<std::string> lines_of(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string file_with_prefix(const ExperimentOutput& out, const std::string& prefix)
{
  for (const auto& f : out.files)
    if (fs::path(f).filename().string().rfind(prefix, 0) == 0) return f;
  FAIL("no output file starting with " << prefix);
  return {};
}

} // namespace

TEST_CASE("config JSON round trip and hash")
{
  ExperimentConfig c;
  c.kind = ExperimentKind::grid_mt;
  c.alpha = 0.05;
  c.widths = {4, 6};
  const auto d = ExperimentConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  CHECK(d.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  auto moved = c;
  moved.out_dir = "elsewhere";
  CHECK(moved.hash() == c.hash());
  auto reseeded = c;
  reseeded.seed = 1;
  CHECK(reseeded.hash() != c.hash());

  for (auto k : {ExperimentKind::gen_data, ExperimentKind::sweep_nx, ExperimentKind::spectrum})
    CHECK(experiment_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(experiment_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("invalid configs are usage errors")
{
  ExperimentConfig c;
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.width = 7;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.widths = {5};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.scheme = "chebyshev";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.n_x = 1;
  CHECK_THROWS_AS(run(c), std::invalid_argument);
}

TEST_CASE("gen-data writes loadable datasets")
{
  const auto dir = scratch("gen");
  const auto out = run(small(ExperimentKind::gen_data, dir));
  const auto train = load_dataset(file_with_prefix(out, "dataset_train_"));
  const auto test = load_dataset(file_with_prefix(out, "dataset_test_"));
  CHECK(train.size() == 12);
  CHECK(test.size() == 10);
  CHECK(train.split == Split::train);
  CHECK(test.split == Split::test);
  CHECK(train.seed != test.seed);
  CHECK(fs::exists(file_with_prefix(out, "config_")));
  fs::remove_all(dir);
}

TEST_CASE("train-one output, determinism and dataset files")
{
  const auto d1 = scratch("t1"), d2 = scratch("t2"), d3 = scratch("t3");
  const auto cfg = small(ExperimentKind::train_one, d1);
  const auto a = run(cfg);
  auto cfg2 = cfg;
  cfg2.out_dir = d2.string();
  const auto b = run(cfg2);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k)
    CHECK(read_text_file(a.files[k]) == read_text_file(b.files[k]));

  const auto csv = lines_of(read_text_file(file_with_prefix(a, "train_")));
  CHECK(csv.front() == "t,emp_risk,test_risk,weight_dist,remainder_sup,config_hash");
  CHECK(csv.size() == 1 + 7);
  for (std::size_t k = 1; k < csv.size(); ++k) CHECK(csv[k].substr(csv[k].rfind(',') + 1) == cfg.hash());
  const auto theta = load_params(file_with_prefix(a, "params_"));
  CHECK(theta.width() == 10);

  // Feeding the generated datasets back in reproduces the same run.
  const auto gen = run(small(ExperimentKind::gen_data, d3));
  auto from_files = cfg;
  from_files.out_dir = d3.string();
  from_files.train_data = file_with_prefix(gen, "dataset_train_");
  from_files.test_data = file_with_prefix(gen, "dataset_test_");
  const auto c = run(from_files);
  CHECK(c.summary["final_test_risk"] == a.summary["final_test_risk"]);
  for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("sweeps emit one row per cell")
{
  const auto dir = scratch("sweeps");
  const auto mt = run(small(ExperimentKind::grid_mt, dir));
  const auto mt_rows = lines_of(read_text_file(file_with_prefix(mt, "grid_mt_")));
  CHECK(mt_rows.front() == "axis1,axis2,test_risk,config_hash");
  CHECK(mt_rows.size() == 1 + 2 * 3);
  CHECK(mt_rows[1].rfind("4,0,", 0) == 0);
  CHECK(mt_rows[6].rfind("8,6,", 0) == 0);

  auto m_cfg = small(ExperimentKind::sweep_m, dir);
  const auto m = run(m_cfg);
  const auto m_rows = lines_of(read_text_file(file_with_prefix(m, "sweep_m_")));
  CHECK(m_rows.size() == 1 + 2);
  // M = 8 at T = 6 appears in both sweeps with the same risk.
  CHECK(m_rows[2].substr(0, m_rows[2].rfind(',')) == mt_rows[6].substr(0, mt_rows[6].rfind(',')));

  const auto t = run(small(ExperimentKind::sweep_t, dir));
  CHECK(lines_of(read_text_file(file_with_prefix(t, "sweep_t_"))).size() == 1 + 3);
  const auto nx = run(small(ExperimentKind::sweep_nx, dir));
  CHECK(lines_of(read_text_file(file_with_prefix(nx, "sweep_nx_"))).size() == 1 + 2);
  const auto nxt = run(small(ExperimentKind::grid_nxt, dir));
  CHECK(lines_of(read_text_file(file_with_prefix(nxt, "grid_nxt_"))).size() == 1 + 2 * 3);
  fs::remove_all(dir);
}

TEST_CASE("diagnostic experiments")
{
  const auto dir = scratch("diag");
  auto ntk_cfg = small(ExperimentKind::ntk_convergence, dir);
  ntk_cfg.widths = {16, 64};
  const auto ntk = run(ntk_cfg);
  const auto dev = lines_of(read_text_file(file_with_prefix(ntk, "ntk_deviation_")));
  CHECK(dev.front() == "m,seed,hs_dev,config_hash");
  CHECK(dev.size() == 1 + 2 * 3);
  CHECK(ntk.summary.contains("slope"));

  auto taylor_cfg = small(ExperimentKind::taylor_check, dir);
  taylor_cfg.widths = {16, 64};
  taylor_cfg.width = 64;
  const auto taylor = run(taylor_cfg);
  const auto tl = lines_of(read_text_file(file_with_prefix(taylor, "taylor_")));
  CHECK(tl.front() == "sweep,m,norm,remainder,config_hash");
  CHECK(tl.size() == 1 + 2 + 4);

  const auto spectrum = run(small(ExperimentKind::spectrum, dir));
  const auto sl = lines_of(read_text_file(file_with_prefix(spectrum, "spectrum_")));
  CHECK(sl.front() == "lambda,n_eff,config_hash");
  CHECK(sl.size() == 1 + 7);
  CHECK(spectrum.summary.contains("decay_exponent"));
  fs::remove_all(dir);
}
