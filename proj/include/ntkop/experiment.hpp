#pragma once

#include "ntkop/neural_op.hpp"
#include "ntkop/poisson.hpp"
#include "ntkop/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ntkop {

enum class ExperimentKind {
  gen_data,
  train_one,
  sweep_m,
  sweep_nx,
  sweep_t,
  grid_mt,
  grid_nxt,
  ntk_convergence,
  taylor_check,
  spectrum,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::train_one;

  // data
  int n_u = 400;
  int n_u_test = 400;
  int n_x = 50;
  int max_degree = 4;
  int eval_points = 512;
  std::string scheme = "equispaced";
  std::string train_data; // optional dataset JSON paths; generated when empty
  std::string test_data;

  // architecture
  int width = 50;
  double tau = 2.0;
  double bandwidth = 0.2;

  // training
  int iterations = 50;
  std::optional<double> alpha; // default 0.5 / kappa^2
  int record_every = 1;
  bool linearized = false;
  bool track_remainder = false;

  // sweeps and diagnostics
  std::vector<int> widths{6, 10, 16, 20, 30, 40, 50};
  std::vector<int> grid_sizes{5, 10, 15, 20, 30, 40, 50};
  std::vector<int> budgets{5, 10, 15, 20, 30, 40, 50};
  std::vector<double> norms{0.125, 0.25, 0.5, 1.0};
  std::vector<double> lambdas{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int m_ref = 1 << 17;
  int n_rep = 10;

  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = "out";

  ArchConfig arch() const;
  ArchConfig arch(int width_override) const;
  double step_size() const;
  std::uint64_t test_seed() const { return seed + 1000003ull; }

  /// Everything that determines the results (out_dir excluded).
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string hash() const;
  void validate() const;
};

struct ExperimentOutput {
  std::vector<std::string> files;
  nlohmann::json summary;
};

/// Runs one experiment, writing the config echo and result files into
/// cfg.out_dir. The outputs are a pure function of the config.
ExperimentOutput run(const ExperimentConfig& cfg);

/// One row per sweep cell: axis1, axis2, test_risk.
struct SweepRow {
  int axis1 = 0;
  int axis2 = 0;
  double test_risk = 0.0;
};

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_hash);

} // namespace ntkop
