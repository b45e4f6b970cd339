#pragma once

#include "ntkop/neural_op.hpp"
#include "ntkop/poisson.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntkop {

/// Features and targets of a dataset on its own grid, built once per run.
struct TrainingSet {
  GridPtr grid;
  std::vector<FeatureField> features;
  std::vector<Eigen::VectorXd> targets;

  std::size_t size() const { return features.size(); }
};

TrainingSet make_training_set(const Dataset& data, const ArchConfig& arch);

/// Test inputs and exact targets on a fine evaluation grid.
TrainingSet make_eval_set(const Dataset& data, const ArchConfig& arch, GridPtr eval_grid);

enum class StepMode {
  standard,   // residuals and gradients from G_theta_t
  linearized, // residuals from H_t, gradients at the source parameters theta_0
};

/// One full-batch step
///   theta <- theta - (alpha/n_U) sum_i <pred_i - v_i, d pred_i>_{n_X}
/// with the 1/2-squared loss convention (no factor 2 in the residual).
/// In linearized mode pred_i = G_src(u_i) + <grad G_src(u_i), theta - src>.
/// Per-sample contributions are split into `threads` contiguous chunks and
/// summed in chunk order, so results are reproducible for a fixed count.
Params gd_step(const Params& theta, const Params& grad_source, const TrainingSet& data,
               double alpha, StepMode mode = StepMode::standard, int threads = 1);

/// (1/n_U) sum_i ||G(u_i) - v_i||^2_{n_X}
double empirical_risk(const Params& theta, const TrainingSet& data);

/// Mean over samples of the quadrature-weighted squared error.
double eval_risk(const Params& theta, const TrainingSet& eval_set);
double eval_risk(const Params& theta, const Dataset& data, const ArchConfig& arch,
                 GridPtr eval_grid);

struct TrainConfig {
  double alpha = 0.0;
  int iterations = 50; // T
  bool linearized = false;
  int record_every = 1;
  /// When non-empty, metrics are recorded exactly at these steps (plus t = 0).
  std::vector<int> record_steps;
  GridPtr eval_grid;
  bool track_remainder = false;
  int threads = 1;

  void validate(const ArchConfig& arch) const;
};

struct TrainRecord {
  int t = 0;
  double emp_risk = 0.0;
  double test_risk = 0.0;
  double weight_dist = 0.0;
  double remainder_sup = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
  std::vector<TrainRecord> records;
  Params initial;
  Params final_params;

  double max_weight_dist() const;
};

/// Full-batch GD from init_symmetric(arch, seed), T steps.
TrainReport train(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_data,
                  const Dataset& test_data, std::uint64_t seed);

/// Same, on prebuilt feature sets (lets sweeps reuse features across runs).
TrainReport train(const TrainConfig& cfg, const ArchConfig& arch, const TrainingSet& train_set,
                  const TrainingSet& eval_set, std::uint64_t seed);

/// CSV with columns t, emp_risk, test_risk, weight_dist, remainder_sup, config_hash.
std::string report_csv(const TrainReport& report, const std::string& config_hash);

} // namespace ntkop
