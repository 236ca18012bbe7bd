#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kappaphi/error_models.hpp"
#include "kappaphi/estimator.hpp"
#include "kappaphi/simulation.hpp"

namespace kappaphi {

struct TrajectorySource {
  enum class Kind { kSynthetic, kFile };
  Kind kind = Kind::kSynthetic;
  SegmentKind segment = SegmentKind::kCorner;
  std::size_t samples = 200;
  SegmentOptions options;
  std::filesystem::path path;
};

struct ComponentSpec {
  std::string name;
  /// Pivot for map rotation/scale/shear; trajectory centroid when unset.
  std::optional<Vec2> pivot;
  TransformDirection direction = TransformDirection::kAlphaReference;
  ShearAxis axis = ShearAxis::kEast;
  /// Initial filter guess; the component's neutral value when unset.
  std::optional<Eigen::VectorXd> initial;
};

struct UkfSettings {
  double alpha = 1e-1;
  double beta = 2.0;
  double kappa = 0.0;
  Eigen::MatrixXd process_noise;       // empty: 0.1 on the diagonal
  Eigen::MatrixXd initial_covariance;  // empty: 10 on the diagonal
  std::optional<double> innovation_gate;
};

struct ExperimentConfig {
  TrajectorySource trajectory;
  std::vector<ComponentSpec> model;
  InjectionConfig injection;
  UkfSettings ukf;
  FrameAlignment alignment;
  std::size_t n_runs = 1;
  std::size_t workers = 1;
  double convergence_threshold = 0.1;
  std::filesystem::path output;
};

/// Everything a single run needs, resolved from an ExperimentConfig.
struct PreparedExperiment {
  Trajectory trajectory;
  CompositeModel model;
  UkfConfig ukf;
  InjectionConfig injection;
};

/// Per-step, per-parameter statistics across Monte Carlo runs.
struct MseSeries {
  std::vector<double> times;
  Eigen::VectorXd truth;
  Eigen::VectorXd initial_mean;
  /// Squared error of the prior estimate x0.
  Eigen::VectorXd initial_mse;
  Eigen::MatrixXd mse;       // steps x state_dim
  Eigen::MatrixXd mean;      // across-run mean estimate
  Eigen::MatrixXd variance;  // across-run population variance
  std::size_t n_runs = 0;
  std::vector<std::string> parameter_names;

  std::size_t steps() const { return static_cast<std::size_t>(mse.rows()); }
  Eigen::Index state_dim() const { return mse.cols(); }
};

/// Mean estimates of one run, one row per observation.
struct RunResult {
  Eigen::MatrixXd means;
};

/// Parses the JSON experiment configuration; unknown keys are errors.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The simulated setups: phi_agent + kappa_translation, true (2, 1, 3, 2) m,
/// total noise 0.2 m split evenly, x0 = 0, P = diag(10), Q = diag(0.1),
/// 100 runs. Corner: 200 samples; straight: 100 samples.
ExperimentConfig preset_corner_config();
ExperimentConfig preset_straight_config();

/// Throws ConfigError on inconsistent settings.
void validate(const ExperimentConfig& cfg);

CompositeModel build_model(const std::vector<ComponentSpec>& specs, const Trajectory& trajectory);
Trajectory build_trajectory(const TrajectorySource& source);
/// Filter settings for `model`; initial mean from per-component guesses.
UkfConfig build_ukf(const ExperimentConfig& cfg, const CompositeModel& model);
PreparedExperiment prepare_experiment(const ExperimentConfig& cfg);

std::vector<std::string> parameter_names(const CompositeModel& model);

/// Per-run seed derived from the master seed and the run index only.
std::uint64_t derive_run_seed(std::uint64_t master_seed, std::size_t run_index);

/// Simulate and filter one run. Errors are rethrown as RunError.
RunResult run_single(const PreparedExperiment& prepared, std::size_t run_index);

/// Reduces run results (indexed by run number) into an MseSeries.
MseSeries aggregate(const PreparedExperiment& prepared, const std::vector<RunResult>& runs);

/// Runs n_runs independent simulate -> filter pipelines on up to
/// cfg.workers threads.
MseSeries run_experiment(const ExperimentConfig& cfg);

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double final_mean = 0.0;
  double final_variance = 0.0;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  bool converged = false;
};

std::vector<ParameterSummary> summarize(const MseSeries& series, double convergence_threshold);

/// Writes `mse.csv` and `summary.csv` into directory `out_dir`.
void emit_results(const MseSeries& series, const std::filesystem::path& out_dir,
                  double convergence_threshold = 0.1);

}  // namespace kappaphi
