#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "kappaphi/error_models.hpp"
#include "kappaphi/frames.hpp"

namespace kappaphi {

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// One measured difference vector with its own covariance. R may change from
/// step to step.
struct DifferenceObservation {
  Vec2 d = Vec2::Zero();
  Mat2 R = Mat2::Zero();
};

struct UkfConfig {
  // Scaled sigma-point spread.
  double alpha = 1e-1;
  double beta = 2.0;
  double kappa = 0.0;
  Eigen::MatrixXd process_noise;
  GaussianBelief initial_belief;
  /// Skip updates whose normalized innovation squared exceeds this value.
  std::optional<double> innovation_gate;
};

/// Sigma points as columns plus their mean and covariance weights.
struct SigmaPoints {
  Eigen::MatrixXd points;
  Eigen::VectorXd mean_weights;
  Eigen::VectorXd cov_weights;
};

/// True when `m` is symmetric within `sym_tol` and all eigenvalues are
/// >= -psd_tol * max(trace, 1).
bool is_symmetric_psd(const Eigen::MatrixXd& m, double sym_tol = 1e-9, double psd_tol = 1e-9);

/// Throws on invalid spread parameters, non-PSD Q or mismatched dimensions.
void validate(const UkfConfig& cfg);

/// R = Sigma_alpha + Sigma_beta. Throws NotPsd when an input is not a
/// symmetric PSD matrix.
Mat2 compose_measurement_covariance(const Mat2& sigma_alpha, const Mat2& sigma_beta);

/// Lower-triangular factor L with L L^T = P. Retries once with a diagonal
/// jitter of 1e-9 trace(P)/n, then throws CholeskyFailure.
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& covariance);

SigmaPoints generate_sigma_points(const GaussianBelief& belief, const UkfConfig& cfg);

/// Constant-state process: mean unchanged, covariance grows by Q.
GaussianBelief predict(const GaussianBelief& belief, const UkfConfig& cfg);

/// Unscented measurement update with the composite difference model as the
/// measurement function.
GaussianBelief update(const GaussianBelief& belief, const DifferenceObservation& obs,
                      const KinematicInput& u, const CompositeModel& model,
                      const UkfConfig& cfg);

struct FilterStep {
  DifferenceObservation observation;
  KinematicInput input;
};

/// Returns the initial belief followed by one posterior per step. Errors are
/// rethrown as StepError carrying the step index.
std::vector<GaussianBelief> run_filter(const CompositeModel& model, const UkfConfig& cfg,
                                       std::span<const FilterStep> steps);

/// Stateful wrapper around predict/update for streaming use.
class UnscentedFilter {
 public:
  UnscentedFilter(CompositeModel model, UkfConfig cfg);

  const GaussianBelief& belief() const noexcept { return belief_; }
  const CompositeModel& model() const noexcept { return model_; }

  /// One predict + update cycle.
  const GaussianBelief& step(const DifferenceObservation& obs, const KinematicInput& u);

 private:
  CompositeModel model_;
  UkfConfig cfg_;
  GaussianBelief belief_;
};

}  // namespace kappaphi
