#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "kappaphi/error_models.hpp"
#include "kappaphi/frames.hpp"

namespace kappaphi {

/// Sample index range [first, last] of one analysis window.
struct TimeWindow {
  std::size_t first = 0;
  std::size_t last = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Windowed rank analysis of the stacked output map. `observable` is true iff
/// at least one window reaches full rank.
struct ObservabilityReport {
  bool observable = false;
  Eigen::Index state_dim = 0;
  std::vector<TimeWindow> windows;
  std::vector<int> rank_profile;
  std::vector<double> condition_numbers;
  /// Indices into `windows` with rank < state_dim.
  std::vector<std::size_t> deficient_windows;
  /// Indices into `windows` in which every field the model reads is constant.
  std::vector<std::size_t> degenerate_windows;
};

constexpr double kDefaultRankTolerance = 1e-8;
constexpr double kDefaultTurnRateEpsilon = 1e-3;

/// Concatenated model outputs over a window (2 * window.size() entries).
/// With a constant state the output derivatives reduce to the outputs at the
/// visited inputs, so this stack replaces the Lie-derivative cascade.
Eigen::VectorXd stacked_output_map(const CompositeModel& model, const ErrorState& x,
                                   std::span<const KinematicInput> window);

/// Central-difference Jacobian of stacked_output_map with respect to x.
Eigen::MatrixXd stacked_output_jacobian(const CompositeModel& model, const ErrorState& x,
                                        std::span<const KinematicInput> window);

/// Default window length: twice the state dimension.
std::size_t default_window_length(const CompositeModel& model);

/// Slides a window of `window_length` samples over the trajectory and counts
/// singular values above rank_tolerance * largest singular value.
ObservabilityReport numerical_rank_test(const CompositeModel& model, const ErrorState& x0,
                                        std::span<const KinematicInput> trajectory,
                                        std::size_t window_length,
                                        double rank_tolerance = kDefaultRankTolerance);

/// Closed-form inversion of the phi_agent + kappa_translation model from the
/// difference vector, its rate, the heading and the heading rate. Returns
/// (agent_forward, agent_left, trans_east, trans_north). Throws ZeroTurnRate
/// when |gamma_rate| <= epsilon.
Eigen::Vector4d closed_form_kappa_phi(const Vec2& d, const Vec2& d_rate, double gamma,
                                      double gamma_rate,
                                      double epsilon = kDefaultTurnRateEpsilon);

struct ClosedFormEstimate {
  std::size_t index = 0;
  double t = 0.0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
};

/// Applies closed_form_kappa_phi at every interior sample of a recorded trace,
/// with d and heading rates taken by central differences over three samples.
/// Samples with |heading rate| <= epsilon are skipped.
std::vector<ClosedFormEstimate> closed_form_over_trace(std::span<const double> times,
                                                       std::span<const Vec2> differences,
                                                       std::span<const double> headings,
                                                       double epsilon = kDefaultTurnRateEpsilon);

/// Mean of the estimates; throws Error when empty.
Eigen::Vector4d average_estimate(std::span<const ClosedFormEstimate> estimates);

}  // namespace kappaphi
