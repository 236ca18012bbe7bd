#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "kappaphi/error_models.hpp"
#include "kappaphi/estimator.hpp"
#include "kappaphi/frames.hpp"

namespace kappaphi {

struct TrajectorySample {
  double t = 0.0;
  Vec2 position = Vec2::Zero();  // navigation frame
  Heading heading;
};

using Trajectory = std::vector<TrajectorySample>;

/// Parses `t_s, east_m, north_m[, heading_rad]` lines. Comma, semicolon, tab
/// or blank separated; '#' starts a comment line. Heading rates come from
/// central differences; a missing heading column is replaced by the bearing
/// to the next sample. Throws ParseError or NonMonotoneTime.
Trajectory load_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);

enum class SegmentKind { kStraight, kCorner };

struct SegmentOptions {
  double step_s = 1.0;
  double speed_mps = 10.0;
  double initial_heading = 0.0;
  /// Samples over which each 90 degree turn is spread (raised-cosine profile).
  int turn_steps = 8;
};

inline constexpr int kCornerTurns = 5;

/// Straight: constant heading. Corner: five 90 degree turns (left, left,
/// right, right, left) evenly distributed over the samples.
Trajectory synthesize_trajectory(SegmentKind kind, std::size_t n_samples,
                                 const SegmentOptions& options = {});

/// Sample indices at which each corner turn begins.
std::vector<std::size_t> corner_turn_starts(std::size_t n_samples, int turn_steps);

Vec2 centroid(const Trajectory& trajectory);

std::vector<KinematicInput> reference_inputs(const Trajectory& trajectory);

struct InjectionConfig {
  ErrorState true_params;
  double noise_sigma_alpha = 0.0;  // per-axis standard deviation, meters
  double noise_sigma_beta = 0.0;
  std::uint64_t rng_seed = 0;
};

struct InjectedSample {
  Vec2 p_alpha = Vec2::Zero();
  Vec2 p_beta = Vec2::Zero();
  KinematicInput input;
  DifferenceObservation observation;
};

/// Produces both localizer outputs with the true model error between them:
/// p_alpha = p + n_alpha, p_beta = p - D(x_true, u) + n_beta, so that
/// d ~ N(D(x_true, u), (sigma_alpha^2 + sigma_beta^2) I).
std::vector<InjectedSample> inject_errors(const Trajectory& trajectory,
                                          const InjectionConfig& cfg,
                                          const CompositeModel& model);

std::vector<FilterStep> to_filter_steps(const std::vector<InjectedSample>& samples);

}  // namespace kappaphi
