#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace kappaphi {

// Planar vectors. Body frame: x forward, y left. Navigation frame: east,
// north. The frame is a documented convention of each call site.
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Agent heading (radians, measured from east towards north) and its rate.
class Heading {
 public:
  Heading() = default;
  explicit Heading(double gamma, double gamma_rate = 0.0);

  double gamma() const noexcept { return gamma_; }
  double gamma_rate() const noexcept { return gamma_rate_; }

 private:
  double gamma_ = 0.0;
  double gamma_rate_ = 0.0;
};

Mat2 rotation_matrix(double gamma);

/// Rotates a body-frame vector into the navigation frame.
Vec2 body_to_nav(const Vec2& v, double gamma);

/// Fixed initial guess relating the beta frame to the alpha frame, applied to
/// p_beta before differencing: p = R(rotation) p_beta + translation.
struct FrameAlignment {
  double rotation = 0.0;
  Vec2 translation = Vec2::Zero();

  Vec2 apply(const Vec2& p_beta) const;
};

/// Heading rates by central differences of the unwrapped headings (one-sided
/// at both ends). `times` and `gammas` must have equal length >= 2 and
/// strictly increasing times; a single sample yields a zero rate.
std::vector<double> heading_rates(std::span<const double> times,
                                  std::span<const double> gammas);

}  // namespace kappaphi
