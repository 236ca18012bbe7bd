#include "kappaphi/frames.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kappaphi {

double normalize_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  // remainder() lands on -pi for odd multiples of pi; the range is (-pi, pi].
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

Heading::Heading(double gamma, double gamma_rate)
    : gamma_(normalize_angle(gamma)), gamma_rate_(gamma_rate) {}

Mat2 rotation_matrix(double gamma) {
  const double c = std::cos(gamma);
  const double s = std::sin(gamma);
  Mat2 r;
  r << c, -s,
       s, c;
  return r;
}

Vec2 body_to_nav(const Vec2& v, double gamma) {
  return rotation_matrix(gamma) * v;
}

Vec2 FrameAlignment::apply(const Vec2& p_beta) const {
  return rotation_matrix(rotation) * p_beta + translation;
}

std::vector<double> heading_rates(std::span<const double> times,
                                  std::span<const double> gammas) {
  if (times.size() != gammas.size()) {
    throw std::invalid_argument("heading_rates: times and headings differ in length");
  }
  const std::size_t n = times.size();
  std::vector<double> rates(n, 0.0);
  if (n < 2) return rates;

  // Unwrap so a crossing of +-pi does not look like a full turn.
  std::vector<double> unwrapped(gammas.begin(), gammas.end());
  for (std::size_t i = 1; i < n; ++i) {
    unwrapped[i] = unwrapped[i - 1] + normalize_angle(gammas[i] - gammas[i - 1]);
  }

  rates[0] = (unwrapped[1] - unwrapped[0]) / (times[1] - times[0]);
  rates[n - 1] = (unwrapped[n - 1] - unwrapped[n - 2]) / (times[n - 1] - times[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    rates[i] = (unwrapped[i + 1] - unwrapped[i - 1]) / (times[i + 1] - times[i - 1]);
  }
  return rates;
}

}  // namespace kappaphi
