#include "kappaphi/observability.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kappaphi/errors.hpp"

namespace kappaphi {
namespace {

bool same_reads(const KinematicInput& a, const KinematicInput& b,
                const std::set<KinematicField>& fields) {
  for (KinematicField field : fields) {
    switch (field) {
      case KinematicField::kHeading:
        if (a.heading.gamma() != b.heading.gamma()) return false;
        break;
      case KinematicField::kHeadingRate:
        if (a.heading.gamma_rate() != b.heading.gamma_rate()) return false;
        break;
      case KinematicField::kPAlpha:
        if (a.p_alpha != b.p_alpha) return false;
        break;
    }
  }
  return true;
}

}  // namespace

Eigen::VectorXd stacked_output_map(const CompositeModel& model, const ErrorState& x,
                                   std::span<const KinematicInput> window) {
  const auto min_length = static_cast<std::size_t>((model.state_dim() + 1) / 2);
  if (window.size() < min_length) {
    throw DimensionMismatch("window of " + std::to_string(window.size()) +
                            " samples is shorter than ceil(state_dim / 2) = " +
                            std::to_string(min_length));
  }
  Eigen::VectorXd z(2 * static_cast<Eigen::Index>(window.size()));
  for (std::size_t k = 0; k < window.size(); ++k) {
    z.segment<2>(2 * static_cast<Eigen::Index>(k)) =
        evaluate_difference_model(model, x, window[k]);
  }
  return z;
}

Eigen::MatrixXd stacked_output_jacobian(const CompositeModel& model, const ErrorState& x,
                                        std::span<const KinematicInput> window) {
  const Eigen::Index n = model.state_dim();
  if (x.size() != n) throw DimensionMismatch("state does not match model dimension");
  Eigen::MatrixXd jac(2 * static_cast<Eigen::Index>(window.size()), n);
  ErrorState probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + h;
    const Eigen::VectorXd plus = stacked_output_map(model, probe, window);
    probe(j) = x(j) - h;
    const Eigen::VectorXd minus = stacked_output_map(model, probe, window);
    probe(j) = x(j);
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

std::size_t default_window_length(const CompositeModel& model) {
  return 2 * static_cast<std::size_t>(model.state_dim());
}

ObservabilityReport numerical_rank_test(const CompositeModel& model, const ErrorState& x0,
                                        std::span<const KinematicInput> trajectory,
                                        std::size_t window_length, double rank_tolerance) {
  if (window_length == 0 || trajectory.size() < window_length) {
    throw DimensionMismatch("trajectory of " + std::to_string(trajectory.size()) +
                            " samples is shorter than the window length " +
                            std::to_string(window_length));
  }
  ObservabilityReport report;
  report.state_dim = model.state_dim();
  const std::set<KinematicField> fields = model.fields_read();

  for (std::size_t first = 0; first + window_length <= trajectory.size(); ++first) {
    const auto window = trajectory.subspan(first, window_length);
    const Eigen::MatrixXd jac = stacked_output_jacobian(model, x0, window);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const Eigen::VectorXd& sv = svd.singularValues();

    int rank = 0;
    const double largest = sv.size() > 0 ? sv(0) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (largest > 0.0 && sv(i) > rank_tolerance * largest) ++rank;
    }
    // Fewer rows than columns leaves trailing singular values implicitly zero.
    const double smallest = sv.size() < report.state_dim ? 0.0 : sv(sv.size() - 1);
    const double condition =
        smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();

    const std::size_t index = report.windows.size();
    report.windows.push_back({first, first + window_length - 1, window.front().t,
                              window.back().t});
    report.rank_profile.push_back(rank);
    report.condition_numbers.push_back(condition);
    if (rank < report.state_dim) report.deficient_windows.push_back(index);
    if (rank == report.state_dim) report.observable = true;

    if (!fields.empty() &&
        std::all_of(window.begin() + 1, window.end(), [&](const KinematicInput& u) {
          return same_reads(u, window.front(), fields);
        })) {
      report.degenerate_windows.push_back(index);
    }
  }
  return report;
}

Eigen::Vector4d closed_form_kappa_phi(const Vec2& d, const Vec2& d_rate, double gamma,
                                      double gamma_rate, double epsilon) {
  if (!(std::abs(gamma_rate) > epsilon)) {
    throw ZeroTurnRate("heading rate " + std::to_string(gamma_rate) +
                       " rad/s is too small to separate the agent offset from the translation");
  }
  const double c = std::cos(gamma);
  const double s = std::sin(gamma);
  Eigen::Vector4d x;
  x(0) = (-d_rate.x() * s + d_rate.y() * c) / gamma_rate;
  x(1) = -(d_rate.x() * c + d_rate.y() * s) / gamma_rate;
  x(2) = d.x() - d_rate.y() / gamma_rate;
  // d_rate.x = -gamma_rate * (a1 sin + a2 cos), hence the plus sign here.
  x(3) = d.y() + d_rate.x() / gamma_rate;
  return x;
}

std::vector<ClosedFormEstimate> closed_form_over_trace(std::span<const double> times,
                                                       std::span<const Vec2> differences,
                                                       std::span<const double> headings,
                                                       double epsilon) {
  if (times.size() != differences.size() || times.size() != headings.size()) {
    throw DimensionMismatch("times, differences and headings must have equal length");
  }
  std::vector<ClosedFormEstimate> out;
  for (std::size_t k = 1; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k - 1];
    const double gamma_rate = normalize_angle(headings[k + 1] - headings[k - 1]) / dt;
    if (!(std::abs(gamma_rate) > epsilon)) continue;
    const Vec2 d_rate = (differences[k + 1] - differences[k - 1]) / dt;
    out.push_back({k, times[k],
                   closed_form_kappa_phi(differences[k], d_rate, headings[k], gamma_rate,
                                         epsilon)});
  }
  return out;
}

Eigen::Vector4d average_estimate(std::span<const ClosedFormEstimate> estimates) {
  if (estimates.empty()) throw Error("no closed-form estimates (agent never turned)");
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  for (const auto& e : estimates) sum += e.x;
  return sum / static_cast<double>(estimates.size());
}

}  // namespace kappaphi
