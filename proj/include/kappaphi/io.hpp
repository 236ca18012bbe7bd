#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kappaphi/estimator.hpp"
#include "kappaphi/frames.hpp"
#include "kappaphi/observability.hpp"
#include "kappaphi/simulation.hpp"

namespace kappaphi {

struct MseSeries;
struct ParameterSummary;

/// Fixed 9-significant-digit scientific notation ("%.8e").
std::string format_number(double value);

/// Header plus one row per step: step, mse_x1..mse_xn, mean_x1..mean_xn.
void write_mse_table(std::ostream& out, const MseSeries& series);
void write_summary(std::ostream& out, std::span<const ParameterSummary> summary);

/// One localizer pair per time step, as written by `kappaphi simulate`.
struct ObservationRecord {
  double t = 0.0;
  Vec2 p_alpha = Vec2::Zero();
  Vec2 p_beta = Vec2::Zero();
  Heading heading;
  Mat2 R = Mat2::Zero();
};

inline constexpr const char* kObservationHeader =
    "t_s,p_alpha_e,p_alpha_n,p_beta_e,p_beta_n,heading_rad,heading_rate_rps,r_ee,r_en,r_nn";

void write_observations(std::ostream& out, std::span<const InjectedSample> samples);
/// Throws ParseError on malformed rows, NonMonotoneTime on time reversals.
std::vector<ObservationRecord> read_observations(std::istream& in);

/// Aligns p_beta into the alpha frame, then forms d = p_alpha - p_beta.
std::vector<FilterStep> to_filter_steps(std::span<const ObservationRecord> records,
                                        const FrameAlignment& alignment = {});

/// step, t_s, then mean and variance columns per parameter.
void write_filter_output(std::ostream& out, std::span<const ObservationRecord> records,
                         std::span<const GaussianBelief> beliefs,
                         std::span<const std::string> names);

void write_observability_report(std::ostream& out, const ObservabilityReport& report);

void write_closed_form(std::ostream& out, std::span<const ClosedFormEstimate> estimates);

}  // namespace kappaphi
