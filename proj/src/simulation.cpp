#include "kappaphi/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "kappaphi/errors.hpp"

namespace kappaphi {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  constexpr std::string_view kDelims = ",; \t\r";
  std::size_t pos = 0;
  while (pos < line.size()) {
    const std::size_t begin = line.find_first_not_of(kDelims, pos);
    if (begin == std::string_view::npos) break;
    const std::size_t end = line.find_first_of(kDelims, begin);
    fields.push_back(line.substr(begin, end - begin));
    pos = end;
  }
  return fields;
}

// Commas never act as decimal separators, so consecutive empty fields
// ("1,,2") are rejected too.
bool has_empty_field(std::string_view line) {
  const std::size_t first = line.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return false;
  bool pending_separator = false;
  for (std::size_t i = first; i < line.size(); ++i) {
    const char c = line[i];
    if (c == ',' || c == ';') {
      if (pending_separator) return true;
      pending_separator = true;
    } else if (c != ' ' && c != '\t' && c != '\r') {
      pending_separator = false;
    }
  }
  return pending_separator;
}

double parse_number(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, "not a number: '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) throw ParseError(line, "non-finite value");
  return value;
}

}  // namespace

Trajectory load_trajectory(std::istream& in) {
  std::vector<double> times;
  std::vector<Vec2> positions;
  std::vector<double> headings;
  bool with_heading = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line(raw);
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    if (has_empty_field(line)) throw ParseError(line_no, "empty field");

    const auto fields = split_fields(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(line_no, "expected 3 or 4 columns, found " +
                                    std::to_string(fields.size()));
    }
    const bool row_heading = fields.size() == 4;
    if (times.empty()) {
      with_heading = row_heading;
    } else if (row_heading != with_heading) {
      throw ParseError(line_no, "inconsistent column count");
    }

    const double t = parse_number(fields[0], line_no);
    if (!times.empty() && !(t > times.back())) {
      throw NonMonotoneTime(times.size(), "line " + std::to_string(line_no) + ": time " +
                                              std::to_string(t) + " does not increase");
    }
    times.push_back(t);
    positions.emplace_back(parse_number(fields[1], line_no), parse_number(fields[2], line_no));
    if (row_heading) headings.push_back(parse_number(fields[3], line_no));
  }

  const std::size_t n = times.size();
  if (!with_heading) {
    headings.assign(n, 0.0);
    double bearing = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const Vec2 delta = positions[k + 1] - positions[k];
      if (delta.squaredNorm() > 0.0) bearing = std::atan2(delta.y(), delta.x());
      headings[k] = bearing;
    }
    if (n >= 2) headings[n - 1] = headings[n - 2];
  }

  const std::vector<double> rates = heading_rates(times, headings);
  Trajectory trajectory(n);
  for (std::size_t k = 0; k < n; ++k) {
    trajectory[k] = {times[k], positions[k], Heading(headings[k], rates[k])};
  }
  return trajectory;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file '" + path.string() + "'");
  return load_trajectory(in);
}

std::vector<std::size_t> corner_turn_starts(std::size_t n_samples, int turn_steps) {
  std::vector<std::size_t> starts;
  const double n = static_cast<double>(n_samples);
  for (int i = 0; i < kCornerTurns; ++i) {
    const double center = n * (i + 1) / (kCornerTurns + 1);
    starts.push_back(static_cast<std::size_t>(std::lround(center - turn_steps / 2.0)));
  }
  return starts;
}

namespace {

int effective_turn_steps(std::size_t n_samples, int requested) {
  const int room = static_cast<int>(n_samples / (kCornerTurns + 1)) - 1;
  return std::max(1, std::min(requested, room));
}

}  // namespace

Trajectory synthesize_trajectory(SegmentKind kind, std::size_t n_samples,
                                 const SegmentOptions& options) {
  if (n_samples < 2) throw ConfigError("a segment needs at least two samples");
  if (!(options.step_s > 0.0)) throw ConfigError("sample step must be positive");
  if (options.turn_steps < 1) throw ConfigError("turn_steps must be >= 1");
  if (kind == SegmentKind::kCorner && n_samples < 2 * (kCornerTurns + 1)) {
    throw ConfigError("a corner segment needs at least 12 samples for five separate turns");
  }

  std::vector<double> gamma(n_samples, options.initial_heading);
  std::vector<double> rate(n_samples, 0.0);
  if (kind == SegmentKind::kCorner) {
    constexpr int kPattern[kCornerTurns] = {+1, +1, -1, -1, +1};
    const int m = effective_turn_steps(n_samples, options.turn_steps);
    const auto starts = corner_turn_starts(n_samples, m);
    const double duration = m * options.step_s;
    for (std::size_t k = 0; k < n_samples; ++k) {
      for (int i = 0; i < kCornerTurns; ++i) {
        const double s = std::clamp(
            (static_cast<double>(k) - static_cast<double>(starts[i])) / m, 0.0, 1.0);
        const double quarter = kPattern[i] * std::numbers::pi / 2.0;
        gamma[k] += quarter * 0.5 * (1.0 - std::cos(std::numbers::pi * s));
        rate[k] += quarter * 0.5 * std::numbers::pi / duration * std::sin(std::numbers::pi * s);
      }
    }
  }

  Trajectory trajectory(n_samples);
  Vec2 position = Vec2::Zero();
  for (std::size_t k = 0; k < n_samples; ++k) {
    if (k > 0) {
      const double mid = 0.5 * (gamma[k - 1] + gamma[k]);
      position += options.speed_mps * options.step_s * Vec2(std::cos(mid), std::sin(mid));
    }
    trajectory[k] = {static_cast<double>(k) * options.step_s, position,
                     Heading(gamma[k], rate[k])};
  }
  return trajectory;
}

Vec2 centroid(const Trajectory& trajectory) {
  if (trajectory.empty()) return Vec2::Zero();
  Vec2 sum = Vec2::Zero();
  for (const auto& sample : trajectory) sum += sample.position;
  return sum / static_cast<double>(trajectory.size());
}

std::vector<KinematicInput> reference_inputs(const Trajectory& trajectory) {
  std::vector<KinematicInput> inputs;
  inputs.reserve(trajectory.size());
  for (const auto& sample : trajectory) {
    inputs.push_back({sample.t, sample.heading, sample.position});
  }
  return inputs;
}

std::vector<InjectedSample> inject_errors(const Trajectory& trajectory,
                                          const InjectionConfig& cfg,
                                          const CompositeModel& model) {
  if (cfg.true_params.size() != model.state_dim()) {
    throw DimensionMismatch("true parameters have length " +
                            std::to_string(cfg.true_params.size()) + ", model expects " +
                            std::to_string(model.state_dim()));
  }
  if (!(cfg.noise_sigma_alpha >= 0.0) || !(cfg.noise_sigma_beta >= 0.0)) {
    throw ConfigError("noise standard deviations must be non-negative");
  }

  const double var_alpha = cfg.noise_sigma_alpha * cfg.noise_sigma_alpha;
  const double var_beta = cfg.noise_sigma_beta * cfg.noise_sigma_beta;
  const Mat2 r = compose_measurement_covariance(var_alpha * Mat2::Identity(),
                                                var_beta * Mat2::Identity());

  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> standard(0.0, 1.0);

  std::vector<InjectedSample> out;
  out.reserve(trajectory.size());
  for (const auto& sample : trajectory) {
    const Vec2 noise_alpha(standard(rng), standard(rng));
    const Vec2 noise_beta(standard(rng), standard(rng));

    InjectedSample s;
    s.p_alpha = sample.position + cfg.noise_sigma_alpha * noise_alpha;
    s.input = {sample.t, sample.heading, s.p_alpha};
    s.p_beta = sample.position - evaluate_difference_model(model, cfg.true_params, s.input) +
               cfg.noise_sigma_beta * noise_beta;
    s.observation = {measured_difference(s.p_alpha, s.p_beta), r};
    out.push_back(s);
  }
  return out;
}

std::vector<FilterStep> to_filter_steps(const std::vector<InjectedSample>& samples) {
  std::vector<FilterStep> steps;
  steps.reserve(samples.size());
  for (const auto& s : samples) steps.push_back({s.observation, s.input});
  return steps;
}

}  // namespace kappaphi
