#include "kappaphi/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "kappaphi/errors.hpp"
#include "kappaphi/harness.hpp"

namespace kappaphi {
namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no, std::size_t expected) {
  std::vector<double> values;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const std::size_t begin = cell.find_first_not_of(" \t");
    const std::size_t end = cell.find_last_not_of(" \t\r");
    if (begin == std::string::npos) throw ParseError(line_no, "empty field");
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end + 1;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw ParseError(line_no, "not a number: '" + cell + "'");
    }
    values.push_back(v);
  }
  if (values.size() != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) + " columns, found " +
                                  std::to_string(values.size()));
  }
  return values;
}

}  // namespace

std::string format_number(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.8e", value);
  return buf;
}

void write_mse_table(std::ostream& out, const MseSeries& series) {
  const Eigen::Index n = series.state_dim();
  out << "step";
  for (Eigen::Index j = 0; j < n; ++j) out << ",mse_x" << j + 1;
  for (Eigen::Index j = 0; j < n; ++j) out << ",mean_x" << j + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < series.mse.rows(); ++k) {
    out << k;
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_number(series.mse(k, j));
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_number(series.mean(k, j));
    out << '\n';
  }
}

void write_summary(std::ostream& out, std::span<const ParameterSummary> summary) {
  out << "parameter,truth,final_mean,final_variance,initial_mse,final_mse,converged\n";
  for (const auto& s : summary) {
    out << s.name << ',' << format_number(s.truth) << ',' << format_number(s.final_mean) << ','
        << format_number(s.final_variance) << ',' << format_number(s.initial_mse) << ','
        << format_number(s.final_mse) << ',' << (s.converged ? "true" : "false") << '\n';
  }
}

void write_observations(std::ostream& out, std::span<const InjectedSample> samples) {
  out << kObservationHeader << '\n';
  for (const auto& s : samples) {
    out << format_number(s.input.t) << ',' << format_number(s.p_alpha.x()) << ','
        << format_number(s.p_alpha.y()) << ',' << format_number(s.p_beta.x()) << ','
        << format_number(s.p_beta.y()) << ',' << format_number(s.input.heading.gamma()) << ','
        << format_number(s.input.heading.gamma_rate()) << ','
        << format_number(s.observation.R(0, 0)) << ',' << format_number(s.observation.R(0, 1))
        << ',' << format_number(s.observation.R(1, 1)) << '\n';
  }
}

std::vector<ObservationRecord> read_observations(std::istream& in) {
  std::vector<ObservationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!header_seen) {
      if (line != kObservationHeader) throw ParseError(line_no, "missing observation header");
      header_seen = true;
      continue;
    }
    const auto v = parse_row(line, line_no, 10);
    ObservationRecord r;
    r.t = v[0];
    if (!records.empty() && !(r.t > records.back().t)) {
      throw NonMonotoneTime(records.size(), "line " + std::to_string(line_no) +
                                                ": time does not increase");
    }
    r.p_alpha = Vec2(v[1], v[2]);
    r.p_beta = Vec2(v[3], v[4]);
    r.heading = Heading(v[5], v[6]);
    r.R << v[7], v[8],
           v[8], v[9];
    records.push_back(r);
  }
  if (!header_seen) throw ParseError(line_no, "missing observation header");
  return records;
}

std::vector<FilterStep> to_filter_steps(std::span<const ObservationRecord> records,
                                        const FrameAlignment& alignment) {
  std::vector<FilterStep> steps;
  steps.reserve(records.size());
  for (const auto& r : records) {
    FilterStep step;
    step.input = {r.t, r.heading, r.p_alpha};
    step.observation = {measured_difference(r.p_alpha, alignment.apply(r.p_beta)), r.R};
    steps.push_back(step);
  }
  return steps;
}

void write_filter_output(std::ostream& out, std::span<const ObservationRecord> records,
                         std::span<const GaussianBelief> beliefs,
                         std::span<const std::string> names) {
  out << "step,t_s";
  for (const auto& name : names) out << ",mean_" << name;
  for (const auto& name : names) out << ",var_" << name;
  out << '\n';
  for (std::size_t k = 0; k < records.size() && k + 1 < beliefs.size(); ++k) {
    const auto& b = beliefs[k + 1];
    out << k << ',' << format_number(records[k].t);
    for (Eigen::Index j = 0; j < b.mean.size(); ++j) out << ',' << format_number(b.mean(j));
    for (Eigen::Index j = 0; j < b.mean.size(); ++j) {
      out << ',' << format_number(b.covariance(j, j));
    }
    out << '\n';
  }
}

void write_observability_report(std::ostream& out, const ObservabilityReport& report) {
  out << "# observable: " << (report.observable ? "true" : "false") << '\n';
  out << "# state_dim: " << report.state_dim << '\n';
  out << "# deficient_windows: " << report.deficient_windows.size() << " of "
      << report.windows.size() << '\n';
  out << "window,first,last,t_first_s,t_last_s,rank,condition_number,degenerate\n";
  std::size_t degenerate_at = 0;
  for (std::size_t i = 0; i < report.windows.size(); ++i) {
    const auto& w = report.windows[i];
    bool degenerate = false;
    if (degenerate_at < report.degenerate_windows.size() &&
        report.degenerate_windows[degenerate_at] == i) {
      degenerate = true;
      ++degenerate_at;
    }
    out << i << ',' << w.first << ',' << w.last << ',' << format_number(w.t_first) << ','
        << format_number(w.t_last) << ',' << report.rank_profile[i] << ','
        << (std::isinf(report.condition_numbers[i]) ? std::string("inf")
                                                    : format_number(report.condition_numbers[i]))
        << ',' << (degenerate ? "true" : "false") << '\n';
  }
}

void write_closed_form(std::ostream& out, std::span<const ClosedFormEstimate> estimates) {
  out << "step,t_s,agent_1,agent_2,trans_1,trans_2\n";
  for (const auto& e : estimates) {
    out << e.index << ',' << format_number(e.t);
    for (int j = 0; j < 4; ++j) out << ',' << format_number(e.x(j));
    out << '\n';
  }
  if (!estimates.empty()) {
    const Eigen::Vector4d mean = average_estimate(estimates);
    out << "# mean";
    for (int j = 0; j < 4; ++j) out << ',' << format_number(mean(j));
    out << '\n';
  }
}

}  // namespace kappaphi
