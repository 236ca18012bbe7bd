// kappaphi: simulate, filter and analyze localization-difference error models.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "kappaphi/errors.hpp"
#include "kappaphi/harness.hpp"
#include "kappaphi/io.hpp"
#include "kappaphi/observability.hpp"
#include "kappaphi/simulation.hpp"

namespace {

using namespace kappaphi;

struct CommonFlags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_config_flags(CLI::App* cmd, CommonFlags& flags) {
  auto* config = cmd->add_option("--config", flags.config, "Experiment config (JSON)");
  auto* preset = cmd->add_option("--preset", flags.preset, "Built-in setup instead of a config")
                     ->check(CLI::IsMember({"corner", "straight"}));
  config->excludes(preset);
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config.empty()) {
    cfg = load_experiment_config(flags.config);
  } else if (flags.preset == "straight") {
    cfg = preset_straight_config();
  } else if (flags.preset == "corner") {
    cfg = preset_corner_config();
  } else {
    throw ConfigError("either --config or --preset is required");
  }
  if (flags.seed) cfg.injection.rng_seed = *flags.seed;
  if (flags.runs) cfg.n_runs = *flags.runs;
  if (flags.workers) cfg.workers = *flags.workers;
  if (!flags.out.empty()) cfg.output = flags.out;
  validate(cfg);
  return cfg;
}

// Writes through `write` to `path`, or to stdout when the path is empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write(out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ObservationRecord> read_observation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  return read_observations(in);
}

Trajectory trajectory_from_records(const std::vector<ObservationRecord>& records) {
  Trajectory trajectory;
  for (const auto& r : records) trajectory.push_back({r.t, r.p_alpha, r.heading});
  return trajectory;
}

int cmd_simulate(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags);
  const PreparedExperiment prepared = prepare_experiment(cfg);
  const auto samples = inject_errors(prepared.trajectory, prepared.injection, prepared.model);
  with_output(flags.out, [&](std::ostream& out) { write_observations(out, samples); });
  return 0;
}

int cmd_filter(const CommonFlags& flags, const std::string& data) {
  const ExperimentConfig cfg = resolve_config(flags);
  const auto records = read_observation_file(data);
  const CompositeModel model = build_model(cfg.model, trajectory_from_records(records));
  const UkfConfig ukf = build_ukf(cfg, model);
  const auto steps = to_filter_steps(records, cfg.alignment);
  const auto beliefs = run_filter(model, ukf, steps);
  const auto names = parameter_names(model);
  with_output(flags.out, [&](std::ostream& out) {
    write_filter_output(out, records, beliefs, names);
  });
  return 0;
}

int cmd_experiment(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags);
  const MseSeries series = run_experiment(cfg);
  if (!cfg.output.empty()) {
    emit_results(series, cfg.output, cfg.convergence_threshold);
    std::cerr << "wrote " << (cfg.output / "mse.csv").string() << " and "
              << (cfg.output / "summary.csv").string() << '\n';
  }
  write_summary(std::cout, summarize(series, cfg.convergence_threshold));
  return 0;
}

int cmd_observability(const CommonFlags& flags, std::optional<std::size_t> window,
                      double tolerance) {
  const ExperimentConfig cfg = resolve_config(flags);
  const Trajectory trajectory = build_trajectory(cfg.trajectory);
  const CompositeModel model = build_model(cfg.model, trajectory);
  const ErrorState x0 = build_ukf(cfg, model).initial_belief.mean;
  const auto report =
      numerical_rank_test(model, x0, reference_inputs(trajectory),
                          window.value_or(default_window_length(model)), tolerance);
  with_output(flags.out, [&](std::ostream& out) { write_observability_report(out, report); });
  return report.observable ? 0 : 2;
}

int cmd_oracle(const std::string& data, const std::string& out_path, double epsilon) {
  const auto records = read_observation_file(data);
  std::vector<double> times;
  std::vector<Vec2> differences;
  std::vector<double> headings;
  for (const auto& r : records) {
    times.push_back(r.t);
    differences.push_back(measured_difference(r.p_alpha, r.p_beta));
    headings.push_back(r.heading.gamma());
  }
  const auto estimates = closed_form_over_trace(times, differences, headings, epsilon);
  with_output(out_path, [&](std::ostream& out) { write_closed_form(out, estimates); });
  if (estimates.empty()) {
    std::cerr << "no samples with a heading rate above " << epsilon << " rad/s\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decompose localization differences into kinematic error components"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string data;
  std::optional<std::size_t> window;
  double tolerance = kDefaultRankTolerance;
  double epsilon = kDefaultTurnRateEpsilon;

  auto* simulate = app.add_subcommand("simulate", "Write one injected two-localizer trace");
  add_config_flags(simulate, flags);
  simulate->add_option("--seed", flags.seed, "Noise seed");
  simulate->add_option("--out", flags.out, "Output data file (stdout if omitted)");

  auto* filter = app.add_subcommand("filter", "Run the UKF on a data file");
  add_config_flags(filter, flags);
  filter->add_option("--data", data, "Data file written by 'simulate'")->required();
  filter->add_option("--out", flags.out, "Estimate table (stdout if omitted)");

  auto* experiment = app.add_subcommand("experiment", "Monte Carlo MSE experiment");
  add_config_flags(experiment, flags);
  experiment->add_option("--seed", flags.seed, "Master seed");
  experiment->add_option("--runs", flags.runs, "Number of runs")->check(CLI::PositiveNumber);
  experiment->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
  experiment->add_option("--out", flags.out, "Result directory");

  auto* observability = app.add_subcommand("observability", "Windowed rank report");
  add_config_flags(observability, flags);
  observability->add_option("--window", window, "Window length in samples")
      ->check(CLI::PositiveNumber);
  observability->add_option("--tolerance", tolerance, "Relative singular value cutoff");
  observability->add_option("--out", flags.out, "Report file (stdout if omitted)");

  auto* oracle = app.add_subcommand("oracle", "Closed-form agent offset + translation");
  oracle->add_option("--data", data, "Data file written by 'simulate'")->required();
  oracle->add_option("--epsilon", epsilon, "Minimum |heading rate| in rad/s");
  oracle->add_option("--out", flags.out, "Output file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (filter->parsed()) return cmd_filter(flags, data);
    if (experiment->parsed()) return cmd_experiment(flags);
    if (observability->parsed()) return cmd_observability(flags, window, tolerance);
    if (oracle->parsed()) return cmd_oracle(data, flags.out, epsilon);
  } catch (const kappaphi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
