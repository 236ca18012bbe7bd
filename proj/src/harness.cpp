#include "kappaphi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kappaphi/errors.hpp"
#include "kappaphi/io.hpp"

namespace kappaphi {
namespace {

using nlohmann::json;

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
  }
}

double get_number(const json& j, const std::string& context) {
  if (!j.is_number()) throw ConfigError(context + ": expected a number");
  return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& context) {
  if (!j.is_number_unsigned()) throw ConfigError(context + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = get_number(j[i], context + "[" + std::to_string(i) + "]");
  }
  return v;
}

Vec2 get_vec2(const json& j, const std::string& context) {
  const Eigen::VectorXd v = get_vector(j, context);
  if (v.size() != 2) throw ConfigError(context + ": expected two numbers");
  return v;
}

// A scalar means c * I, a flat array the diagonal, nested arrays a full matrix.
// A scalar is stored as a 1x1 matrix and expanded once the state size is known.
Eigen::MatrixXd get_matrix(const json& j, const std::string& context) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(context + ": expected a number or array");
  if (!j[0].is_array()) {
    const Eigen::VectorXd diag = get_vector(j, context);
    return diag.asDiagonal();
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = get_vector(j[r], context);
    if (row.size() != rows) throw ConfigError(context + ": matrix must be square");
    m.row(r) = row.transpose();
  }
  return m;
}

Eigen::MatrixXd expand_matrix(const Eigen::MatrixXd& m, Eigen::Index n, double fallback,
                              const std::string& context) {
  if (m.size() == 0) return fallback * Eigen::MatrixXd::Identity(n, n);
  if (m.rows() == 1 && m.cols() == 1 && n != 1) return m(0, 0) * Eigen::MatrixXd::Identity(n, n);
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(context + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  return m;
}

TrajectorySource parse_trajectory(const json& j) {
  expect_keys(j, {"source", "kind", "samples", "step_s", "speed_mps", "initial_heading_rad",
                  "turn_steps", "path"},
              "trajectory");
  TrajectorySource source;
  const std::string kind = j.value("source", std::string("synthetic"));
  if (kind == "file") {
    source.kind = TrajectorySource::Kind::kFile;
    if (!j.contains("path")) throw ConfigError("trajectory: file source needs 'path'");
    source.path = j.at("path").get<std::string>();
    return source;
  }
  if (kind != "synthetic") throw ConfigError("trajectory.source must be 'synthetic' or 'file'");
  if (j.contains("path")) throw ConfigError("trajectory: 'path' requires source 'file'");

  const std::string segment = j.value("kind", std::string("corner"));
  if (segment == "corner") {
    source.segment = SegmentKind::kCorner;
  } else if (segment == "straight") {
    source.segment = SegmentKind::kStraight;
  } else {
    throw ConfigError("trajectory.kind must be 'straight' or 'corner'");
  }
  if (j.contains("samples")) source.samples = get_count(j["samples"], "trajectory.samples");
  if (j.contains("step_s")) source.options.step_s = get_number(j["step_s"], "trajectory.step_s");
  if (j.contains("speed_mps")) {
    source.options.speed_mps = get_number(j["speed_mps"], "trajectory.speed_mps");
  }
  if (j.contains("initial_heading_rad")) {
    source.options.initial_heading =
        get_number(j["initial_heading_rad"], "trajectory.initial_heading_rad");
  }
  if (j.contains("turn_steps")) {
    source.options.turn_steps =
        static_cast<int>(get_count(j["turn_steps"], "trajectory.turn_steps"));
  }
  return source;
}

ComponentSpec parse_component(const json& j, std::size_t index) {
  const std::string context = "model[" + std::to_string(index) + "]";
  expect_keys(j, {"name", "pivot", "direction", "axis", "initial"}, context);
  if (!j.contains("name") || !j["name"].is_string()) {
    throw ConfigError(context + ": missing component name");
  }
  ComponentSpec spec;
  spec.name = j["name"].get<std::string>();
  if (j.contains("pivot")) spec.pivot = get_vec2(j["pivot"], context + ".pivot");
  if (j.contains("direction")) {
    const std::string dir = j["direction"].get<std::string>();
    if (dir == "alpha_reference") {
      spec.direction = TransformDirection::kAlphaReference;
    } else if (dir == "beta_reference") {
      spec.direction = TransformDirection::kBetaReference;
    } else {
      throw ConfigError(context + ".direction must be 'alpha_reference' or 'beta_reference'");
    }
  }
  if (j.contains("axis")) {
    const std::string axis = j["axis"].get<std::string>();
    if (axis == "east") {
      spec.axis = ShearAxis::kEast;
    } else if (axis == "north") {
      spec.axis = ShearAxis::kNorth;
    } else {
      throw ConfigError(context + ".axis must be 'east' or 'north'");
    }
  }
  if (j.contains("initial")) spec.initial = get_vector(j["initial"], context + ".initial");
  return spec;
}

InjectionConfig parse_injection(const json& j) {
  expect_keys(j, {"true_params", "noise_sigma_alpha", "noise_sigma_beta", "rng_seed"},
              "injection");
  InjectionConfig cfg;
  if (!j.contains("true_params")) throw ConfigError("injection: missing 'true_params'");
  cfg.true_params = get_vector(j["true_params"], "injection.true_params");
  if (j.contains("noise_sigma_alpha")) {
    cfg.noise_sigma_alpha = get_number(j["noise_sigma_alpha"], "injection.noise_sigma_alpha");
  }
  if (j.contains("noise_sigma_beta")) {
    cfg.noise_sigma_beta = get_number(j["noise_sigma_beta"], "injection.noise_sigma_beta");
  }
  if (j.contains("rng_seed")) {
    if (!j["rng_seed"].is_number_unsigned()) {
      throw ConfigError("injection.rng_seed: expected a non-negative integer");
    }
    cfg.rng_seed = j["rng_seed"].get<std::uint64_t>();
  }
  return cfg;
}

UkfSettings parse_ukf(const json& j) {
  expect_keys(j, {"alpha", "beta", "kappa", "process_noise", "initial_covariance",
                  "innovation_gate"},
              "ukf");
  UkfSettings s;
  if (j.contains("alpha")) s.alpha = get_number(j["alpha"], "ukf.alpha");
  if (j.contains("beta")) s.beta = get_number(j["beta"], "ukf.beta");
  if (j.contains("kappa")) s.kappa = get_number(j["kappa"], "ukf.kappa");
  if (j.contains("process_noise")) {
    s.process_noise = get_matrix(j["process_noise"], "ukf.process_noise");
  }
  if (j.contains("initial_covariance")) {
    s.initial_covariance = get_matrix(j["initial_covariance"], "ukf.initial_covariance");
  }
  if (j.contains("innovation_gate") && !j["innovation_gate"].is_null()) {
    s.innovation_gate = get_number(j["innovation_gate"], "ukf.innovation_gate");
  }
  return s;
}

FrameAlignment parse_alignment(const json& j) {
  expect_keys(j, {"rotation_rad", "translation"}, "alignment");
  FrameAlignment a;
  if (j.contains("rotation_rad")) a.rotation = get_number(j["rotation_rad"], "alignment.rotation_rad");
  if (j.contains("translation")) a.translation = get_vec2(j["translation"], "alignment.translation");
  return a;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    expect_keys(j, {"trajectory", "model", "injection", "ukf", "alignment", "n_runs", "workers",
                    "convergence_threshold", "output"},
                "config");
    ExperimentConfig cfg;
    if (j.contains("trajectory")) cfg.trajectory = parse_trajectory(j["trajectory"]);
    if (!j.contains("model") || !j["model"].is_array()) {
      throw ConfigError("config: 'model' must be a list of components");
    }
    for (std::size_t i = 0; i < j["model"].size(); ++i) {
      cfg.model.push_back(parse_component(j["model"][i], i));
    }
    if (j.contains("injection")) cfg.injection = parse_injection(j["injection"]);
    if (j.contains("ukf")) cfg.ukf = parse_ukf(j["ukf"]);
    if (j.contains("alignment")) cfg.alignment = parse_alignment(j["alignment"]);
    if (j.contains("n_runs")) cfg.n_runs = get_count(j["n_runs"], "n_runs");
    if (j.contains("workers")) cfg.workers = get_count(j["workers"], "workers");
    if (j.contains("convergence_threshold")) {
      cfg.convergence_threshold = get_number(j["convergence_threshold"], "convergence_threshold");
    }
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    validate(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

namespace {

ExperimentConfig preset_config(SegmentKind segment, std::size_t samples) {
  ExperimentConfig cfg;
  cfg.trajectory.kind = TrajectorySource::Kind::kSynthetic;
  cfg.trajectory.segment = segment;
  cfg.trajectory.samples = samples;
  cfg.model.resize(2);
  cfg.model[0].name = "phi_agent";
  cfg.model[1].name = "kappa_translation";
  cfg.injection.true_params = Eigen::Vector4d(2.0, 1.0, 3.0, 2.0);
  // 0.2 m total noise, equal variance per localizer.
  cfg.injection.noise_sigma_alpha = 0.2 / std::sqrt(2.0);
  cfg.injection.noise_sigma_beta = 0.2 / std::sqrt(2.0);
  cfg.injection.rng_seed = 20240101;
  cfg.ukf.process_noise = 0.1 * Eigen::MatrixXd::Identity(4, 4);
  cfg.ukf.initial_covariance = 10.0 * Eigen::MatrixXd::Identity(4, 4);
  cfg.n_runs = 100;
  return cfg;
}

}  // namespace

ExperimentConfig preset_corner_config() { return preset_config(SegmentKind::kCorner, 200); }

ExperimentConfig preset_straight_config() { return preset_config(SegmentKind::kStraight, 100); }

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.model.empty()) throw ConfigError("model needs at least one component");
  static const std::set<std::string> catalog = {"kappa_translation", "phi_agent", "map_rotation",
                                                "map_scale", "map_shear"};
  for (const auto& spec : cfg.model) {
    if (!catalog.contains(spec.name)) {
      throw ConfigError("unknown error component '" + spec.name + "'");
    }
  }
  if (!(cfg.convergence_threshold > 0.0)) throw ConfigError("convergence_threshold must be > 0");
  if (cfg.injection.noise_sigma_alpha < 0.0 || cfg.injection.noise_sigma_beta < 0.0) {
    throw ConfigError("noise standard deviations must be non-negative");
  }
}

CompositeModel build_model(const std::vector<ComponentSpec>& specs, const Trajectory& trajectory) {
  const Vec2 default_pivot = centroid(trajectory);
  std::vector<ErrorComponent> components;
  for (const auto& spec : specs) {
    const Vec2 pivot = spec.pivot.value_or(default_pivot);
    if (spec.name == "kappa_translation") {
      components.push_back(make_kappa_translation());
    } else if (spec.name == "phi_agent") {
      components.push_back(make_phi_agent());
    } else if (spec.name == "map_rotation") {
      components.push_back(make_map_rotation(pivot, spec.direction));
    } else if (spec.name == "map_scale") {
      components.push_back(make_map_scale(pivot, spec.direction));
    } else if (spec.name == "map_shear") {
      components.push_back(make_map_shear(pivot, spec.axis, spec.direction));
    } else {
      throw ConfigError("unknown error component '" + spec.name + "'");
    }
  }
  try {
    return CompositeModel(std::move(components));
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
}

Trajectory build_trajectory(const TrajectorySource& source) {
  if (source.kind == TrajectorySource::Kind::kFile) return load_trajectory(source.path);
  return synthesize_trajectory(source.segment, source.samples, source.options);
}

UkfConfig build_ukf(const ExperimentConfig& cfg, const CompositeModel& model) {
  const Eigen::Index n = model.state_dim();
  if (cfg.model.size() != model.components().size()) {
    throw ConfigError("model specification does not match the built model");
  }
  UkfConfig ukf;
  ukf.alpha = cfg.ukf.alpha;
  ukf.beta = cfg.ukf.beta;
  ukf.kappa = cfg.ukf.kappa;
  ukf.innovation_gate = cfg.ukf.innovation_gate;
  ukf.process_noise = expand_matrix(cfg.ukf.process_noise, n, 0.1, "ukf.process_noise");
  ukf.initial_belief.covariance =
      expand_matrix(cfg.ukf.initial_covariance, n, 10.0, "ukf.initial_covariance");
  ukf.initial_belief.mean = model.neutral_state();
  for (std::size_t i = 0; i < cfg.model.size(); ++i) {
    const auto& initial = cfg.model[i].initial;
    if (!initial) continue;
    const Eigen::Index dim = model.components()[i].param_dim();
    if (initial->size() != dim) {
      throw ConfigError("model[" + std::to_string(i) + "].initial must have " +
                        std::to_string(dim) + " entries");
    }
    ukf.initial_belief.mean.segment(model.offset(i), dim) = *initial;
  }
  try {
    validate(ukf);
  } catch (const Error& e) {
    throw ConfigError(std::string("ukf: ") + e.what());
  }

  return ukf;
}

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  Trajectory trajectory = build_trajectory(cfg.trajectory);
  CompositeModel model = build_model(cfg.model, trajectory);
  const Eigen::Index n = model.state_dim();

  if (cfg.injection.true_params.size() != n) {
    throw ConfigError("injection.true_params has " +
                      std::to_string(cfg.injection.true_params.size()) +
                      " entries, the model has " + std::to_string(n) + " parameters");
  }

  UkfConfig ukf = build_ukf(cfg, model);
  return {std::move(trajectory), std::move(model), std::move(ukf), cfg.injection};
}

std::vector<std::string> parameter_names(const CompositeModel& model) {
  std::vector<std::string> names;
  for (const auto& component : model.components()) {
    for (Eigen::Index i = 0; i < component.param_dim(); ++i) {
      names.push_back(component.name() + "_" + std::to_string(i + 1));
    }
  }
  return names;
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::size_t run_index) {
  // splitmix64 finalizer over a combination of both inputs.
  std::uint64_t z = master_seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(run_index) + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunResult run_single(const PreparedExperiment& prepared, std::size_t run_index) {
  try {
    InjectionConfig injection = prepared.injection;
    injection.rng_seed = derive_run_seed(prepared.injection.rng_seed, run_index);
    const auto samples = inject_errors(prepared.trajectory, injection, prepared.model);
    const auto steps = to_filter_steps(samples);
    const auto beliefs = run_filter(prepared.model, prepared.ukf, steps);

    RunResult result;
    result.means.resize(static_cast<Eigen::Index>(steps.size()), prepared.model.state_dim());
    for (std::size_t k = 0; k < steps.size(); ++k) {
      result.means.row(static_cast<Eigen::Index>(k)) = beliefs[k + 1].mean.transpose();
    }
    return result;
  } catch (const Error& e) {
    throw RunError(run_index, e.what());
  }
}

MseSeries aggregate(const PreparedExperiment& prepared, const std::vector<RunResult>& runs) {
  if (runs.empty()) throw Error("cannot aggregate zero runs");
  const Eigen::Index steps = runs.front().means.rows();
  const Eigen::Index n = prepared.model.state_dim();
  const double count = static_cast<double>(runs.size());

  MseSeries series;
  series.n_runs = runs.size();
  series.truth = prepared.injection.true_params;
  series.initial_mean = prepared.ukf.initial_belief.mean;
  series.initial_mse = (series.initial_mean - series.truth).array().square().matrix();
  series.parameter_names = parameter_names(prepared.model);
  for (const auto& sample : prepared.trajectory) series.times.push_back(sample.t);

  series.mean = Eigen::MatrixXd::Zero(steps, n);
  for (const auto& run : runs) {
    if (run.means.rows() != steps || run.means.cols() != n) {
      throw DimensionMismatch("run results differ in shape");
    }
    series.mean += run.means;
  }
  series.mean /= count;

  series.mse = Eigen::MatrixXd::Zero(steps, n);
  series.variance = Eigen::MatrixXd::Zero(steps, n);
  const Eigen::RowVectorXd truth = series.truth.transpose();
  for (const auto& run : runs) {
    series.mse += (run.means.rowwise() - truth).array().square().matrix();
    series.variance += (run.means - series.mean).array().square().matrix();
  }
  series.mse /= count;
  series.variance /= count;
  return series;
}

MseSeries run_experiment(const ExperimentConfig& cfg) {
  const PreparedExperiment prepared = prepare_experiment(cfg);
  std::vector<RunResult> results(cfg.n_runs);
  std::vector<std::exception_ptr> failures(cfg.n_runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t run = next++; run < cfg.n_runs; run = next++) {
      try {
        results[run] = run_single(prepared, run);
      } catch (...) {
        failures[run] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(cfg.workers, cfg.n_runs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return aggregate(prepared, results);
}

std::vector<ParameterSummary> summarize(const MseSeries& series, double convergence_threshold) {
  if (series.steps() == 0) throw Error("empty MSE series");
  const Eigen::Index last = static_cast<Eigen::Index>(series.steps()) - 1;
  std::vector<ParameterSummary> out;
  for (Eigen::Index j = 0; j < series.state_dim(); ++j) {
    ParameterSummary s;
    s.name = static_cast<std::size_t>(j) < series.parameter_names.size()
                 ? series.parameter_names[static_cast<std::size_t>(j)]
                 : "x" + std::to_string(j + 1);
    s.truth = series.truth(j);
    s.final_mean = series.mean(last, j);
    s.final_variance = series.variance(last, j);
    s.initial_mse = series.initial_mse(j);
    s.final_mse = series.mse(last, j);
    s.converged = s.final_mse < convergence_threshold;
    out.push_back(s);
  }
  return out;
}

void emit_results(const MseSeries& series, const std::filesystem::path& out_dir,
                  double convergence_threshold) {
  if (series.steps() == 0) throw Error("empty MSE series");
  if (out_dir.empty()) throw IoError("no output path given");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  {
    std::ofstream out(out_dir / "mse.csv");
    if (!out) throw IoError("cannot write '" + (out_dir / "mse.csv").string() + "'");
    write_mse_table(out, series);
    if (!out) throw IoError("write failed for mse.csv");
  }
  {
    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw IoError("cannot write '" + (out_dir / "summary.csv").string() + "'");
    write_summary(out, summarize(series, convergence_threshold));
    if (!out) throw IoError("write failed for summary.csv");
  }
}

}  // namespace kappaphi
