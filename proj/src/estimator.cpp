#include "kappaphi/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <string>
#include <utility>

#include "kappaphi/errors.hpp"

namespace kappaphi {
namespace {

void check_belief(const GaussianBelief& belief) {
  const Eigen::Index n = belief.mean.size();
  if (n < 1) throw DimensionMismatch("belief must have dimension >= 1");
  if (belief.covariance.rows() != n || belief.covariance.cols() != n) {
    throw DimensionMismatch("belief covariance is " + std::to_string(belief.covariance.rows()) +
                            "x" + std::to_string(belief.covariance.cols()) + ", mean has " +
                            std::to_string(n) + " entries");
  }
}

double spread_lambda(const UkfConfig& cfg, Eigen::Index n) {
  const double dim = static_cast<double>(n);
  return cfg.alpha * cfg.alpha * (dim + cfg.kappa) - dim;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

bool is_symmetric_psd(const Eigen::MatrixXd& m, double sym_tol, double psd_tol) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(m), Eigen::EigenvaluesOnly);
  const double floor = -psd_tol * std::max(std::abs(m.trace()), 1.0);
  return eig.eigenvalues().minCoeff() >= floor;
}

void validate(const UkfConfig& cfg) {
  check_belief(cfg.initial_belief);
  const Eigen::Index n = cfg.initial_belief.mean.size();
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    throw Error("UKF alpha must lie in (0, 1], got " + std::to_string(cfg.alpha));
  }
  if (!(static_cast<double>(n) + spread_lambda(cfg, n) > 0.0)) {
    throw Error("UKF spread parameters give a non-positive n + lambda");
  }
  if (cfg.process_noise.rows() != n || cfg.process_noise.cols() != n) {
    throw DimensionMismatch("process noise must be " + std::to_string(n) + "x" +
                            std::to_string(n));
  }
  if (!is_symmetric_psd(cfg.process_noise)) throw NotPsd("process noise Q is not symmetric PSD");
  if (!is_symmetric_psd(cfg.initial_belief.covariance)) {
    throw NotPsd("initial covariance is not symmetric PSD");
  }
  if (cfg.innovation_gate && !(*cfg.innovation_gate > 0.0)) {
    throw Error("innovation gate must be positive");
  }
}

Mat2 compose_measurement_covariance(const Mat2& sigma_alpha, const Mat2& sigma_beta) {
  if (!is_symmetric_psd(sigma_alpha)) throw NotPsd("Sigma_alpha is not symmetric PSD");
  if (!is_symmetric_psd(sigma_beta)) throw NotPsd("Sigma_beta is not symmetric PSD");
  return sigma_alpha + sigma_beta;
}

Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& covariance) {
  const Eigen::Index n = covariance.rows();
  if (covariance.isZero(0.0)) return Eigen::MatrixXd::Zero(n, n);

  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double jitter = 1e-9 * covariance.trace() / static_cast<double>(n);
  if (jitter > 0.0) {
    Eigen::MatrixXd inflated = covariance;
    inflated.diagonal().array() += jitter;
    llt.compute(inflated);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw CholeskyFailure("covariance is not positive definite after jitter (filter divergence?)");
}

SigmaPoints generate_sigma_points(const GaussianBelief& belief, const UkfConfig& cfg) {
  check_belief(belief);
  const Eigen::Index n = belief.mean.size();
  const double lambda = spread_lambda(cfg, n);
  const double spread = static_cast<double>(n) + lambda;

  SigmaPoints sp;
  sp.mean_weights = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / spread);
  sp.mean_weights(0) = lambda / spread;
  sp.cov_weights = sp.mean_weights;
  sp.cov_weights(0) += 1.0 - cfg.alpha * cfg.alpha + cfg.beta;

  const Eigen::MatrixXd offsets = std::sqrt(spread) * covariance_sqrt(belief.covariance);
  sp.points.resize(n, 2 * n + 1);
  sp.points.col(0) = belief.mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    sp.points.col(1 + i) = belief.mean + offsets.col(i);
    sp.points.col(1 + n + i) = belief.mean - offsets.col(i);
  }
  return sp;
}

GaussianBelief predict(const GaussianBelief& belief, const UkfConfig& cfg) {
  check_belief(belief);
  if (cfg.process_noise.rows() != belief.mean.size() ||
      cfg.process_noise.cols() != belief.mean.size()) {
    throw DimensionMismatch("process noise does not match belief dimension");
  }
  return {belief.mean, belief.covariance + cfg.process_noise};
}

GaussianBelief update(const GaussianBelief& belief, const DifferenceObservation& obs,
                      const KinematicInput& u, const CompositeModel& model,
                      const UkfConfig& cfg) {
  check_belief(belief);
  if (belief.mean.size() != model.state_dim()) {
    throw DimensionMismatch("belief has dimension " + std::to_string(belief.mean.size()) +
                            ", model expects " + std::to_string(model.state_dim()));
  }
  if (!is_symmetric_psd(obs.R)) throw NotPsd("observation covariance R is not symmetric PSD");

  const SigmaPoints sp = generate_sigma_points(belief, cfg);
  const Eigen::Index count = sp.points.cols();

  Eigen::Matrix<double, 2, Eigen::Dynamic> z(2, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    z.col(i) = evaluate_difference_model(model, sp.points.col(i), u);
  }
  const Vec2 z_mean = z * sp.mean_weights;

  const Eigen::Matrix<double, 2, Eigen::Dynamic> dz = z.colwise() - z_mean;
  const Eigen::MatrixXd dx = sp.points.colwise() - belief.mean;
  const Mat2 s = dz * sp.cov_weights.asDiagonal() * dz.transpose() + obs.R;
  const Eigen::Matrix<double, Eigen::Dynamic, 2> cross =
      dx * sp.cov_weights.asDiagonal() * dz.transpose();

  Eigen::FullPivLU<Mat2> s_lu(s);
  if (!s_lu.isInvertible()) throw CholeskyFailure("innovation covariance is singular");
  const Mat2 s_inv = s_lu.inverse();
  const Vec2 innovation = obs.d - z_mean;

  if (cfg.innovation_gate && innovation.dot(s_inv * innovation) > *cfg.innovation_gate) {
    return belief;
  }

  const Eigen::Matrix<double, Eigen::Dynamic, 2> gain = cross * s_inv;
  GaussianBelief posterior;
  posterior.mean = belief.mean + gain * innovation;
  posterior.covariance = symmetrized(belief.covariance - gain * s * gain.transpose());
  return posterior;
}

std::vector<GaussianBelief> run_filter(const CompositeModel& model, const UkfConfig& cfg,
                                       std::span<const FilterStep> steps) {
  validate(cfg);
  if (cfg.initial_belief.mean.size() != model.state_dim()) {
    throw DimensionMismatch("initial belief does not match model dimension");
  }
  std::vector<GaussianBelief> beliefs;
  beliefs.reserve(steps.size() + 1);
  beliefs.push_back(cfg.initial_belief);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    try {
      beliefs.push_back(update(predict(beliefs.back(), cfg), steps[k].observation,
                               steps[k].input, model, cfg));
    } catch (const Error& e) {
      throw StepError(k, e.what());
    }
  }
  return beliefs;
}

UnscentedFilter::UnscentedFilter(CompositeModel model, UkfConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
  validate(cfg_);
  if (cfg_.initial_belief.mean.size() != model_.state_dim()) {
    throw DimensionMismatch("initial belief does not match model dimension");
  }
  belief_ = cfg_.initial_belief;
}

const GaussianBelief& UnscentedFilter::step(const DifferenceObservation& obs,
                                            const KinematicInput& u) {
  belief_ = update(predict(belief_, cfg_), obs, u, model_, cfg_);
  return belief_;
}

}  // namespace kappaphi
