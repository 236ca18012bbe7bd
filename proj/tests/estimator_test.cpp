#include "kappaphi/estimator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kappaphi/errors.hpp"
#include "kappaphi/simulation.hpp"
#include "test_support.hpp"

namespace kappaphi {
namespace {

using testing::LinearKalman;
using testing::random_spd;
using testing::random_vector;

UkfConfig config_for(Eigen::Index n, double p0 = 10.0, double q = 0.1) {
  UkfConfig cfg;
  cfg.process_noise = q * Eigen::MatrixXd::Identity(n, n);
  cfg.initial_belief = {Eigen::VectorXd::Zero(n), p0 * Eigen::MatrixXd::Identity(n, n)};
  return cfg;
}

KinematicInput at_heading(double gamma) { return {0.0, Heading(gamma), Vec2::Zero()}; }

TEST(ComposeMeasurementCovariance, Examples) {
  const Mat2 a = 0.04 * Mat2::Identity();
  EXPECT_EQ(compose_measurement_covariance(a, Mat2::Zero()), a);
  EXPECT_TRUE(compose_measurement_covariance(0.02 * Mat2::Identity(), 0.02 * Mat2::Identity())
                  .isApprox(0.04 * Mat2::Identity()));
  Mat2 b;
  b << 0.3, 0.1,
       0.1, 0.2;
  EXPECT_EQ(compose_measurement_covariance(a, b), compose_measurement_covariance(b, a));
}

TEST(ComposeMeasurementCovariance, RejectsNonPsd) {
  Mat2 bad;
  bad << 1.0, 2.0,
         2.0, 1.0;  // eigenvalue -1
  EXPECT_THROW(compose_measurement_covariance(bad, Mat2::Identity()), NotPsd);
  Mat2 asym;
  asym << 1.0, 0.5,
          0.0, 1.0;
  EXPECT_THROW(compose_measurement_covariance(Mat2::Identity(), asym), NotPsd);
}

TEST(SigmaPoints, ScalarClosedForm) {
  // n = 1, alpha = 0.1, kappa = 0: lambda = 0.01 - 1, n + lambda = 0.01, so
  // points are 0 and +-sqrt(0.01) = +-0.1; mean weights -99, 50, 50.
  UkfConfig cfg = config_for(1);
  const GaussianBelief belief{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  const SigmaPoints sp = generate_sigma_points(belief, cfg);
  ASSERT_EQ(sp.points.cols(), 3);
  EXPECT_NEAR(sp.points(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(sp.points(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(sp.points(0, 2), -0.1, 1e-15);
  EXPECT_NEAR(sp.mean_weights(0), -99.0, 1e-9);
  EXPECT_NEAR(sp.mean_weights(1), 50.0, 1e-9);
  EXPECT_NEAR(sp.cov_weights(0), -99.0 + 1.0 - 0.01 + 2.0, 1e-9);
  EXPECT_NEAR(sp.mean_weights.sum(), 1.0, 1e-12);
}

TEST(SigmaPoints, MomentReconstruction) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    UkfConfig cfg = config_for(n);
    cfg.alpha = (trial % 3 == 0) ? 1e-1 : (trial % 3 == 1 ? 0.5 : 1.0);
    const GaussianBelief belief{random_vector(rng, n, 5.0), random_spd(rng, n)};
    const SigmaPoints sp = generate_sigma_points(belief, cfg);
    ASSERT_EQ(sp.points.cols(), 2 * n + 1);
    EXPECT_NEAR(sp.mean_weights.sum(), 1.0, 1e-12);

    const Eigen::VectorXd mean = sp.points * sp.mean_weights;
    EXPECT_LT((mean - belief.mean).norm(), 1e-9 * std::max(1.0, belief.mean.norm()));

    const Eigen::MatrixXd centered = sp.points.colwise() - belief.mean;
    const Eigen::VectorXd& wc_cov = sp.cov_weights;
    const Eigen::MatrixXd cov = centered * wc_cov.asDiagonal() * centered.transpose();
    EXPECT_LT((cov - belief.covariance).norm(), 1e-9 * belief.covariance.norm());
  }
}

TEST(SigmaPoints, ZeroCovarianceCollapsesToMean) {
  const GaussianBelief belief{Eigen::Vector3d(1, -2, 3), Eigen::MatrixXd::Zero(3, 3)};
  const SigmaPoints sp = generate_sigma_points(belief, config_for(3));
  for (Eigen::Index i = 0; i < sp.points.cols(); ++i) EXPECT_EQ(sp.points.col(i), belief.mean);
}

TEST(SigmaPoints, IndefiniteCovarianceFails) {
  Eigen::Matrix2d bad;
  bad << 1.0, 0.0,
         0.0, -1.0;
  const GaussianBelief belief{Eigen::Vector2d::Zero(), bad};
  EXPECT_THROW(generate_sigma_points(belief, config_for(2)), CholeskyFailure);
}

TEST(SigmaPoints, SingularCovarianceRecoversWithJitter) {
  Eigen::Matrix2d singular;
  singular << 1.0, 1.0,
              1.0, 1.0;
  const GaussianBelief belief{Eigen::Vector2d::Zero(), singular};
  const SigmaPoints sp = generate_sigma_points(belief, config_for(2));
  EXPECT_TRUE(sp.points.allFinite());
}

TEST(Predict, Examples) {
  UkfConfig cfg = config_for(4);
  cfg.process_noise.setZero();
  const GaussianBelief b{Eigen::Vector4d(1, 2, 3, 4), 2.0 * Eigen::MatrixXd::Identity(4, 4)};
  const GaussianBelief same = predict(b, cfg);
  EXPECT_EQ(same.mean, b.mean);
  EXPECT_EQ(same.covariance, b.covariance);

  const UkfConfig base = config_for(4);
  const GaussianBelief grown = predict(base.initial_belief, base);
  EXPECT_TRUE(grown.mean.isZero());
  EXPECT_TRUE(grown.covariance.isApprox(10.1 * Eigen::MatrixXd::Identity(4, 4)));

  GaussianBelief k = base.initial_belief;
  for (int i = 0; i < 7; ++i) k = predict(k, base);
  EXPECT_TRUE(k.covariance.isApprox(base.initial_belief.covariance + 7 * base.process_noise));
}

TEST(Predict, EigenvaluesNeverDecrease) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    UkfConfig cfg = config_for(n);
    cfg.process_noise = random_spd(rng, n, 0.0, 1.0);
    const GaussianBelief b{random_vector(rng, n), random_spd(rng, n)};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> before(b.covariance);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> after(predict(b, cfg).covariance);
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_GE(after.eigenvalues()(i), before.eigenvalues()(i) - 1e-12);
    }
  }
}

TEST(Update, KappaOnlyMatchesLinearKalman) {
  const CompositeModel model({make_kappa_translation()});
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    UkfConfig cfg = config_for(2);
    cfg.initial_belief = {random_vector(rng, 2, 3.0), random_spd(rng, 2)};
    cfg.process_noise = random_spd(rng, 2, 0.01, 0.5);
    const DifferenceObservation obs{random_vector(rng, 2, 4.0), random_spd(rng, 2, 0.01, 1.0)};

    const GaussianBelief post =
        update(predict(cfg.initial_belief, cfg), obs, at_heading(0.7), model, cfg);

    LinearKalman kf{cfg.initial_belief.mean, cfg.initial_belief.covariance};
    kf.predict(cfg.process_noise);
    kf.update(obs.d, obs.R);
    EXPECT_LT((post.mean - kf.x).norm(), 1e-9 * std::max(1.0, kf.x.norm()));
    EXPECT_LT((post.covariance - kf.P).norm(), 1e-9 * kf.P.norm());
  }
}

TEST(Update, ZeroInnovationKeepsMean) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  UkfConfig cfg = config_for(4);
  cfg.initial_belief.mean = Eigen::Vector4d(2, 1, 3, 2);
  const auto u = at_heading(0.4);
  const DifferenceObservation obs{
      evaluate_difference_model(model, cfg.initial_belief.mean, u), 0.04 * Mat2::Identity()};
  const GaussianBelief post = update(cfg.initial_belief, obs, u, model, cfg);
  EXPECT_LT((post.mean - cfg.initial_belief.mean).norm(), 1e-9);
}

TEST(Update, DimensionMismatch) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  const UkfConfig cfg = config_for(2);
  const DifferenceObservation obs{Vec2(1, 1), Mat2::Identity()};
  EXPECT_THROW(update(cfg.initial_belief, obs, at_heading(0), model, cfg), DimensionMismatch);
}

TEST(Update, InnovationGateSkipsOutliers) {
  const CompositeModel model({make_kappa_translation()});
  UkfConfig cfg = config_for(2, 0.01);
  cfg.innovation_gate = 9.21;  // chi2(2) 99%
  const DifferenceObservation outlier{Vec2(50, -50), 0.04 * Mat2::Identity()};
  const GaussianBelief post = update(cfg.initial_belief, outlier, at_heading(0), model, cfg);
  EXPECT_EQ(post.mean, cfg.initial_belief.mean);
  cfg.innovation_gate.reset();
  EXPECT_NE(update(cfg.initial_belief, outlier, at_heading(0), model, cfg).mean,
            cfg.initial_belief.mean);
}

TEST(Update, NoiselessCornerConvergesToInjectedParameters) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  const Trajectory corner = synthesize_trajectory(SegmentKind::kCorner, 200);
  const InjectionConfig injection{Eigen::Vector4d(2, 1, 3, 2), 0.0, 0.0, 1};
  auto steps = to_filter_steps(inject_errors(corner, injection, model));
  // Noiseless data, but the filter still assumes the nominal 0.2 m noise.
  for (auto& s : steps) s.observation.R = 0.04 * Mat2::Identity();
  const auto beliefs = run_filter(model, config_for(4), steps);
  EXPECT_LT((beliefs.back().mean - Eigen::Vector4d(2, 1, 3, 2)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(RunFilter, EmptyStream) {
  const CompositeModel model({make_kappa_translation()});
  const UkfConfig cfg = config_for(2);
  const auto beliefs = run_filter(model, cfg, {});
  ASSERT_EQ(beliefs.size(), 1u);
  EXPECT_EQ(beliefs[0].mean, cfg.initial_belief.mean);
}

TEST(RunFilter, SingleObservationMovesTowardMeasurement) {
  const CompositeModel model({make_kappa_translation()});
  UkfConfig cfg = config_for(2, 1.0, 0.0);
  const std::vector<FilterStep> steps = {{{Vec2(4, -2), Mat2::Identity()}, at_heading(0)}};
  const auto beliefs = run_filter(model, cfg, steps);
  ASSERT_EQ(beliefs.size(), 2u);
  // Scalar gain P / (P + R) = 1 / 2 on each axis.
  EXPECT_TRUE(beliefs[1].mean.isApprox(Eigen::Vector2d(2, -1), 1e-12));
}

TEST(RunFilter, StepErrorsCarryIndex) {
  const CompositeModel model({make_kappa_translation()});
  Mat2 bad;
  bad << 1.0, 3.0,
         3.0, 1.0;
  std::vector<FilterStep> steps(5, {{Vec2(1, 1), Mat2::Identity()}, at_heading(0)});
  steps[3].observation.R = bad;
  try {
    run_filter(model, config_for(2), steps);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), 3u);
  }
}

TEST(RunFilter, LinearEquivalenceOverLongSequences) {
  const CompositeModel model({make_kappa_translation()});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    UkfConfig cfg = config_for(2);
    cfg.initial_belief = {random_vector(rng, 2, 2.0), random_spd(rng, 2, 0.5, 20.0)};
    cfg.process_noise = random_spd(rng, 2, 0.0, 0.2);
    std::vector<FilterStep> steps;
    for (int k = 0; k < 100; ++k) {
      steps.push_back({{random_vector(rng, 2, 3.0), random_spd(rng, 2, 0.01, 1.0)},
                       at_heading(0.01 * k)});
    }
    const auto beliefs = run_filter(model, cfg, steps);
    LinearKalman kf{cfg.initial_belief.mean, cfg.initial_belief.covariance};
    for (std::size_t k = 0; k < steps.size(); ++k) {
      kf.predict(cfg.process_noise);
      kf.update(steps[k].observation.d, steps[k].observation.R);
      ASSERT_LT((beliefs[k + 1].mean - kf.x).cwiseAbs().maxCoeff(), 1e-8) << "step " << k;
      ASSERT_LT((beliefs[k + 1].covariance - kf.P).cwiseAbs().maxCoeff(), 1e-8) << "step " << k;
    }
  }
}

TEST(RunFilter, PosteriorStaysPsdUnderFuzzing) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(-3.1, 3.1);
  std::uniform_int_distribution<int> pick(0, 2);
  const CompositeModel agent_kappa({make_phi_agent(), make_kappa_translation()});
  const CompositeModel with_rotation(
      {make_phi_agent(), make_kappa_translation(), make_map_rotation(Vec2(0, 0))});
  const CompositeModel kappa_only({make_kappa_translation()});
  const CompositeModel* models[] = {&agent_kappa, &with_rotation, &kappa_only};

  for (int trial = 0; trial < 1000; ++trial) {
    const CompositeModel& model = *models[pick(rng)];
    const Eigen::Index n = model.state_dim();
    UkfConfig cfg = config_for(n);
    cfg.initial_belief = {random_vector(rng, n, 0.1), random_spd(rng, n, 0.001, 0.05)};
    cfg.process_noise = random_spd(rng, n, 0.0, 0.01);
    GaussianBelief belief = cfg.initial_belief;
    for (int k = 0; k < 20; ++k) {
      KinematicInput u{static_cast<double>(k), Heading(angle(rng)),
                       random_vector(rng, 2, 30.0)};
      const DifferenceObservation obs{random_vector(rng, 2, 1.0),
                                      random_spd(rng, 2, 0.01, 0.5)};
      belief = update(predict(belief, cfg), obs, u, model, cfg);
      ASSERT_TRUE(is_symmetric_psd(belief.covariance)) << "trial " << trial << " step " << k;
    }
  }
}

TEST(RunFilter, NoiselessErrorShrinksInMostRuns) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  const Trajectory corner = synthesize_trajectory(SegmentKind::kCorner, 200);
  std::mt19937_64 rng(77);
  int improved = 0;
  for (int run = 0; run < 100; ++run) {
    const Eigen::Vector4d truth = random_vector(rng, 4, 3.0);
    UkfConfig cfg = config_for(4);
    cfg.initial_belief.mean = truth + random_vector(rng, 4, 2.0);
    InjectionConfig injection{truth, 0.0, 0.0, static_cast<std::uint64_t>(run)};
    auto steps = to_filter_steps(inject_errors(corner, injection, model));
    for (auto& s : steps) s.observation.R = 0.04 * Mat2::Identity();
    const auto beliefs = run_filter(model, cfg, steps);
    const double initial = (cfg.initial_belief.mean - truth).norm();
    const double final_error = (beliefs.back().mean - truth).norm();
    if (final_error < initial) ++improved;
  }
  EXPECT_GE(improved, 95);
}

TEST(UnscentedFilter, MatchesRunFilter) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  const UkfConfig cfg = config_for(4);
  const Trajectory corner = synthesize_trajectory(SegmentKind::kCorner, 60);
  const auto steps = to_filter_steps(
      inject_errors(corner, {Eigen::Vector4d(2, 1, 3, 2), 0.1, 0.1, 9}, model));
  const auto beliefs = run_filter(model, cfg, steps);
  UnscentedFilter filter(model, cfg);
  for (const auto& s : steps) filter.step(s.observation, s.input);
  EXPECT_EQ(filter.belief().mean, beliefs.back().mean);
}

TEST(Validate, RejectsBadConfig) {
  UkfConfig cfg = config_for(2);
  cfg.alpha = 0.0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = config_for(2);
  cfg.process_noise(0, 0) = -1.0;
  EXPECT_THROW(validate(cfg), NotPsd);
  cfg = config_for(2);
  cfg.process_noise = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(validate(cfg), DimensionMismatch);
}

}  // namespace
}  // namespace kappaphi
