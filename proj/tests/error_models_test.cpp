#include "kappaphi/error_models.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "kappaphi/errors.hpp"

namespace kappaphi {
namespace {

constexpr double kPi = std::numbers::pi;

KinematicInput at_heading(double gamma, Vec2 p_alpha = Vec2::Zero()) {
  return {0.0, Heading(gamma), p_alpha};
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

TEST(KappaTranslation, IsIdentity) {
  EXPECT_EQ(kappa_translation(Vec2(3, 2)), Vec2(3, 2));
  EXPECT_EQ(kappa_translation(Vec2(0, 0)), Vec2(0, 0));
  EXPECT_EQ(kappa_translation(Vec2(-1.5, 4)), Vec2(-1.5, 4));
  EXPECT_TRUE(make_kappa_translation().depends_on().empty());
}

TEST(PhiAgent, Examples) {
  EXPECT_EQ(phi_agent(Vec2(2, 1), at_heading(0.0)), Vec2(2, 1));
  const Vec2 quarter = phi_agent(Vec2(2, 1), at_heading(kPi / 2));
  EXPECT_NEAR(quarter.x(), -1.0, 1e-15);
  EXPECT_NEAR(quarter.y(), 2.0, 1e-15);
  const Vec2 v = phi_agent(Vec2(2, 1), at_heading(2.0));
  EXPECT_NEAR(v.x(), -1.7415910999199666, 1e-15);
  EXPECT_NEAR(v.y(), 1.4024480171042211, 1e-15);
  EXPECT_EQ(make_phi_agent().depends_on(), std::set<KinematicField>{KinematicField::kHeading});
}

TEST(PhiAgent, PreservesNorm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p(u(rng), u(rng));
    EXPECT_NEAR(phi_agent(p, at_heading(u(rng))).norm(), p.norm(), 1e-12);
  }
}

TEST(PhiFromTransform, NeutralParametersGiveZero) {
  const MapRotation rotation(Vec2(5, -3));
  const MapScale scale(Vec2(1, 2));
  const MapShear shear(Vec2(-4, 0), ShearAxis::kNorth);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> coord(0.0, 500.0);
  for (int i = 0; i < 100; ++i) {
    const auto u = at_heading(0.0, Vec2(coord(rng), coord(rng)));
    for (const PlanarTransform* t :
         std::array<const PlanarTransform*, 3>{&rotation, &scale, &shear}) {
      for (auto dir : {TransformDirection::kAlphaReference, TransformDirection::kBetaReference}) {
        EXPECT_TRUE(phi_from_transform(*t, t->neutral(), u, dir).isZero(1e-12));
      }
    }
  }
}

TEST(PhiFromTransform, UniformScaleAboutOrigin) {
  // s = 2 means sigma = 1; e^-1(10, 4) = (5, 2).
  const MapScale scale;
  const Vec2 phi = phi_from_transform(scale, vec({1.0}), at_heading(0.0, Vec2(10, 4)));
  EXPECT_NEAR(phi.x(), 5.0, 1e-15);
  EXPECT_NEAR(phi.y(), 2.0, 1e-15);
}

TEST(PhiFromTransform, RotationAboutOrigin) {
  // (r, 0) - R(-theta) (r, 0) for r = 10, theta = 0.1.
  const MapRotation rotation;
  const Vec2 phi = phi_from_transform(rotation, vec({0.1}), at_heading(0.0, Vec2(10, 0)));
  EXPECT_NEAR(phi.x(), 0.049958347219741128, 1e-14);
  EXPECT_NEAR(phi.y(), 0.99833416646828155, 1e-14);
}

TEST(PhiFromTransform, BetaReferenceUsesForwardMap) {
  const MapScale scale;
  const Vec2 phi = phi_from_transform(scale, vec({1.0}), at_heading(0.0, Vec2(10, 4)),
                                      TransformDirection::kBetaReference);
  EXPECT_NEAR(phi.x(), -10.0, 1e-15);
  EXPECT_NEAR(phi.y(), -4.0, 1e-15);
}

TEST(PhiFromTransform, ShearAxes) {
  const MapShear east(Vec2::Zero(), ShearAxis::kEast);
  const MapShear north(Vec2::Zero(), ShearAxis::kNorth);
  const auto u = at_heading(0.0, Vec2(3, 4));
  // e^-1 removes h * north from east, so phi = (h * north, 0).
  EXPECT_TRUE(phi_from_transform(east, vec({0.5}), u).isApprox(Vec2(2, 0)));
  EXPECT_TRUE(phi_from_transform(north, vec({0.5}), u).isApprox(Vec2(0, 1.5)));
}

TEST(PhiFromTransform, InverseUndoesApply) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> coord(0.0, 50.0);
  std::uniform_real_distribution<double> param(-0.5, 0.5);
  const MapRotation rotation(Vec2(3, 1));
  const MapScale scale(Vec2(-2, 7));
  const MapShear shear(Vec2(1, 1));
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(coord(rng), coord(rng));
    const auto x = vec({param(rng)});
    for (const PlanarTransform* t :
         std::array<const PlanarTransform*, 3>{&rotation, &scale, &shear}) {
      EXPECT_TRUE(t->invert(t->apply(p, x), x).isApprox(p, 1e-12));
    }
  }
}

TEST(PhiFromTransform, ZeroScaleIsSingular) {
  const MapScale scale;
  EXPECT_THROW(phi_from_transform(scale, vec({-1.0}), at_heading(0.0, Vec2(1, 1))),
               SingularTransform);
}

TEST(CompositeModel, LayoutAndNeutralState) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation(),
                              make_map_scale(Vec2(0, 0))});
  EXPECT_EQ(model.state_dim(), 5);
  EXPECT_EQ(model.offset(0), 0);
  EXPECT_EQ(model.offset(1), 2);
  EXPECT_EQ(model.offset(2), 4);
  EXPECT_TRUE(model.neutral_state().isZero());
  EXPECT_TRUE(model.input_dependent());
}

TEST(CompositeModel, RejectsSharedKinematicField) {
  EXPECT_THROW(CompositeModel({make_phi_agent(), make_phi_agent()}), InvalidModel);
  EXPECT_THROW(CompositeModel({make_map_rotation(Vec2::Zero()), make_map_scale(Vec2::Zero())}),
               InvalidModel);
  EXPECT_THROW(CompositeModel(std::vector<ErrorComponent>{}), InvalidModel);
  // Two kappa-type components share no kinematic field.
  EXPECT_NO_THROW(CompositeModel({make_kappa_translation(), make_kappa_translation()}));
}

TEST(EvaluateDifferenceModel, Examples) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  const Eigen::Vector4d x(2, 1, 3, 2);
  EXPECT_TRUE(evaluate_difference_model(model, x, at_heading(0.0)).isApprox(Vec2(5, 3)));
  const Vec2 flipped = evaluate_difference_model(model, x, at_heading(kPi));
  EXPECT_NEAR(flipped.x(), 1.0, 1e-14);
  EXPECT_NEAR(flipped.y(), 1.0, 1e-14);

  const CompositeModel kappa_only({make_kappa_translation()});
  EXPECT_EQ(evaluate_difference_model(kappa_only, Eigen::Vector2d(3, 2), at_heading(1.3)),
            Vec2(3, 2));
}

TEST(EvaluateDifferenceModel, DimensionMismatch) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation()});
  EXPECT_THROW(evaluate_difference_model(model, Eigen::Vector3d(1, 2, 3), at_heading(0)),
               DimensionMismatch);
}

TEST(EvaluateDifferenceModel, PropagatesSingularTransform) {
  const CompositeModel model({make_kappa_translation(), make_map_scale(Vec2::Zero())});
  EXPECT_THROW(evaluate_difference_model(model, Eigen::Vector3d(0, 0, -1), at_heading(0, Vec2(1, 1))),
               SingularTransform);
}

TEST(EvaluateDifferenceModel, LinearInKappa) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation(),
                              make_map_rotation(Vec2(10, 10))});
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = n(rng);
    const auto u = at_heading(n(rng), Vec2(50 * n(rng), 50 * n(rng)));
    const Vec2 shift(n(rng), n(rng));
    Eigen::VectorXd shifted = x;
    shifted.segment<2>(2) += shift;
    EXPECT_TRUE((evaluate_difference_model(model, shifted, u) -
                 evaluate_difference_model(model, x, u) - shift)
                    .isZero(1e-12));
  }
}

TEST(EvaluateDifferenceModel, AdditiveOverComponents) {
  const CompositeModel model({make_phi_agent(), make_kappa_translation(),
                              make_map_shear(Vec2(-5, 5))});
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n;
  const std::array<std::size_t, 2> first = {0, 2};
  const std::array<std::size_t, 1> second = {1};
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = n(rng);
    const auto u = at_heading(n(rng), Vec2(20 * n(rng), 20 * n(rng)));
    const Vec2 sum =
        evaluate_difference_model(model.sub_model(first), model.sub_state(x, first), u) +
        evaluate_difference_model(model.sub_model(second), model.sub_state(x, second), u);
    EXPECT_TRUE((sum - evaluate_difference_model(model, x, u)).isZero(1e-12));
  }
}

TEST(ErrorComponent, UndeclaredFieldReadIsCaught) {
  // Declares nothing but reads the heading.
  const ErrorComponent sneaky("sneaky", Eigen::VectorXd::Zero(2), {},
                              [](const ParamSlice& p, const KinematicInput& u) {
                                return Vec2(p(0) * std::cos(u.heading.gamma()), p(1));
                              });
  EXPECT_THROW(sneaky.eval(Eigen::Vector2d(1, 1), at_heading(0.3)), InvalidModel);
}

TEST(MeasuredDifference, Examples) {
  EXPECT_EQ(measured_difference(Vec2(5, 5), Vec2(5, 5)), Vec2(0, 0));
  EXPECT_EQ(measured_difference(Vec2(10, 4), Vec2(7, 2)), Vec2(3, 2));
  EXPECT_EQ(measured_difference(Vec2(0, 0), Vec2(2, 1)), Vec2(-2, -1));
}

}  // namespace
}  // namespace kappaphi
