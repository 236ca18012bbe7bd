#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kappaphi/frames.hpp"

namespace kappaphi {

/// Stacked error parameters of all active components.
using ErrorState = Eigen::VectorXd;
using ParamSlice = Eigen::Ref<const Eigen::VectorXd>;

/// Fields of the kinematic input an error component may read.
enum class KinematicField { kHeading, kHeadingRate, kPAlpha };

const char* to_string(KinematicField field);

/// Measured agent state for one time step.
struct KinematicInput {
  double t = 0.0;
  Heading heading;
  Vec2 p_alpha = Vec2::Zero();  // reference localizer, navigation frame
};

/// A parameterized contribution (params, u) -> difference-vector space.
///
/// A component with an empty `depends_on` set is a kappa-type component.
/// During evaluation the component only sees the input fields it declared;
/// the others are replaced by NaN so an undeclared read surfaces as a
/// non-finite result.
class ErrorComponent {
 public:
  using EvalFn = std::function<Vec2(const ParamSlice&, const KinematicInput&)>;

  ErrorComponent(std::string name, Eigen::VectorXd neutral,
                 std::set<KinematicField> depends_on, EvalFn eval);

  const std::string& name() const noexcept { return name_; }
  Eigen::Index param_dim() const noexcept { return neutral_.size(); }
  /// Parameter value at which the component contributes nothing.
  const Eigen::VectorXd& neutral() const noexcept { return neutral_; }
  const std::set<KinematicField>& depends_on() const noexcept { return depends_on_; }

  Vec2 eval(const ParamSlice& params, const KinematicInput& u) const;

 private:
  std::string name_;
  Eigen::VectorXd neutral_;
  std::set<KinematicField> depends_on_;
  EvalFn eval_;
};

// ---------------------------------------------------------------------------
// Closed-form component maps
// ---------------------------------------------------------------------------

/// Uniform map translation; identity on its parameters.
Vec2 kappa_translation(const Vec2& params);

/// Body-fixed offset between the localizers rotated into the navigation frame.
Vec2 phi_agent(const Vec2& params, const KinematicInput& u);

// ---------------------------------------------------------------------------
// Position-dependent environment errors
// ---------------------------------------------------------------------------

/// Invertible parametric planar map e(p; params).
class PlanarTransform {
 public:
  virtual ~PlanarTransform() = default;

  virtual Eigen::Index param_dim() const = 0;
  virtual Eigen::VectorXd neutral() const = 0;
  virtual Vec2 apply(const Vec2& p, const ParamSlice& params) const = 0;
  /// Throws SingularTransform when e is not invertible for `params`.
  virtual Vec2 invert(const Vec2& p, const ParamSlice& params) const = 0;
};

/// Rotation by theta (radians) about a pivot.
class MapRotation final : public PlanarTransform {
 public:
  explicit MapRotation(Vec2 pivot = Vec2::Zero()) : pivot_(std::move(pivot)) {}

  Eigen::Index param_dim() const override { return 1; }
  Eigen::VectorXd neutral() const override { return Eigen::VectorXd::Zero(1); }
  Vec2 apply(const Vec2& p, const ParamSlice& params) const override;
  Vec2 invert(const Vec2& p, const ParamSlice& params) const override;

 private:
  Vec2 pivot_;
};

/// Uniform scale s = 1 + sigma about a pivot; the filtered parameter is sigma.
class MapScale final : public PlanarTransform {
 public:
  static constexpr double kMinScale = 1e-9;

  explicit MapScale(Vec2 pivot = Vec2::Zero()) : pivot_(std::move(pivot)) {}

  Eigen::Index param_dim() const override { return 1; }
  Eigen::VectorXd neutral() const override { return Eigen::VectorXd::Zero(1); }
  Vec2 apply(const Vec2& p, const ParamSlice& params) const override;
  Vec2 invert(const Vec2& p, const ParamSlice& params) const override;

 private:
  Vec2 pivot_;
};

enum class ShearAxis { kEast, kNorth };

/// Axis-aligned shear about a pivot. kEast shifts east proportionally to the
/// northing offset; kNorth the reverse.
class MapShear final : public PlanarTransform {
 public:
  explicit MapShear(Vec2 pivot = Vec2::Zero(), ShearAxis axis = ShearAxis::kEast)
      : pivot_(std::move(pivot)), axis_(axis) {}

  Eigen::Index param_dim() const override { return 1; }
  Eigen::VectorXd neutral() const override { return Eigen::VectorXd::Zero(1); }
  Vec2 apply(const Vec2& p, const ParamSlice& params) const override;
  Vec2 invert(const Vec2& p, const ParamSlice& params) const override;

 private:
  Vec2 pivot_;
  ShearAxis axis_;
};

/// Which localizer hosts the deformation.
///  kAlphaReference: p_alpha = e(p_beta), phi = p_alpha - e^-1(p_alpha).
///  kBetaReference:  p_beta = e(p_alpha), phi = p_alpha - e(p_alpha).
enum class TransformDirection { kAlphaReference, kBetaReference };

Vec2 phi_from_transform(const PlanarTransform& transform, const ParamSlice& params,
                        const KinematicInput& u,
                        TransformDirection direction = TransformDirection::kAlphaReference);

// ---------------------------------------------------------------------------
// Component catalog
// ---------------------------------------------------------------------------

ErrorComponent make_kappa_translation();
ErrorComponent make_phi_agent();
ErrorComponent make_transform_component(std::string name,
                                        std::shared_ptr<const PlanarTransform> transform,
                                        TransformDirection direction);
ErrorComponent make_map_rotation(const Vec2& pivot,
                                 TransformDirection direction = TransformDirection::kAlphaReference);
ErrorComponent make_map_scale(const Vec2& pivot,
                              TransformDirection direction = TransformDirection::kAlphaReference);
ErrorComponent make_map_shear(const Vec2& pivot, ShearAxis axis = ShearAxis::kEast,
                              TransformDirection direction = TransformDirection::kAlphaReference);

// ---------------------------------------------------------------------------
// Composite difference model D(x, u) = kappa(x) + sum_i phi_i(x, u)
// ---------------------------------------------------------------------------

class CompositeModel {
 public:
  /// Throws InvalidModel when empty or when two components read the same
  /// kinematic field.
  explicit CompositeModel(std::vector<ErrorComponent> components);

  std::span<const ErrorComponent> components() const noexcept { return components_; }
  Eigen::Index offset(std::size_t component) const { return offsets_.at(component); }
  Eigen::Index state_dim() const noexcept { return state_dim_; }

  /// Stacked neutral parameters of all components.
  ErrorState neutral_state() const;
  /// Union of every component's depends_on set.
  std::set<KinematicField> fields_read() const;
  bool input_dependent() const { return !fields_read().empty(); }

  /// Model holding only the listed components, in the given order.
  CompositeModel sub_model(std::span<const std::size_t> component_indices) const;
  /// Extracts the state slice matching sub_model(component_indices).
  ErrorState sub_state(const ErrorState& x, std::span<const std::size_t> component_indices) const;

 private:
  std::vector<ErrorComponent> components_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index state_dim_ = 0;
};

/// Throws DimensionMismatch on a wrong state length; propagates
/// SingularTransform.
Vec2 evaluate_difference_model(const CompositeModel& model, const ErrorState& x,
                               const KinematicInput& u);

/// d = p_alpha - p_beta, both in the aligned navigation frame.
Vec2 measured_difference(const Vec2& p_alpha, const Vec2& p_beta);

}  // namespace kappaphi
