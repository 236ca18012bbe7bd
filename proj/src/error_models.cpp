#include "kappaphi/error_models.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "kappaphi/errors.hpp"

namespace kappaphi {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

KinematicInput masked_input(const KinematicInput& u, const std::set<KinematicField>& fields) {
  const bool heading = fields.contains(KinematicField::kHeading);
  const bool rate = fields.contains(KinematicField::kHeadingRate);
  KinematicInput masked;
  masked.t = kNaN;
  masked.heading = Heading(heading ? u.heading.gamma() : kNaN,
                           rate ? u.heading.gamma_rate() : kNaN);
  masked.p_alpha = fields.contains(KinematicField::kPAlpha) ? u.p_alpha : Vec2(kNaN, kNaN);
  return masked;
}

Vec2 as_vec2(const ParamSlice& params) { return Vec2(params(0), params(1)); }

}  // namespace

const char* to_string(KinematicField field) {
  switch (field) {
    case KinematicField::kHeading: return "heading";
    case KinematicField::kHeadingRate: return "heading_rate";
    case KinematicField::kPAlpha: return "p_alpha";
  }
  return "unknown";
}

ErrorComponent::ErrorComponent(std::string name, Eigen::VectorXd neutral,
                               std::set<KinematicField> depends_on, EvalFn eval)
    : name_(std::move(name)),
      neutral_(std::move(neutral)),
      depends_on_(std::move(depends_on)),
      eval_(std::move(eval)) {
  if (neutral_.size() < 1) {
    throw InvalidModel("component '" + name_ + "' must have at least one parameter");
  }
  if (!eval_) throw InvalidModel("component '" + name_ + "' has no evaluation function");
}

Vec2 ErrorComponent::eval(const ParamSlice& params, const KinematicInput& u) const {
  if (params.size() != param_dim()) {
    throw DimensionMismatch("component '" + name_ + "' expects " +
                            std::to_string(param_dim()) + " parameters, got " +
                            std::to_string(params.size()));
  }
  const Vec2 out = eval_(params, masked_input(u, depends_on_));
  if (!out.allFinite() && params.allFinite()) {
    throw InvalidModel("component '" + name_ +
                       "' produced a non-finite value (undeclared input field read?)");
  }
  return out;
}

Vec2 kappa_translation(const Vec2& params) { return params; }

Vec2 phi_agent(const Vec2& params, const KinematicInput& u) {
  return body_to_nav(params, u.heading.gamma());
}

Vec2 MapRotation::apply(const Vec2& p, const ParamSlice& params) const {
  return pivot_ + rotation_matrix(params(0)) * (p - pivot_);
}

Vec2 MapRotation::invert(const Vec2& p, const ParamSlice& params) const {
  return pivot_ + rotation_matrix(-params(0)) * (p - pivot_);
}

Vec2 MapScale::apply(const Vec2& p, const ParamSlice& params) const {
  return pivot_ + (1.0 + params(0)) * (p - pivot_);
}

Vec2 MapScale::invert(const Vec2& p, const ParamSlice& params) const {
  const double scale = 1.0 + params(0);
  if (!(std::abs(scale) > kMinScale)) {
    throw SingularTransform("map scale factor " + std::to_string(scale) + " is not invertible");
  }
  return pivot_ + (p - pivot_) / scale;
}

Vec2 MapShear::apply(const Vec2& p, const ParamSlice& params) const {
  Vec2 rel = p - pivot_;
  if (axis_ == ShearAxis::kEast) {
    rel.x() += params(0) * rel.y();
  } else {
    rel.y() += params(0) * rel.x();
  }
  return pivot_ + rel;
}

Vec2 MapShear::invert(const Vec2& p, const ParamSlice& params) const {
  Vec2 rel = p - pivot_;
  if (axis_ == ShearAxis::kEast) {
    rel.x() -= params(0) * rel.y();
  } else {
    rel.y() -= params(0) * rel.x();
  }
  return pivot_ + rel;
}

Vec2 phi_from_transform(const PlanarTransform& transform, const ParamSlice& params,
                        const KinematicInput& u, TransformDirection direction) {
  if (params.size() != transform.param_dim()) {
    throw DimensionMismatch("transform expects " + std::to_string(transform.param_dim()) +
                            " parameters, got " + std::to_string(params.size()));
  }
  if (direction == TransformDirection::kAlphaReference) {
    return u.p_alpha - transform.invert(u.p_alpha, params);
  }
  return u.p_alpha - transform.apply(u.p_alpha, params);
}

ErrorComponent make_kappa_translation() {
  return ErrorComponent("kappa_translation", Eigen::VectorXd::Zero(2), {},
                        [](const ParamSlice& params, const KinematicInput&) {
                          return kappa_translation(as_vec2(params));
                        });
}

ErrorComponent make_phi_agent() {
  return ErrorComponent("phi_agent", Eigen::VectorXd::Zero(2), {KinematicField::kHeading},
                        [](const ParamSlice& params, const KinematicInput& u) {
                          return phi_agent(as_vec2(params), u);
                        });
}

ErrorComponent make_transform_component(std::string name,
                                        std::shared_ptr<const PlanarTransform> transform,
                                        TransformDirection direction) {
  if (!transform) throw InvalidModel("component '" + name + "' has no transform");
  Eigen::VectorXd neutral = transform->neutral();
  return ErrorComponent(std::move(name), std::move(neutral), {KinematicField::kPAlpha},
                        [transform = std::move(transform), direction](
                            const ParamSlice& params, const KinematicInput& u) {
                          return phi_from_transform(*transform, params, u, direction);
                        });
}

ErrorComponent make_map_rotation(const Vec2& pivot, TransformDirection direction) {
  return make_transform_component("map_rotation", std::make_shared<MapRotation>(pivot),
                                  direction);
}

ErrorComponent make_map_scale(const Vec2& pivot, TransformDirection direction) {
  return make_transform_component("map_scale", std::make_shared<MapScale>(pivot), direction);
}

ErrorComponent make_map_shear(const Vec2& pivot, ShearAxis axis, TransformDirection direction) {
  return make_transform_component("map_shear", std::make_shared<MapShear>(pivot, axis),
                                  direction);
}

CompositeModel::CompositeModel(std::vector<ErrorComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidModel("a difference model needs at least one component");
  std::set<KinematicField> claimed;
  for (const auto& component : components_) {
    for (KinematicField field : component.depends_on()) {
      if (!claimed.insert(field).second) {
        throw InvalidModel(std::string("kinematic field '") + to_string(field) +
                           "' contributes to more than one component (at '" +
                           component.name() + "')");
      }
    }
    offsets_.push_back(state_dim_);
    state_dim_ += component.param_dim();
  }
}

ErrorState CompositeModel::neutral_state() const {
  ErrorState x(state_dim_);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    x.segment(offsets_[i], components_[i].param_dim()) = components_[i].neutral();
  }
  return x;
}

std::set<KinematicField> CompositeModel::fields_read() const {
  std::set<KinematicField> fields;
  for (const auto& component : components_) {
    fields.insert(component.depends_on().begin(), component.depends_on().end());
  }
  return fields;
}

CompositeModel CompositeModel::sub_model(std::span<const std::size_t> component_indices) const {
  std::vector<ErrorComponent> picked;
  picked.reserve(component_indices.size());
  for (std::size_t i : component_indices) picked.push_back(components_.at(i));
  return CompositeModel(std::move(picked));
}

ErrorState CompositeModel::sub_state(const ErrorState& x,
                                     std::span<const std::size_t> component_indices) const {
  if (x.size() != state_dim_) {
    throw DimensionMismatch("state has length " + std::to_string(x.size()) + ", model expects " +
                            std::to_string(state_dim_));
  }
  Eigen::Index dim = 0;
  for (std::size_t i : component_indices) dim += components_.at(i).param_dim();
  ErrorState slice(dim);
  Eigen::Index at = 0;
  for (std::size_t i : component_indices) {
    const Eigen::Index n = components_[i].param_dim();
    slice.segment(at, n) = x.segment(offsets_[i], n);
    at += n;
  }
  return slice;
}

Vec2 evaluate_difference_model(const CompositeModel& model, const ErrorState& x,
                               const KinematicInput& u) {
  if (x.size() != model.state_dim()) {
    throw DimensionMismatch("state has length " + std::to_string(x.size()) + ", model expects " +
                            std::to_string(model.state_dim()));
  }
  Vec2 d = Vec2::Zero();
  const auto components = model.components();
  for (std::size_t i = 0; i < components.size(); ++i) {
    d += components[i].eval(x.segment(model.offset(i), components[i].param_dim()), u);
  }
  return d;
}

Vec2 measured_difference(const Vec2& p_alpha, const Vec2& p_beta) { return p_alpha - p_beta; }

}  // namespace kappaphi
