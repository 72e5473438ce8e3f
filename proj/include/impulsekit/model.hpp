// Copyright 2026 The impulsekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "impulsekit/rotation.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

template <typename S>
struct LinkParams {
  std::string name;
  S mass = S(1);
  Mat3<S> inertia = Mat3<S>::Identity();  // about COM, body frame
  Vec3<S> com_offset = Vec3<S>::Zero();   // body frame
};

/// Revolute joint attaching child_link under parent_link. The axis is
/// authored in the parent frame; axis_local is the same axis expressed in
/// the joint frame (after the origin transform), which is what the
/// kinematics recursions consume.
template <typename S>
struct JointParams {
  std::string name;
  int parent_link = -1;
  int child_link = -1;
  Vec3<S> axis = Vec3<S>::UnitZ();
  Vec3<S> axis_local = Vec3<S>::UnitZ();
  Vec3<S> origin_pos = Vec3<S>::Zero();
  Quat<S> origin_quat = Quat<S>::Identity();
};

/// Kinematic tree of rigid links with a 6-DoF floating base. Immutable
/// after finalize(); safe to share across threads.
template <typename S>
class CharacterModel {
 public:
  std::vector<LinkParams<S>> links;
  std::vector<JointParams<S>> joints;
  int base_link = 0;
  Vec3<S> gravity = Vec3<S>(S(0), S(0), S(kGravityZ));

  int n_joints() const { return static_cast<int>(joints.size()); }
  int n_links() const { return static_cast<int>(links.size()); }
  int n_vel() const { return 6 + n_joints(); }

  S total_mass() const {
    S m = S(0);
    for (const auto& l : links) m += l.mass;
    return m;
  }

  /// Joint whose child is `link`, or -1 for the base.
  int incoming_joint(int link) const { return incoming_joint_[link]; }

  /// Links ordered parents-before-children, starting at the base.
  const std::vector<int>& traversal_order() const { return order_; }

  /// Validates all invariants and builds the traversal tables. Throws
  /// Error naming the offending link/joint.
  void finalize() {
    const int nl = n_links();
    if (nl == 0) throw_validation("model has no links");
    if (base_link < 0 || base_link >= nl) throw_validation("base link index out of range");
    if (static_cast<int>(joints.size()) != nl - 1) {
      throw_validation("link/joint count mismatch: expected " +
                       std::to_string(nl - 1) + " joints for " +
                       std::to_string(nl) + " links");
    }
    for (const auto& l : links) {
      if (!(l.mass > S(0))) throw_validation("link '" + l.name + "': mass must be > 0");
      check_inertia(l);
    }
    incoming_joint_.assign(nl, -1);
    for (int j = 0; j < n_joints(); ++j) {
      auto& jp = joints[j];
      if (jp.parent_link < 0 || jp.parent_link >= nl || jp.child_link < 0 ||
          jp.child_link >= nl) {
        throw_validation("joint '" + jp.name + "': link index out of range");
      }
      if (jp.child_link == base_link) {
        throw_validation("joint '" + jp.name + "': base link cannot be a child");
      }
      if (incoming_joint_[jp.child_link] != -1) {
        throw_validation("joint '" + jp.name + "': link '" +
                         links[jp.child_link].name + "' has two parents");
      }
      incoming_joint_[jp.child_link] = j;
      if (std::abs(jp.axis.norm() - S(1)) > S(1e-9)) {
        throw_validation("joint '" + jp.name + "': axis must be unit length");
      }
      if (std::abs(jp.origin_quat.norm() - S(1)) > S(1e-9)) {
        throw_validation("joint '" + jp.name + "': origin quaternion must be unit length");
      }
      jp.axis_local = jp.origin_quat.conjugate() * jp.axis;
    }
    build_order();
  }

 private:
  void check_inertia(const LinkParams<S>& l) const {
    const Mat3<S>& I = l.inertia;
    if ((I - I.transpose()).template lpNorm<Eigen::Infinity>() > S(1e-9)) {
      throw_validation("link '" + l.name + "': inertia not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3<S>> es(I);
    const Vec3<S> ev = es.eigenvalues();
    if (ev.minCoeff() <= S(0)) {
      throw_validation("link '" + l.name + "': inertia not positive definite");
    }
    // Triangle inequality on principal moments.
    if (ev(0) + ev(1) < ev(2) * (S(1) - S(1e-9))) {
      throw_validation("link '" + l.name + "': inertia violates the triangle inequality");
    }
  }

  void build_order() {
    const int nl = n_links();
    order_.clear();
    order_.reserve(nl);
    std::vector<std::vector<int>> children(nl);
    for (int j = 0; j < n_joints(); ++j) {
      children[joints[j].parent_link].push_back(joints[j].child_link);
    }
    std::vector<int> stack = {base_link};
    std::vector<char> seen(nl, 0);
    while (!stack.empty()) {
      const int l = stack.back();
      stack.pop_back();
      if (seen[l]) {
        throw_validation("cycle detected at link '" + links[l].name + "'");
      }
      seen[l] = 1;
      order_.push_back(l);
      for (auto it = children[l].rbegin(); it != children[l].rend(); ++it) stack.push_back(*it);
    }
    if (static_cast<int>(order_.size()) != nl) {
      for (int l = 0; l < nl; ++l) {
        if (!seen[l]) {
          if (incoming_joint_[l] == -1) {
            throw_validation("link '" + links[l].name + "' is not connected to the base");
          }
          throw_validation("cycle detected at link '" + links[l].name + "'");
        }
      }
    }
  }

  std::vector<int> incoming_joint_;
  std::vector<int> order_;
};

/// Full generalized state. Velocity stacks to R^(6+n) in the fixed order
/// [base linear (world), base angular (world), joints].
template <typename S>
struct GeneralizedState {
  Vec3<S> base_pos = Vec3<S>::Zero();
  Quat<S> base_quat = Quat<S>::Identity();
  VecX<S> joint_pos;
  Vec3<S> base_lin_vel = Vec3<S>::Zero();
  Vec3<S> base_ang_vel = Vec3<S>::Zero();
  VecX<S> joint_vel;

  static GeneralizedState zero(int n_joints) {
    GeneralizedState s;
    s.joint_pos = VecX<S>::Zero(n_joints);
    s.joint_vel = VecX<S>::Zero(n_joints);
    return s;
  }

  int n_joints() const { return static_cast<int>(joint_pos.size()); }

  VecX<S> stacked_velocity() const {
    VecX<S> v(6 + joint_vel.size());
    v.template head<3>() = base_lin_vel;
    v.template segment<3>(3) = base_ang_vel;
    v.tail(joint_vel.size()) = joint_vel;
    return v;
  }

  void set_velocity(const VecX<S>& v) {
    base_lin_vel = v.template head<3>();
    base_ang_vel = v.template segment<3>(3);
    joint_vel = v.tail(v.size() - 6);
  }
};

/// Time-sampled reference poses with derivatives filled in by
/// finite_difference_derivatives().
template <typename S>
struct ReferenceTrajectory {
  std::vector<GeneralizedState<S>> frames;  // positions only
  S dt = S(1.0 / 30.0);
  std::vector<VecX<S>> derived_vel;  // R^(6+n) per frame
  std::vector<VecX<S>> derived_acc;  // R^(6+n) per frame
  std::vector<std::string> labels;   // optional per-frame tags

  int n_frames() const { return static_cast<int>(frames.size()); }
  bool has_derivatives() const {
    return derived_vel.size() == frames.size() && derived_acc.size() == frames.size() &&
           !frames.empty();
  }
  S duration() const { return dt * S(n_frames() > 0 ? n_frames() - 1 : 0); }
};

using CharacterModeld = CharacterModel<double>;
using GeneralizedStated = GeneralizedState<double>;
using ReferenceTrajectoryd = ReferenceTrajectory<double>;

}  // namespace impulsekit
