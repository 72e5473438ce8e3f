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

#include <algorithm>
#include <vector>

#include "impulsekit/model.hpp"
#include "impulsekit/rotation.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

template <typename S>
struct LinkPose {
  Mat3<S> rotation = Mat3<S>::Identity();
  Vec3<S> position = Vec3<S>::Zero();
};

/// World transform of every link for the given generalized position.
template <typename S>
std::vector<LinkPose<S>> forward_kinematics(const CharacterModel<S>& model,
                                            const GeneralizedState<S>& q) {
  if (q.n_joints() != model.n_joints()) {
    throw_validation("forward_kinematics: joint dimension mismatch");
  }
  std::vector<LinkPose<S>> poses(model.n_links());
  for (int link : model.traversal_order()) {
    const int j = model.incoming_joint(link);
    if (j < 0) {
      poses[link].rotation = q.base_quat.toRotationMatrix();
      poses[link].position = q.base_pos;
      continue;
    }
    const auto& jp = model.joints[j];
    const LinkPose<S>& parent = poses[jp.parent_link];
    const Mat3<S> r_origin = jp.origin_quat.toRotationMatrix();
    const Mat3<S> r_joint =
        Eigen::AngleAxis<S>(q.joint_pos(j), jp.axis_local).toRotationMatrix();
    poses[link].rotation = parent.rotation * r_origin * r_joint;
    poses[link].position = parent.position + parent.rotation * jp.origin_pos;
  }
  return poses;
}

/// Indices of joints on the path base -> link, ordered base-first.
template <typename S>
std::vector<int> joint_path(const CharacterModel<S>& model, int link) {
  std::vector<int> path;
  int l = link;
  while (true) {
    const int j = model.incoming_joint(l);
    if (j < 0) break;
    path.push_back(j);
    l = model.joints[j].parent_link;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

/// World axis direction of joint j under the given link poses.
template <typename S>
Vec3<S> joint_world_axis(const CharacterModel<S>& model,
                         const std::vector<LinkPose<S>>& poses, int j) {
  return poses[model.joints[j].parent_link].rotation * model.joints[j].axis;
}

/// World position of the rotation center of joint j.
template <typename S>
Vec3<S> joint_world_origin(const CharacterModel<S>& model,
                           const std::vector<LinkPose<S>>& poses, int j) {
  const auto& jp = model.joints[j];
  return poses[jp.parent_link].position + poses[jp.parent_link].rotation * jp.origin_pos;
}

/// 3x(6+n) Jacobian mapping stacked generalized velocity to the world
/// linear velocity of a point attached to `link` at `local_point`.
/// Overload taking precomputed link poses and the base position.
template <typename S>
Mat3X<S> point_jacobian(const CharacterModel<S>& model,
                        const std::vector<LinkPose<S>>& poses, int link,
                        const Vec3<S>& local_point) {
  if (link < 0 || link >= model.n_links()) {
    throw_validation("point_jacobian: invalid link index");
  }
  const Vec3<S> p_world = poses[link].position + poses[link].rotation * local_point;
  const Vec3<S>& p_base = poses[model.base_link].position;

  Mat3X<S> jac = Mat3X<S>::Zero(3, model.n_vel());
  jac.template block<3, 3>(0, 0) = Mat3<S>::Identity();
  jac.template block<3, 3>(0, 3) = -skew<S>(p_world - p_base);
  for (int j : joint_path(model, link)) {
    const Vec3<S> axis_w = joint_world_axis(model, poses, j);
    const Vec3<S> arm = p_world - joint_world_origin(model, poses, j);
    jac.col(6 + j) = axis_w.cross(arm);
  }
  return jac;
}

template <typename S>
Mat3X<S> point_jacobian(const CharacterModel<S>& model, const GeneralizedState<S>& q,
                        int link, const Vec3<S>& local_point) {
  return point_jacobian(model, forward_kinematics(model, q), link, local_point);
}

/// 3x(6+n) Jacobian mapping generalized velocity to the world angular
/// velocity of `link`.
template <typename S>
Mat3X<S> orientation_jacobian(const CharacterModel<S>& model,
                              const std::vector<LinkPose<S>>& poses, int link) {
  Mat3X<S> jac = Mat3X<S>::Zero(3, model.n_vel());
  jac.template block<3, 3>(0, 3) = Mat3<S>::Identity();
  for (int j : joint_path(model, link)) {
    jac.col(6 + j) = joint_world_axis(model, poses, j);
  }
  return jac;
}

template <typename S>
Mat3X<S> orientation_jacobian(const CharacterModel<S>& model, const GeneralizedState<S>& q,
                              int link) {
  return orientation_jacobian(model, forward_kinematics(model, q), link);
}

/// Generalized force produced by a pure wrench (force + torque) acting on
/// `link` at `local_point`, reduced in the stacked velocity coordinates.
template <typename S>
VecX<S> wrench_to_generalized(const CharacterModel<S>& model,
                              const std::vector<LinkPose<S>>& poses, int link,
                              const Vec3<S>& local_point, const Vec3<S>& force,
                              const Vec3<S>& torque) {
  VecX<S> gf = point_jacobian(model, poses, link, local_point).transpose() * force;
  gf += orientation_jacobian(model, poses, link).transpose() * torque;
  return gf;
}

/// Fills derived_vel / derived_acc by finite differencing the poses.
/// Interior frames use central differences; endpoints one-sided. Base
/// angular rates come from the quaternion log map (world frame).
/// Accelerations are differences of the half-step velocities, so they are
/// exact at interior frames for polynomial motions of degree <= 2.
template <typename S>
ReferenceTrajectory<S> finite_difference_derivatives(const ReferenceTrajectory<S>& traj) {
  const int nf = traj.n_frames();
  if (nf < 3) throw_validation("finite_difference_derivatives: need at least 3 frames");
  if (!(traj.dt > S(0))) throw_validation("finite_difference_derivatives: dt must be > 0");

  ReferenceTrajectory<S> out = traj;
  const S dt = traj.dt;
  const int nv = 6 + traj.frames[0].n_joints();
  out.derived_vel.assign(nf, VecX<S>::Zero(nv));
  out.derived_acc.assign(nf, VecX<S>::Zero(nv));

  // Half-step velocities between consecutive frames: h[t] carries frame t
  // to frame t+1.
  std::vector<VecX<S>> half(nf - 1, VecX<S>::Zero(nv));
  for (int t = 0; t + 1 < nf; ++t) {
    const auto& a = traj.frames[t];
    const auto& b = traj.frames[t + 1];
    half[t].template head<3>() = (b.base_pos - a.base_pos) / dt;
    half[t].template segment<3>(3) = angular_velocity_between(a.base_quat, b.base_quat, dt);
    half[t].tail(nv - 6) = (b.joint_pos - a.joint_pos) / dt;
  }

  for (int t = 0; t < nf; ++t) {
    VecX<S>& v = out.derived_vel[t];
    if (t == 0) {
      v = half[0];
    } else if (t == nf - 1) {
      v = half[nf - 2];
    } else {
      const auto& a = traj.frames[t - 1];
      const auto& b = traj.frames[t + 1];
      v.template head<3>() = (b.base_pos - a.base_pos) / (S(2) * dt);
      v.template segment<3>(3) =
          angular_velocity_between(a.base_quat, b.base_quat, S(2) * dt);
      v.tail(nv - 6) = (b.joint_pos - a.joint_pos) / (S(2) * dt);
    }
  }

  for (int t = 0; t < nf; ++t) {
    if (t == 0) {
      out.derived_acc[t] = (out.derived_vel[1] - out.derived_vel[0]) / dt;
    } else if (t == nf - 1) {
      out.derived_acc[t] = (out.derived_vel[nf - 1] - out.derived_vel[nf - 2]) / dt;
    } else {
      out.derived_acc[t] = (half[t] - half[t - 1]) / dt;
    }
  }
  return out;
}

using LinkPosed = LinkPose<double>;

}  // namespace impulsekit
