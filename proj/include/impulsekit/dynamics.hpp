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

#include <vector>

#include "impulsekit/kinematics.hpp"
#include "impulsekit/model.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// Total generalized force demand for one frame of motion. Rows 0..2 are
/// the base force (N), rows 3..5 the base torque about the base origin
/// (N*m), rows 6.. the joint torques.
template <typename S>
struct WrenchDemand {
  VecX<S> tau_req;
  int frame_index = -1;

  Vec6<S> base_part() const { return tau_req.template head<6>(); }
};

/// 6-D force/torque pair acting about the base origin, world frame.
template <typename S>
struct SpatialWrench {
  Vec3<S> force = Vec3<S>::Zero();
  Vec3<S> torque = Vec3<S>::Zero();

  Vec6<S> stacked() const {
    Vec6<S> w;
    w.template head<3>() = force;
    w.template tail<3>() = torque;
    return w;
  }
  static SpatialWrench from_stacked(const Vec6<S>& w) {
    return SpatialWrench{w.template head<3>(), w.template tail<3>()};
  }
};

namespace detail {

/// Per-link world-frame kinematics produced by the outward RNEA pass.
template <typename S>
struct BodyMotion {
  Vec3<S> omega;     // angular velocity
  Vec3<S> domega;    // angular acceleration
  Vec3<S> a_origin;  // acceleration of the link frame origin (gravity-offset)
};

}  // namespace detail

/// Recursive Newton-Euler inverse dynamics over the floating-base tree:
/// returns tau_req with tau_req = M(q) a + C(q, v). Gravity enters as the
/// usual fictitious base acceleration offset, so C includes gravity,
/// Coriolis and centrifugal terms. All base rows are reduced about the
/// base frame origin in world coordinates.
template <typename S>
WrenchDemand<S> rnea(const CharacterModel<S>& model, const GeneralizedState<S>& q,
                     const VecX<S>& v, const VecX<S>& a) {
  const int nv = model.n_vel();
  if (q.n_joints() != model.n_joints() || v.size() != nv || a.size() != nv) {
    throw_validation("rnea: dimension mismatch");
  }
  if (!v.allFinite() || !a.allFinite()) throw_validation("rnea: non-finite input");

  const auto poses = forward_kinematics(model, q);
  const int nl = model.n_links();
  std::vector<detail::BodyMotion<S>> motion(nl);

  // Outward pass: propagate velocities/accelerations from the base. The
  // gravity offset -(g) on the base linear acceleration folds gravity into
  // every link's inertial force.
  for (int link : model.traversal_order()) {
    const int j = model.incoming_joint(link);
    if (j < 0) {
      motion[link].omega = v.template segment<3>(3);
      motion[link].domega = a.template segment<3>(3);
      motion[link].a_origin = a.template head<3>() - model.gravity;
      continue;
    }
    const auto& jp = model.joints[j];
    const auto& pm = motion[jp.parent_link];
    const Vec3<S> r = poses[link].position - poses[jp.parent_link].position;
    const Vec3<S> axis_w = joint_world_axis(model, poses, j);
    const S qd = v(6 + j);
    const S qdd = a(6 + j);

    motion[link].omega = pm.omega + axis_w * qd;
    motion[link].domega = pm.domega + axis_w * qdd + pm.omega.cross(axis_w) * qd;
    motion[link].a_origin = pm.a_origin + pm.domega.cross(r) + pm.omega.cross(pm.omega.cross(r));
  }

  // Per-link Newton-Euler wrenches, reduced about the world origin.
  std::vector<Vec3<S>> f_link(nl), n_link(nl);
  for (int link = 0; link < nl; ++link) {
    const auto& lp = model.links[link];
    const auto& bm = motion[link];
    const Vec3<S> com_arm = poses[link].rotation * lp.com_offset;
    const Vec3<S> com = poses[link].position + com_arm;
    const Vec3<S> a_com =
        bm.a_origin + bm.domega.cross(com_arm) + bm.omega.cross(bm.omega.cross(com_arm));
    const Mat3<S> inertia_w =
        poses[link].rotation * lp.inertia * poses[link].rotation.transpose();

    const Vec3<S> force = lp.mass * a_com;
    const Vec3<S> torque_com =
        inertia_w * bm.domega + bm.omega.cross(inertia_w * bm.omega);
    f_link[link] = force;
    n_link[link] = com.cross(force) + torque_com;
  }

  // Inward pass: accumulate subtree wrenches, then project onto each
  // joint axis and the six base coordinates.
  std::vector<Vec3<S>> f_sub = f_link, n_sub = n_link;
  const auto& order = model.traversal_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int link = *it;
    const int j = model.incoming_joint(link);
    if (j < 0) continue;
    f_sub[model.joints[j].parent_link] += f_sub[link];
    n_sub[model.joints[j].parent_link] += n_sub[link];
  }

  WrenchDemand<S> demand;
  demand.tau_req = VecX<S>::Zero(nv);
  const Vec3<S>& p_base = poses[model.base_link].position;
  demand.tau_req.template head<3>() = f_sub[model.base_link];
  demand.tau_req.template segment<3>(3) =
      n_sub[model.base_link] - p_base.cross(f_sub[model.base_link]);
  for (int j = 0; j < model.n_joints(); ++j) {
    const int child = model.joints[j].child_link;
    const Vec3<S> axis_w = joint_world_axis(model, poses, j);
    const Vec3<S> p_joint = joint_world_origin(model, poses, j);
    demand.tau_req(6 + j) = axis_w.dot(n_sub[child] - p_joint.cross(f_sub[child]));
  }
  return demand;
}

/// (6+n)x(6+n) mass-inertia matrix via unit-acceleration extraction:
/// column j = rnea(q, 0, e_j) - rnea(q, 0, 0).
template <typename S>
MatX<S> mass_matrix(const CharacterModel<S>& model, const GeneralizedState<S>& q) {
  const int nv = model.n_vel();
  const VecX<S> zero = VecX<S>::Zero(nv);
  const VecX<S> grav = rnea(model, q, zero, zero).tau_req;
  MatX<S> m(nv, nv);
  VecX<S> e = VecX<S>::Zero(nv);
  for (int j = 0; j < nv; ++j) {
    e(j) = S(1);
    m.col(j) = rnea(model, q, zero, e).tau_req - grav;
    e(j) = S(0);
  }
  return m;
}

/// Generalized bias forces C(q, v): Coriolis, centrifugal and gravity.
template <typename S>
VecX<S> bias_forces(const CharacterModel<S>& model, const GeneralizedState<S>& q,
                    const VecX<S>& v) {
  return rnea(model, q, v, VecX<S>::Zero(model.n_vel())).tau_req;
}

/// Per-frame demand over a reference trajectory with derivatives.
template <typename S>
std::vector<WrenchDemand<S>> demand_trajectory(const CharacterModel<S>& model,
                                               const ReferenceTrajectory<S>& traj) {
  if (!traj.has_derivatives()) {
    throw_validation("demand_trajectory: trajectory lacks derived velocities/accelerations");
  }
  std::vector<WrenchDemand<S>> demands;
  demands.reserve(traj.n_frames());
  for (int t = 0; t < traj.n_frames(); ++t) {
    WrenchDemand<S> d = rnea(model, traj.frames[t], traj.derived_vel[t], traj.derived_acc[t]);
    d.frame_index = t;
    demands.push_back(std::move(d));
  }
  return demands;
}

using WrenchDemandd = WrenchDemand<double>;
using SpatialWrenchd = SpatialWrench<double>;

}  // namespace impulsekit
