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
#include "impulsekit/rotation.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// A candidate contact location: a point fixed on a link.
template <typename S>
struct ContactSite {
  int link = 0;
  Vec3<S> local_point = Vec3<S>::Zero();
};

/// An active contact with its linearized friction cone. The four pyramid
/// edges are unit vectors on the cone boundary, so edge . normal equals
/// 1/sqrt(1 + mu^2).
template <typename S>
struct ContactPoint {
  int link = 0;
  Vec3<S> local_point = Vec3<S>::Zero();
  Vec3<S> world_point = Vec3<S>::Zero();
  S mu = S(0.8);
  Vec3<S> normal = Vec3<S>::UnitZ();
  Eigen::Matrix<S, 3, 4> pyramid_edges;
};

template <typename S>
Eigen::Matrix<S, 3, 4> friction_pyramid(const Vec3<S>& normal, S mu) {
  Vec3<S> t1, t2;
  tangent_basis(normal, t1, t2);
  const S inv = S(1) / std::sqrt(S(1) + mu * mu);
  Eigen::Matrix<S, 3, 4> edges;
  edges.col(0) = (normal + mu * t1) * inv;
  edges.col(1) = (normal + mu * t2) * inv;
  edges.col(2) = (normal - mu * t1) * inv;
  edges.col(3) = (normal - mu * t2) * inv;
  return edges;
}

template <typename S>
ContactPoint<S> make_contact_point(int link, const Vec3<S>& local_point,
                                   const Vec3<S>& world_point, S mu,
                                   const Vec3<S>& normal = Vec3<S>::UnitZ()) {
  if (!(mu > S(0))) throw_validation("make_contact_point: mu must be > 0");
  ContactPoint<S> c;
  c.link = link;
  c.local_point = local_point;
  c.world_point = world_point;
  c.mu = mu;
  c.normal = normal;
  c.pyramid_edges = friction_pyramid(normal, mu);
  return c;
}

/// Per-frame active contact sets, aligned with the trajectory frames.
template <typename S>
struct ContactSchedule {
  std::vector<std::vector<ContactPoint<S>>> frames;

  int n_frames() const { return static_cast<int>(frames.size()); }
};

template <typename S>
struct ContactParams {
  S height_threshold = S(0.03);  // m
  S speed_threshold = S(0.5);    // m/s
  S mu = S(0.8);
  std::vector<ContactSite<S>> sites;
};

/// A site is in contact at a frame iff its reference world height is at or
/// below height_threshold and its reference world speed is at or below
/// speed_threshold.
template <typename S>
ContactSchedule<S> detect_contacts(const CharacterModel<S>& model,
                                   const ReferenceTrajectory<S>& traj,
                                   const ContactParams<S>& params) {
  for (const auto& site : params.sites) {
    if (site.link < 0 || site.link >= model.n_links()) {
      throw_validation("detect_contacts: invalid contact link index");
    }
  }
  if (!traj.has_derivatives()) {
    throw_validation("detect_contacts: trajectory lacks derivatives");
  }
  ContactSchedule<S> schedule;
  schedule.frames.resize(traj.n_frames());
  for (int t = 0; t < traj.n_frames(); ++t) {
    const auto poses = forward_kinematics(model, traj.frames[t]);
    for (const auto& site : params.sites) {
      const Vec3<S> world =
          poses[site.link].position + poses[site.link].rotation * site.local_point;
      if (world.z() > params.height_threshold) continue;
      const Vec3<S> vel = point_jacobian(model, poses, site.link, site.local_point) *
                          traj.derived_vel[t];
      if (vel.norm() > params.speed_threshold) continue;
      schedule.frames[t].push_back(
          make_contact_point(site.link, site.local_point, world, params.mu));
    }
  }
  return schedule;
}

}  // namespace impulsekit
