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

#include <cmath>

#include "impulsekit/types.hpp"

namespace impulsekit {

template <typename S>
Mat3<S> skew(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0), -v.z(), v.y(),
       v.z(), S(0), -v.x(),
      -v.y(), v.x(), S(0);
  return m;
}

/// Quaternion exponential of a rotation vector w (angle * axis).
template <typename S>
Quat<S> quat_exp(const Vec3<S>& w) {
  const S theta = w.norm();
  Quat<S> q;
  if (theta < S(1e-12)) {
    // sin(t/2)/t -> 1/2 as t -> 0
    q.w() = S(1) - theta * theta / S(8);
    q.vec() = S(0.5) * w;
  } else {
    const S half = S(0.5) * theta;
    q.w() = std::cos(half);
    q.vec() = (std::sin(half) / theta) * w;
  }
  q.normalize();
  return q;
}

/// Rotation vector (angle * axis) of a unit quaternion, shortest arc.
template <typename S>
Vec3<S> quat_log(const Quat<S>& q_in) {
  Quat<S> q = q_in;
  if (q.w() < S(0)) q.coeffs() = -q.coeffs();
  const S vnorm = q.vec().norm();
  if (vnorm < S(1e-12)) {
    return S(2) * q.vec() / q.w();
  }
  const S theta = S(2) * std::atan2(vnorm, q.w());
  return (theta / vnorm) * q.vec();
}

/// World-frame angular velocity that carries qa to qb over dt.
template <typename S>
Vec3<S> angular_velocity_between(const Quat<S>& qa, const Quat<S>& qb, S dt) {
  return quat_log(Quat<S>(qb * qa.conjugate())) / dt;
}

/// First two columns of the rotation matrix, stacked. A continuous
/// 6-number encoding of orientation.
template <typename S>
Eigen::Matrix<S, 6, 1> rotation_to_6d(const Mat3<S>& r) {
  Eigen::Matrix<S, 6, 1> out;
  out.template head<3>() = r.col(0);
  out.template tail<3>() = r.col(1);
  return out;
}

/// Deterministic orthonormal pair spanning the plane normal to n.
template <typename S>
void tangent_basis(const Vec3<S>& n, Vec3<S>& t1, Vec3<S>& t2) {
  const Vec3<S> ref = std::abs(n.z()) < S(0.9) ? Vec3<S>::UnitZ() : Vec3<S>::UnitX();
  t1 = ref.cross(n).normalized();
  t2 = n.cross(t1).normalized();
}

}  // namespace impulsekit
