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

#include "impulsekit/dynamics.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// Dual-gated fusion of the analytical baseline with the learned residual.
/// Per 3-row block: beta * I_base + (1 - beta) * I_res.
template <typename S>
Vec6<S> compose_impulse(const Vec6<S>& impulse_base, const Vec6<S>& impulse_res, S beta_lin,
                        S beta_ang) {
  if (!(beta_lin >= S(0) && beta_lin <= S(1) && beta_ang >= S(0) && beta_ang <= S(1))) {
    throw_validation("compose_impulse: gates must lie in [0, 1]");
  }
  Vec6<S> total;
  total.template head<3>() = beta_lin * impulse_base.template head<3>() +
                             (S(1) - beta_lin) * impulse_res.template head<3>();
  total.template tail<3>() = beta_ang * impulse_base.template tail<3>() +
                             (S(1) - beta_ang) * impulse_res.template tail<3>();
  return total;
}

/// Momentum increment -> effective wrench over one control step.
template <typename S>
SpatialWrench<S> impulse_to_wrench(const Vec6<S>& impulse_total, S dt_control) {
  if (!(dt_control > S(0))) throw_validation("impulse_to_wrench: dt must be > 0");
  return SpatialWrench<S>::from_stacked(impulse_total / dt_control);
}

/// Norm-clamps the linear and angular 3-blocks independently.
template <typename S>
Vec6<S> clamp_impulse(const Vec6<S>& impulse, S cap_lin, S cap_ang) {
  Vec6<S> out = impulse;
  const S nl = out.template head<3>().norm();
  if (nl > cap_lin) out.template head<3>() *= cap_lin / nl;
  const S na = out.template tail<3>().norm();
  if (na > cap_ang) out.template tail<3>() *= cap_ang / na;
  return out;
}

}  // namespace impulsekit
