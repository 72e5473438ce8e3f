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
#include <cmath>
#include <string>

#include "impulsekit/model.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// Synthetic exaggerated motions standing in for stylized animation clips.
/// They deliberately contain velocity discontinuities and sub-gravity
/// descents, which is what the assistive pipeline exists to handle.
enum class MotionKind {
  kGroundDash,
  kAerialDash,
  kGravityDefyingDescent,
  kDoubleJump,
};

inline const char* motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kGroundDash: return "ground-dash";
    case MotionKind::kAerialDash: return "aerial-dash";
    case MotionKind::kGravityDefyingDescent: return "gravity-defying-descent";
    case MotionKind::kDoubleJump: return "double-jump";
  }
  return "unknown";
}

template <typename S>
struct MotionParams {
  S duration = S(3);
  S dt = S(1.0 / 30.0);
  S peak_speed = S(6);        // dash speed, m/s
  S dash_window = S(1);       // dash duration, s
  S apex_height = S(1);       // m
  S jump_boost = S(3);        // extra upward speed at the apex, m/s
  S descent_floor = S(0.3);   // final height of the slow descent, m
  S stand_height = S(0);      // base height for ground motions, m
  S rest_height = S(0.02);    // height the jump settles at, m
  S joint_amplitude = S(0.3); // rad
  S joint_frequency = S(1);   // Hz
};

/// Builds a reference trajectory of round(duration/dt) frames. Velocity
/// steps are aligned with the frame grid so the derived acceleration spike
/// lands on a single frame at any sampling rate whose grid contains the
/// step time. Joint angles follow a smooth periodic filler signal.
template <typename S>
ReferenceTrajectory<S> synthesize_exaggerated(MotionKind kind, const MotionParams<S>& params,
                                              const CharacterModel<S>& model) {
  if (!(params.dt > S(0)) || !(params.duration > S(0))) {
    throw_usage("synthesize_exaggerated: duration and dt must be > 0");
  }
  const bool is_dash = kind == MotionKind::kGroundDash || kind == MotionKind::kAerialDash;
  if (is_dash && !(params.duration > params.dash_window && params.dash_window > S(0))) {
    throw_usage("synthesize_exaggerated: need duration > dash window > 0");
  }

  const int nf = static_cast<int>(std::llround(params.duration / params.dt));
  if (nf < 3) throw_usage("synthesize_exaggerated: too few frames");
  const S dt = params.dt;
  const S g = -model.gravity.z();
  const int n = model.n_joints();

  ReferenceTrajectory<S> traj;
  traj.dt = dt;
  traj.frames.reserve(nf);
  traj.labels.assign(nf, "");

  // Grid-aligned event frames.
  const int k_on = static_cast<int>(std::llround(params.duration / (S(3) * dt)));
  const int k_off = k_on + static_cast<int>(std::llround(params.dash_window / dt));

  // Double jump: ballistic rise to the apex, then an instantaneous upward
  // velocity gain and a second ballistic arc.
  const int k_apex = static_cast<int>(std::llround(S(0.4) * params.duration / dt));
  const S t_apex = S(k_apex) * dt;
  const S v_launch = g * t_apex;
  const S z_start = params.apex_height - S(0.5) * g * t_apex * t_apex;

  // Slow descent: constant sub-gravity downward acceleration.
  const S total_t = S(nf - 1) * dt;
  const S a_down = S(2) * (params.apex_height - params.descent_floor) / (total_t * total_t);
  if (kind == MotionKind::kGravityDefyingDescent) {
    if (!(a_down > S(0)) || !(a_down < g)) {
      throw_usage("synthesize_exaggerated: descent must be slower than gravity");
    }
  }

  for (int k = 0; k < nf; ++k) {
    const S t = S(k) * dt;
    GeneralizedState<S> frame = GeneralizedState<S>::zero(n);

    switch (kind) {
      case MotionKind::kGroundDash:
      case MotionKind::kAerialDash: {
        S x = S(0);
        if (k > k_on && k <= k_off) {
          x = params.peak_speed * (S(k - k_on) * dt);
        } else if (k > k_off) {
          x = params.peak_speed * (S(k_off - k_on) * dt);
        }
        frame.base_pos = Vec3<S>(
            x, S(0),
            kind == MotionKind::kGroundDash ? params.stand_height : params.apex_height);
        if (k >= k_on && k <= k_off) traj.labels[k] = "dash-window";
        break;
      }
      case MotionKind::kGravityDefyingDescent: {
        frame.base_pos = Vec3<S>(S(0), S(0), params.apex_height - S(0.5) * a_down * t * t);
        break;
      }
      case MotionKind::kDoubleJump: {
        S z;
        if (k <= k_apex) {
          z = z_start + v_launch * t - S(0.5) * g * t * t;
        } else {
          const S u = t - t_apex;
          z = params.apex_height + params.jump_boost * u - S(0.5) * g * u * u;
          if (k == k_apex + 1) traj.labels[k] = "boost";
        }
        frame.base_pos = Vec3<S>(S(0), S(0), std::max(z, params.rest_height));
        break;
      }
    }

    for (int i = 0; i < n; ++i) {
      frame.joint_pos(i) = params.joint_amplitude *
                           std::sin(S(2) * S(M_PI) * params.joint_frequency * t +
                                    S(M_PI) * S(i) / S(4));
    }
    traj.frames.push_back(std::move(frame));
  }
  if (k_on >= 0 && k_on < nf && is_dash) traj.labels[k_on] = "dash-onset";
  return traj;
}

}  // namespace impulsekit
