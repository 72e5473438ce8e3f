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

#include "impulsekit/decomp.hpp"
#include "impulsekit/metrics.hpp"
#include "impulsekit/model.hpp"
#include "impulsekit/policy.hpp"
#include "impulsekit/sim.hpp"
#include "impulsekit/train.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

// Structured-text (JSON) model and trajectory documents.
CharacterModeld load_model_string(const std::string& text);
CharacterModeld load_model_file(const std::string& path);
std::string model_to_string(const CharacterModeld& model);

ReferenceTrajectoryd load_trajectory_string(const std::string& text,
                                            const CharacterModeld& model);
ReferenceTrajectoryd load_trajectory_file(const std::string& path,
                                          const CharacterModeld& model);
std::string trajectory_to_string(const ReferenceTrajectoryd& traj);

// Perturbation schedules round-trip through the same structured-text form.
std::string schedule_to_string(const PerturbationSchedule<double>& schedule);
PerturbationSchedule<double> schedule_from_string(const std::string& text);

// Deterministic number formatting used by every CSV emitter ("%.17g",
// which round-trips doubles exactly).
std::string format_double(double value);

// Reads a whole file / writes atomically via temp-then-rename.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

// CSV emitters. All start with a header row.
std::string impulse_profile_csv(const AnalysisResult<double>& analysis);
ImpulseProfiled load_impulse_profile_csv(const std::string& text);
std::string telemetry_csv(const RolloutResult<double>& rollout);
std::string curves_csv(const std::vector<CurveRow>& rows);
std::string eval_report_csv(const EvalReport& report, bool has_split);
std::string eval_report_json(const EvalReport& report, bool has_split);

// Policy checkpoints: versioned JSON container with layer shapes, weights,
// log-stds, sigma scales, and the observation-spec hash.
struct Checkpoint {
  PolicyNetd policy;
  CriticNetd critic;
  ObservationSpec spec;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace impulsekit
