// Copyright 2026 the expmem authors
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

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "expmem/retrieval.hpp"

namespace expmem {

struct TrajectoryStep {
  std::size_t screen = 0;  // index into the world's screen table
  std::string screen_id;
  std::size_t action = 0;  // index into the screen's action list
  // Textual history consumed by the state judges.
  std::string ui_description;
  std::string action_description;
  // Set by the simulator when this action fired an essential-state predicate.
  std::optional<std::string> fired_state;
  // Guidance bonus per action of `screen` at the time of acting; empty means
  // no bonus. Part of the policy's conditioning.
  std::vector<double> bonus;
};

struct Trajectory {
  std::string task_template_id;
  GuidanceLevel guidance_level = GuidanceLevel::None;
  std::vector<TrajectoryStep> steps;
  std::set<std::string> completed_states;
  int r_outcome = 0;
  double shaped_reward = 0.0;
  double behavior_logprob = 0.0;  // log pi_old(tau) under the acting conditioning
};

}  // namespace expmem
