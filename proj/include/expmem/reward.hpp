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

// Essential-state verification over textual histories, progress and
// guidance-aware shaped rewards, and group-relative advantages.

#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "expmem/memory.hpp"
#include "expmem/retrieval.hpp"
#include "expmem/trajectory.hpp"

namespace expmem {

struct RewardConfig {
  double outcome_weight = 0.7;   // lambda_o
  double progress_weight = 0.3;  // lambda_p
  double unguided_bonus = 0.2;   // alpha
  double adv_epsilon = 1e-6;
  double clip_delta = 0.2;
  double kl_beta = 0.01;

  void validate() const;
};

class StateJudge {
 public:
  virtual ~StateJudge() = default;
  // Throws BackendFailure (remote judges only).
  virtual std::set<std::string> verify(const Trajectory& trajectory, const TaskTemplate& task,
                                       const VariableBindings& bindings) const = 0;
};

// Trusts the simulator's fired-state flags.
class OracleJudge final : public StateJudge {
 public:
  std::set<std::string> verify(const Trajectory& trajectory, const TaskTemplate& task,
                               const VariableBindings& bindings) const override;
};

// Rule-based verification of the text history: a state is complete when all
// tokens of its instantiated text occur in one step's ui + action
// description. With `ordered`, states are searched in declared order, each
// at or after the step that satisfied its predecessor, and the first miss
// ends the scan.
class RuleJudge final : public StateJudge {
 public:
  explicit RuleJudge(bool ordered = true) : ordered_(ordered) {}
  std::set<std::string> verify(const Trajectory& trajectory, const TaskTemplate& task,
                               const VariableBindings& bindings) const override;

 private:
  bool ordered_;
};

// Judge failures count as zero completed states; the failure is logged.
std::set<std::string> verify_states(const Trajectory& trajectory, const TaskTemplate& task,
                                    const VariableBindings& bindings, const StateJudge& judge);

// |completed| / |total|. Throws EmptyTotal, or InvalidArgument when
// `completed` names a state outside `total`.
double progress_reward(const std::set<std::string>& completed,
                       std::span<const std::string> total);

// lambda_o * outcome + lambda_p * progress + alpha * [level == None] * outcome.
double shaped_reward(int r_outcome, double r_progress, GuidanceLevel level,
                     const RewardConfig& cfg);

double mean_of(std::span<const double> values);
// Divides by n, so a single value has std 0.
double population_std(std::span<const double> values);

// (R_i - mean) / (population std + epsilon).
std::vector<double> group_advantages(std::span<const double> rewards, double epsilon);

}  // namespace expmem
