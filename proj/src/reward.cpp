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

#include "expmem/reward.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "expmem/embedding.hpp"
#include "expmem/error.hpp"

namespace expmem {

void RewardConfig::validate() const {
  if (outcome_weight < 0 || progress_weight < 0 || unguided_bonus < 0 || adv_epsilon < 0 ||
      kl_beta < 0) {
    throw InvalidConfig("reward weights must be non-negative");
  }
  if (!(clip_delta > 0.0 && clip_delta < 1.0)) {
    throw InvalidConfig("reward.clip_delta must lie in (0, 1)");
  }
  if (!(outcome_weight + progress_weight > 0.0)) {
    throw InvalidConfig("reward.outcome_weight + reward.progress_weight must be positive");
  }
}

std::set<std::string> OracleJudge::verify(const Trajectory& trajectory, const TaskTemplate& task,
                                          const VariableBindings&) const {
  std::set<std::string> out;
  for (const auto& step : trajectory.steps) {
    if (step.fired_state && task.find_state(*step.fired_state)) out.insert(*step.fired_state);
  }
  return out;
}

std::set<std::string> RuleJudge::verify(const Trajectory& trajectory, const TaskTemplate& task,
                                        const VariableBindings& bindings) const {
  std::vector<std::set<std::string>> step_tokens;
  step_tokens.reserve(trajectory.steps.size());
  for (const auto& step : trajectory.steps) {
    auto toks = tokenize(step.ui_description);
    for (auto& t : tokenize(step.action_description)) toks.push_back(std::move(t));
    step_tokens.emplace_back(toks.begin(), toks.end());
  }

  auto satisfied_at = [&](const std::vector<std::string>& needed, std::size_t from) {
    for (std::size_t i = from; i < step_tokens.size(); ++i) {
      bool all = true;
      for (const auto& t : needed) {
        if (!step_tokens[i].count(t)) {
          all = false;
          break;
        }
      }
      if (all) return i;
    }
    return step_tokens.size();
  };

  std::set<std::string> out;
  std::size_t from = 0;
  for (const auto& state : task.essential_states) {
    const auto needed = tokenize(task.state_text(state, bindings));
    if (needed.empty()) continue;
    const std::size_t at = satisfied_at(needed, ordered_ ? from : 0);
    if (at == step_tokens.size()) {
      if (ordered_) break;
      continue;
    }
    out.insert(state.state_id);
    if (ordered_) from = at;
  }
  return out;
}

std::set<std::string> verify_states(const Trajectory& trajectory, const TaskTemplate& task,
                                    const VariableBindings& bindings, const StateJudge& judge) {
  try {
    return judge.verify(trajectory, task, bindings);
  } catch (const BackendFailure& e) {
    std::cerr << "warning: state judge failed for '" << task.task_id << "': " << e.what()
              << "\n";
    return {};
  }
}

double progress_reward(const std::set<std::string>& completed,
                       std::span<const std::string> total) {
  if (total.empty()) throw EmptyTotal();
  std::set<std::string> all(total.begin(), total.end());
  for (const auto& s : completed) {
    if (!all.count(s)) throw InvalidArgument("progress_reward: unknown state '" + s + "'");
  }
  return static_cast<double>(completed.size()) / static_cast<double>(all.size());
}

double shaped_reward(int r_outcome, double r_progress, GuidanceLevel level,
                     const RewardConfig& cfg) {
  const double unguided = level == GuidanceLevel::None ? 1.0 : 0.0;
  return cfg.outcome_weight * r_outcome + cfg.progress_weight * r_progress +
         cfg.unguided_bonus * unguided * r_outcome;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.empty()) throw InvalidArgument("group_advantages on an empty group");
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    return std::vector<double>(rewards.size(), 0.0);
  }
  const double m = mean_of(rewards);
  const double denom = population_std(rewards) + epsilon;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) {
    const double centered = r - m;
    out.push_back(centered == 0.0 ? 0.0 : centered / denom);
  }
  return out;
}

}  // namespace expmem
