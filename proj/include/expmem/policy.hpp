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

// Tabular softmax policy and the clipped group-relative surrogate with a KL
// penalty toward a frozen reference table.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "expmem/reward.hpp"
#include "expmem/trajectory.hpp"

namespace expmem {

class PolicyTable {
 public:
  PolicyTable() = default;
  // All-zero preferences (uniform policy) with the given actions per screen.
  explicit PolicyTable(const std::vector<std::size_t>& action_counts);

  std::size_t num_screens() const { return prefs_.size(); }
  std::size_t num_actions(std::size_t screen) const { return prefs_.at(screen).size(); }
  std::size_t num_parameters() const;

  double& at(std::size_t screen, std::size_t action) { return prefs_.at(screen).at(action); }
  double at(std::size_t screen, std::size_t action) const {
    return prefs_.at(screen).at(action);
  }
  std::span<const double> preferences(std::size_t screen) const { return prefs_.at(screen); }

  // softmax(preferences + bonus); an empty bonus means none.
  std::vector<double> probabilities(std::size_t screen, std::span<const double> bonus = {}) const;
  std::vector<double> log_probabilities(std::size_t screen,
                                        std::span<const double> bonus = {}) const;

  // Same shape, all zeros.
  PolicyTable zeros_like() const;
  // this += scale * other. Throws InvalidArgument on a shape mismatch.
  void add_scaled(const PolicyTable& other, double scale);
  bool same_shape(const PolicyTable& other) const;
  bool all_finite() const;

  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  bool operator==(const PolicyTable&) const = default;

 private:
  std::vector<std::vector<double>> prefs_;
};

nlohmann::json policy_to_json(const PolicyTable& policy,
                              const std::vector<std::string>& screen_ids);
// Throws IoFailure.
PolicyTable policy_from_json(const nlohmann::json& j);

// log pi(tau) with each step conditioned on its recorded bonus.
double trajectory_logprob(const PolicyTable& theta, const Trajectory& trajectory);

// KL(softmax(theta_s) || softmax(ref_s)) of the unconditioned tables.
double screen_kl(const PolicyTable& theta, const PolicyTable& ref, std::size_t screen);

struct GroupBatch {
  std::vector<Trajectory> trajectories;
  std::vector<double> advantages;
};

// Mean screen_kl over the distinct screens visited in the batch; 0 when the
// batch visits none.
double kl_estimate(const PolicyTable& theta, const PolicyTable& ref, const GroupBatch& batch);

// (1/G) sum_i min(r_i A_i, clip(r_i, 1 - delta, 1 + delta) A_i) - beta * KL,
// where r_i = exp(log pi_theta(tau_i) - behavior_logprob_i).
double grpo_objective(const GroupBatch& batch, const PolicyTable& theta,
                      const PolicyTable& ref, const RewardConfig& cfg);

// Analytic gradient of grpo_objective with respect to theta.
PolicyTable grpo_gradient(const GroupBatch& batch, const PolicyTable& theta,
                          const PolicyTable& ref, const RewardConfig& cfg);

// One ascent step on the summed objective of `batches`.
PolicyTable grpo_update(const PolicyTable& theta, std::span<const GroupBatch> batches,
                        const PolicyTable& ref, const RewardConfig& cfg, double learning_rate);

}  // namespace expmem
