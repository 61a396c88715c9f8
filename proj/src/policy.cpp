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

#include "expmem/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "expmem/error.hpp"

namespace expmem {

PolicyTable::PolicyTable(const std::vector<std::size_t>& action_counts) {
  prefs_.reserve(action_counts.size());
  for (std::size_t n : action_counts) prefs_.emplace_back(n, 0.0);
}

std::size_t PolicyTable::num_parameters() const {
  std::size_t n = 0;
  for (const auto& row : prefs_) n += row.size();
  return n;
}

std::vector<double> PolicyTable::log_probabilities(std::size_t screen,
                                                   std::span<const double> bonus) const {
  const auto& row = prefs_.at(screen);
  if (!bonus.empty() && bonus.size() != row.size()) {
    throw InvalidArgument("bonus length does not match the screen's action count");
  }
  std::vector<double> logits(row.begin(), row.end());
  for (std::size_t i = 0; i < bonus.size(); ++i) logits[i] += bonus[i];
  if (logits.empty()) return logits;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lz = mx + std::log(z);
  for (double& l : logits) l -= lz;
  return logits;
}

std::vector<double> PolicyTable::probabilities(std::size_t screen,
                                               std::span<const double> bonus) const {
  auto lp = log_probabilities(screen, bonus);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

PolicyTable PolicyTable::zeros_like() const {
  PolicyTable out;
  out.prefs_.reserve(prefs_.size());
  for (const auto& row : prefs_) out.prefs_.emplace_back(row.size(), 0.0);
  return out;
}

bool PolicyTable::same_shape(const PolicyTable& other) const {
  if (prefs_.size() != other.prefs_.size()) return false;
  for (std::size_t s = 0; s < prefs_.size(); ++s) {
    if (prefs_[s].size() != other.prefs_[s].size()) return false;
  }
  return true;
}

void PolicyTable::add_scaled(const PolicyTable& other, double scale) {
  if (!same_shape(other)) throw InvalidArgument("policy tables differ in shape");
  for (std::size_t s = 0; s < prefs_.size(); ++s) {
    for (std::size_t a = 0; a < prefs_[s].size(); ++a) prefs_[s][a] += scale * other.prefs_[s][a];
  }
}

bool PolicyTable::all_finite() const {
  for (const auto& row : prefs_) {
    for (double v : row) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<double> PolicyTable::flatten() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& row : prefs_) out.insert(out.end(), row.begin(), row.end());
  return out;
}

void PolicyTable::assign_flat(std::span<const double> values) {
  if (values.size() != num_parameters()) throw InvalidArgument("flat parameter size mismatch");
  std::size_t k = 0;
  for (auto& row : prefs_) {
    for (double& v : row) v = values[k++];
  }
}

nlohmann::json policy_to_json(const PolicyTable& policy,
                              const std::vector<std::string>& screen_ids) {
  if (screen_ids.size() != policy.num_screens()) {
    throw InvalidArgument("policy_to_json: one screen id per screen required");
  }
  nlohmann::json screens = nlohmann::json::array();
  for (std::size_t s = 0; s < policy.num_screens(); ++s) {
    const auto prefs = policy.preferences(s);
    screens.push_back({{"screen_id", screen_ids[s]},
                       {"preferences", std::vector<double>(prefs.begin(), prefs.end())}});
  }
  return {{"format_version", 1}, {"screens", std::move(screens)}};
}

PolicyTable policy_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw IoFailure("unsupported policy version");
    std::vector<std::size_t> counts;
    std::vector<std::vector<double>> rows;
    for (const auto& s : j.at("screens")) {
      rows.push_back(s.at("preferences").get<std::vector<double>>());
      counts.push_back(rows.back().size());
    }
    PolicyTable out(counts);
    for (std::size_t s = 0; s < rows.size(); ++s) {
      for (std::size_t a = 0; a < rows[s].size(); ++a) out.at(s, a) = rows[s][a];
    }
    if (!out.all_finite()) throw IoFailure("policy file holds non-finite preferences");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure(std::string("malformed policy document: ") + e.what());
  }
}

double trajectory_logprob(const PolicyTable& theta, const Trajectory& trajectory) {
  double lp = 0.0;
  for (const auto& step : trajectory.steps) {
    lp += theta.log_probabilities(step.screen, step.bonus).at(step.action);
  }
  return lp;
}

double screen_kl(const PolicyTable& theta, const PolicyTable& ref, std::size_t screen) {
  const auto lp = theta.log_probabilities(screen);
  const auto lq = ref.log_probabilities(screen);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a) kl += std::exp(lp[a]) * (lp[a] - lq[a]);
  return std::max(0.0, kl);
}

namespace {

std::set<std::size_t> visited_screens(const GroupBatch& batch) {
  std::set<std::size_t> out;
  for (const auto& t : batch.trajectories) {
    for (const auto& step : t.steps) out.insert(step.screen);
  }
  return out;
}

void check_batch(const GroupBatch& batch) {
  if (batch.trajectories.size() != batch.advantages.size()) {
    throw InvalidArgument("GroupBatch needs one advantage per trajectory");
  }
  if (batch.trajectories.empty()) throw InvalidArgument("GroupBatch is empty");
}

}  // namespace

double kl_estimate(const PolicyTable& theta, const PolicyTable& ref, const GroupBatch& batch) {
  const auto screens = visited_screens(batch);
  if (screens.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t s : screens) sum += screen_kl(theta, ref, s);
  return sum / static_cast<double>(screens.size());
}

double grpo_objective(const GroupBatch& batch, const PolicyTable& theta,
                      const PolicyTable& ref, const RewardConfig& cfg) {
  check_batch(batch);
  const double g = static_cast<double>(batch.trajectories.size());
  double surrogate = 0.0;
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& t = batch.trajectories[i];
    const double a = batch.advantages[i];
    const double r = std::exp(trajectory_logprob(theta, t) - t.behavior_logprob);
    const double clipped = std::clamp(r, 1.0 - cfg.clip_delta, 1.0 + cfg.clip_delta);
    surrogate += std::min(r * a, clipped * a);
  }
  return surrogate / g - cfg.kl_beta * kl_estimate(theta, ref, batch);
}

PolicyTable grpo_gradient(const GroupBatch& batch, const PolicyTable& theta,
                          const PolicyTable& ref, const RewardConfig& cfg) {
  check_batch(batch);
  PolicyTable grad = theta.zeros_like();
  const double g = static_cast<double>(batch.trajectories.size());

  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& t = batch.trajectories[i];
    const double a = batch.advantages[i];
    if (a == 0.0) continue;
    const double r = std::exp(trajectory_logprob(theta, t) - t.behavior_logprob);
    // The unclipped branch is the minimum exactly in these regions.
    const bool active = (a > 0.0 && r < 1.0 + cfg.clip_delta) ||
                        (a < 0.0 && r > 1.0 - cfg.clip_delta);
    if (!active) continue;
    const double w = a * r / g;
    for (const auto& step : t.steps) {
      const auto p = theta.probabilities(step.screen, step.bonus);
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double onehot = j == step.action ? 1.0 : 0.0;
        grad.at(step.screen, j) += w * (onehot - p[j]);
      }
    }
  }

  if (cfg.kl_beta != 0.0) {
    const auto screens = visited_screens(batch);
    const double scale = cfg.kl_beta / static_cast<double>(screens.size());
    for (std::size_t s : screens) {
      const auto lp = theta.log_probabilities(s);
      const auto lq = ref.log_probabilities(s);
      double kl = 0.0;
      for (std::size_t j = 0; j < lp.size(); ++j) kl += std::exp(lp[j]) * (lp[j] - lq[j]);
      for (std::size_t j = 0; j < lp.size(); ++j) {
        grad.at(s, j) -= scale * std::exp(lp[j]) * (lp[j] - lq[j] - kl);
      }
    }
  }
  return grad;
}

PolicyTable grpo_update(const PolicyTable& theta, std::span<const GroupBatch> batches,
                        const PolicyTable& ref, const RewardConfig& cfg, double learning_rate) {
  PolicyTable next = theta;
  for (const auto& batch : batches) {
    next.add_scaled(grpo_gradient(batch, theta, ref, cfg), learning_rate);
  }
  return next;
}

}  // namespace expmem
