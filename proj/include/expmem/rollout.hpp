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

// Guidance-conditioned rollouts in the simulated world and no-learning
// evaluation.

#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "expmem/evolution.hpp"
#include "expmem/memory.hpp"
#include "expmem/policy.hpp"
#include "expmem/retrieval.hpp"
#include "expmem/trajectory.hpp"
#include "expmem/world.hpp"

namespace expmem {

std::uint64_t splitmix64(std::uint64_t x);

// Reproducible stream keyed by (seed, iteration, task, slot).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  static RngStream for_slot(std::uint64_t seed, std::uint64_t iteration, std::uint64_t task,
                            std::uint64_t slot);

  // 53-bit uniform in [0, 1).
  double uniform();
  // Inverse-CDF draw; the last index absorbs rounding.
  std::size_t sample(std::span<const double> probabilities);

 private:
  std::mt19937_64 engine_;
};

// Action labels a packet points at: every quoted "Tap '...'" in its step
// instructions, plus its tips and warning corrections.
std::set<std::string> guided_labels(const GuidancePacket& packet);

struct GuidedPolicy {
  const PolicyTable* base = nullptr;
  double bonus_strong = 2.0;
  double bonus_weak = 2.0;

  double bonus_for(GuidanceLevel level) const;
  // Per-action bonus on `screen`; empty when no action is boosted.
  std::vector<double> bonus_vector(const Screen& screen, GuidanceLevel level,
                                   const std::set<std::string>& labels) const;
};

// Samples at most `task.horizon` actions from softmax(base + bonus). Stops on
// a screen without actions or once every essential state has fired.
// behavior_logprob is accumulated under the acting distribution.
Trajectory rollout(const GuidedPolicy& policy, const SimWorld& world, const SimTask& task,
                   const GuidancePacket& packet, RngStream& rng);

// Textual step descriptions used by the judges.
std::string action_text(const std::string& label);

// Correct action per screen, for failure diagnoses.
ExpertHint make_expert_hint(const SimWorld& world);

struct EvalOptions {
  int n_episodes = 100;
  GuidanceLevel level = GuidanceLevel::None;
  std::uint64_t seed = 1;
  const ExperienceStore* store = nullptr;  // required unless level is None
  RetrievalConfig retrieval;
  Iteration now = 0;
};

// Success rate per task, no learning and no memory writes. Episode e of task
// t uses the same stream whatever the level, so levels pair up.
std::vector<double> eval_policy(const GuidedPolicy& policy, const SimWorld& world,
                                const EvalOptions& options);

}  // namespace expmem
