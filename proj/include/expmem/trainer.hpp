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

// The training loop: stratified guidance sampling, rollouts, verification,
// shaped rewards, group-relative policy updates and, between iterations,
// memory evolution.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "expmem/evolution.hpp"
#include "expmem/memory.hpp"
#include "expmem/metrics.hpp"
#include "expmem/policy.hpp"
#include "expmem/retrieval.hpp"
#include "expmem/reward.hpp"
#include "expmem/sampler.hpp"
#include "expmem/world.hpp"

namespace expmem {

enum class SamplerKind {
  UiMem,    // curriculum-mixed guidance with memory evolution
  Vanilla,  // every slot unguided, memory never written
};

std::string_view to_string(SamplerKind kind);
// Throws InvalidConfig.
SamplerKind parse_sampler(std::string_view text);

struct TrainConfig {
  std::uint64_t seed = 1;
  int iterations = 200;
  SamplerKind sampler = SamplerKind::UiMem;
  CurriculumConfig curriculum;
  RewardConfig reward;
  RetrievalConfig retrieval;
  EvolutionConfig evolution;
  double learning_rate = 0.3;
  double bonus_strong = 2.0;
  double bonus_weak = 2.0;

  void validate() const;
};

// Optional overrides; null members fall back to the rule-based defaults
// (RuleJudge, RuleMatchBackend, trace extraction with simulator hints,
// binding abstraction).
struct TrainBackends {
  const StateJudge* judge = nullptr;
  const MatchBackend* match = nullptr;
  const ExtractionBackend* extraction = nullptr;
  const AbstractionBackend* abstraction = nullptr;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  ExperienceStore store;
  PolicyTable policy;
};

// Store holding the world's task templates and zeroed statistics.
ExperienceStore initial_store(const SimWorld& world);
// Uniform policy over the world's screens.
PolicyTable initial_policy(const SimWorld& world);

// Called after each iteration's writer phase; for progress reporting and for
// tests that assert on phase boundaries.
using IterationHook = std::function<void(Iteration, const ExperienceStore&, const PolicyTable&)>;

TrainResult train(const SimWorld& world, const TrainConfig& cfg,
                  const TrainBackends& backends = {},
                  std::optional<ExperienceStore> store = std::nullopt,
                  const IterationHook& hook = {});

}  // namespace expmem
