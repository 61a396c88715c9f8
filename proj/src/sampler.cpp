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

#include "expmem/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "expmem/error.hpp"

namespace expmem {

void CurriculumConfig::validate() const {
  if (!(theta_start >= 0.0 && theta_start < theta_end && theta_end <= 1.0)) {
    throw InvalidConfig("curriculum requires 0 <= theta_start < theta_end <= 1");
  }
  if (!(strong_min >= 0.0 && strong_min <= strong_max && strong_max <= 1.0)) {
    throw InvalidConfig("curriculum requires 0 <= strong_min <= strong_max <= 1");
  }
  if (!(none_min >= 0.0 && none_min <= none_max && none_max <= 1.0)) {
    throw InvalidConfig("curriculum requires 0 <= none_min <= none_max <= 1");
  }
  if (strong_min + none_max > 1.0 || strong_max + none_min > 1.0) {
    throw InvalidConfig("curriculum bounds leave a negative weak share");
  }
  if (group_size < 1) throw InvalidConfig("curriculum.group_size must be >= 1");
}

GuidanceMix curriculum_lambdas(double success_ema, const CurriculumConfig& cfg) {
  cfg.validate();
  if (!(success_ema >= 0.0 && success_ema <= 1.0)) {
    throw InvalidArgument("curriculum_lambdas: S_t outside [0, 1]");
  }
  const double phi = (success_ema - cfg.theta_start) / (cfg.theta_end - cfg.theta_start);
  GuidanceMix mix;
  mix.strong = std::clamp(cfg.strong_max - phi * (cfg.strong_max - cfg.strong_min),
                          cfg.strong_min, cfg.strong_max);
  mix.none = std::clamp(cfg.none_min + phi * (cfg.none_max - cfg.none_min), cfg.none_min,
                        cfg.none_max);
  mix.weak = 1.0 - mix.strong - mix.none;
  return mix;
}

GroupCounts allocate_counts(const GuidanceMix& mix, int group_size) {
  if (group_size < 1) throw InvalidArgument("allocate_counts: group size must be >= 1");
  if (std::abs(mix.strong + mix.weak + mix.none - 1.0) > 1e-9) {
    throw InvalidArgument("allocate_counts: shares do not sum to 1");
  }
  const std::array<double, 3> share = {mix.strong, mix.weak, mix.none};
  std::array<int, 3> seats{};
  std::array<double, 3> remainder{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = std::max(0.0, share[i]) * group_size;
    seats[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - seats[i];
    assigned += seats[i];
  }
  // Remainders within 1e-12 count as tied; ties keep strong/weak/none order.
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[a] > remainder[b] + 1e-12;
  });
  for (int k = 0; assigned < group_size; k = (k + 1) % 3) {
    ++seats[order[k]];
    ++assigned;
  }
  return {seats[0], seats[1], seats[2]};
}

GroupPlan unguided_plan(int group_size) {
  GroupPlan plan;
  plan.mix = {0.0, 0.0, 1.0};
  plan.counts = {0, 0, group_size};
  plan.levels.assign(group_size, GuidanceLevel::None);
  plan.packets.assign(group_size, GuidancePacket{});
  return plan;
}

GroupPlan assign_guidance(const TaskStats& stats, const MemorySnapshot& snapshot,
                          std::string_view instruction, const CurriculumConfig& cfg,
                          const RetrievalConfig& retrieval_cfg, Iteration now,
                          const MatchBackend& backend, UsageLog* usage) {
  GroupPlan plan;
  plan.mix = curriculum_lambdas(stats.ema_success, cfg);
  plan.counts = allocate_counts(plan.mix, cfg.group_size);

  GuidancePacket strong;
  GuidancePacket weak;
  strong.level = GuidanceLevel::Strong;
  weak.level = GuidanceLevel::Weak;
  if (plan.counts.strong > 0) {
    strong = retrieve_guidance(snapshot, instruction, GuidanceLevel::Strong, now,
                               retrieval_cfg, backend, usage);
    weak = strong.weakened();
  } else if (plan.counts.weak > 0) {
    weak = retrieve_guidance(snapshot, instruction, GuidanceLevel::Weak, now, retrieval_cfg,
                             backend, usage);
  }

  auto push = [&](GuidanceLevel level, const GuidancePacket& packet, int n) {
    for (int i = 0; i < n; ++i) {
      plan.levels.push_back(level);
      plan.packets.push_back(packet);
    }
  };
  push(GuidanceLevel::Strong, strong, plan.counts.strong);
  push(GuidanceLevel::Weak, weak, plan.counts.weak);
  push(GuidanceLevel::None, GuidancePacket{}, plan.counts.none);
  return plan;
}

}  // namespace expmem
