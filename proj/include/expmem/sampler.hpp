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

// Stratified group sampling with a success-driven guidance curriculum.

#pragma once

#include <string_view>
#include <vector>

#include "expmem/memory.hpp"
#include "expmem/retrieval.hpp"

namespace expmem {

struct CurriculumConfig {
  double theta_start = 0.2;
  double theta_end = 0.8;
  double strong_max = 0.5;
  double strong_min = 0.0;
  double none_min = 0.25;
  double none_max = 0.75;
  int group_size = 4;

  // Throws InvalidConfig, including when the bounds would let the residual
  // weak share go negative.
  void validate() const;
};

struct GuidanceMix {
  double strong = 0.0;
  double weak = 0.0;
  double none = 1.0;
};

// Clipped linear schedules in the normalized progress
// phi = (S_t - theta_start) / (theta_end - theta_start); weak is residual.
GuidanceMix curriculum_lambdas(double success_ema, const CurriculumConfig& cfg);

struct GroupCounts {
  int strong = 0;
  int weak = 0;
  int none = 0;

  bool operator==(const GroupCounts&) const = default;
  int total() const { return strong + weak + none; }
};

// Largest-remainder apportionment of `group_size` seats; equal remainders
// go to strong, then weak, then none.
GroupCounts allocate_counts(const GuidanceMix& mix, int group_size);

struct GroupPlan {
  GuidanceMix mix;
  GroupCounts counts;
  std::vector<GuidanceLevel> levels;     // strong slots first, then weak, then none
  std::vector<GuidancePacket> packets;   // one per slot
};

// One retrieval per group at the strongest level needed; weak slots share a
// weakened copy of the same packet. An empty store degrades guided slots to
// empty packets while keeping their level.
GroupPlan assign_guidance(const TaskStats& stats, const MemorySnapshot& snapshot,
                          std::string_view instruction, const CurriculumConfig& cfg,
                          const RetrievalConfig& retrieval_cfg, Iteration now,
                          const MatchBackend& backend = default_match_backend(),
                          UsageLog* usage = nullptr);

// Every slot unguided; the plain-GRPO baseline.
GroupPlan unguided_plan(int group_size);

}  // namespace expmem
