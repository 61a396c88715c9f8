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

// Hierarchical retrieval: match an instruction to a task template, pick a
// workflow by UCB score, instantiate it, and attach ranked subtask tips and
// failure warnings.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "expmem/embedding.hpp"
#include "expmem/memory.hpp"

namespace expmem {

enum class GuidanceLevel { Strong, Weak, None };

std::string_view to_string(GuidanceLevel level);
// Case-insensitive "strong" / "weak" / "none". Throws InvalidArgument.
GuidanceLevel parse_guidance_level(std::string_view text);

struct RetrievalConfig {
  double ucb_lambda = 1.0;
  double decay_lambda = 0.05;  // per iteration
  int top_k = 5;
  double match_threshold = 0.80;
  int tips_per_step = 2;
  int warnings_per_step = 2;

  // Throws InvalidConfig.
  void validate() const;
};

struct UsageCounts {
  std::int64_t success = 0;
  std::int64_t used = 0;
};

// N_succ / sum(N_succ) + lambda * sqrt(ln(1 + sum(N_used)) / (N_used + 1)).
// The exploitation term is 0 while sum(N_succ) is 0, and ln(1 + .) keeps
// the exploration term finite on a cold store.
double ucb_score(UsageCounts entry, UsageCounts totals, double ucb_lambda);

// 1 / (1 + lambda * (now - last_updated)). Throws InvalidArgument when
// last_updated lies in the future.
double recency_score(Iteration last_updated, Iteration now, double decay_lambda);

struct Warning {
  std::string diagnosis;
  std::string correction;

  bool operator==(const Warning&) const = default;
};

struct GuidanceStep {
  std::string subtask_id;
  std::string label;
  std::string instruction;  // instantiated subtask text
  std::vector<std::string> tips;
  std::vector<Warning> warnings;

  bool operator==(const GuidanceStep&) const = default;
};

struct GuidancePacket {
  GuidanceLevel level = GuidanceLevel::None;
  std::optional<std::string> task_template_id;
  bool matched = false;
  VariableBindings bindings;
  std::vector<GuidanceStep> steps;

  bool operator==(const GuidancePacket&) const = default;
  bool empty() const { return steps.empty(); }

  // Copy reduced to the workflow only.
  GuidancePacket weakened() const;
};

// Retrieval-side statistics, applied by the writer at iteration end.
class UsageLog {
 public:
  void record_workflow(const std::string& template_id, std::vector<std::string> sequence);
  void record_tip(const SkillKey& key, std::string content);
  bool empty() const { return workflows_.empty() && tips_.empty(); }
  std::size_t size() const { return workflows_.size() + tips_.size(); }
  // Increments used_count of every recorded entry still present.
  void apply(ExperienceStore& store) const;
  void clear();

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> workflows_;
  std::vector<std::pair<SkillKey, std::string>> tips_;
};

// Read-only view of a store plus the indexes retrieval needs. Built once per
// iteration; safe for concurrent readers.
class MemorySnapshot {
 public:
  explicit MemorySnapshot(const ExperienceStore& store,
                          const EmbeddingProvider& provider = default_embedder());

  const ExperienceStore& store() const { return store_; }
  const EmbeddingProvider& provider() const { return provider_; }
  const VectorIndex& template_index() const { return templates_; }
  // Nearest skill entry to `text` by cosine over skill labels; nullptr when
  // nothing shares a token with it.
  const SkillEntry* nearest_skill(std::string_view text) const;

 private:
  const ExperienceStore& store_;
  const EmbeddingProvider& provider_;
  VectorIndex templates_;
  VectorIndex skills_;
  std::map<std::string, SkillKey> skill_ids_;
};

struct MatchCandidate {
  const TaskTemplate* task = nullptr;
  double score = 0.0;
};

struct MatchRequest {
  std::string instruction;
  std::vector<MatchCandidate> candidates;  // descending score
  double match_threshold = 0.80;
};

struct MatchDecision {
  bool matched = false;
  std::string template_id;
  VariableBindings bindings;
};

class MatchBackend {
 public:
  virtual ~MatchBackend() = default;
  virtual MatchDecision decide(const MatchRequest& request) const = 0;
};

// Accepts the first candidate whose literal skeleton aligns with the
// instruction (extract_bindings succeeds) and whose skeleton, compared with
// the instruction after masking the bound spans, reaches the cosine
// threshold. Templates made only of placeholders therefore never match.
class RuleMatchBackend final : public MatchBackend {
 public:
  explicit RuleMatchBackend(const EmbeddingProvider& provider = default_embedder())
      : provider_(provider) {}
  MatchDecision decide(const MatchRequest& request) const override;

 private:
  const EmbeddingProvider& provider_;
};

const MatchBackend& default_match_backend();

struct TaskMatch {
  std::string template_id;
  VariableBindings bindings;
  bool matched = false;
};

// Throws EmptyMemory when the store holds no templates.
TaskMatch match_task(const MemorySnapshot& snapshot, std::string_view instruction,
                     const RetrievalConfig& cfg,
                     const MatchBackend& backend = default_match_backend());

// Index of the UCB argmax; ties go to the earliest entry. When `usage` is
// given the winner's use is recorded there. Throws InvalidArgument when
// `entries` is empty.
std::size_t select_best_workflow(std::span<const WorkflowEntry> entries,
                                 const RetrievalConfig& cfg, UsageLog* usage = nullptr);

// Level None returns an empty packet without reading the store. A template
// with no recorded workflow falls back to its declared subtask order.
GuidancePacket retrieve_guidance(const MemorySnapshot& snapshot, std::string_view instruction,
                                 GuidanceLevel level, Iteration now,
                                 const RetrievalConfig& cfg,
                                 const MatchBackend& backend = default_match_backend(),
                                 UsageLog* usage = nullptr);

// Human-readable rendering used by the CLI.
std::string format_packet(const GuidancePacket& packet);

}  // namespace expmem
