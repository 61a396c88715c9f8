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

// Self-evolving memory update: EMA statistics, experience extraction,
// parameterization, semantic deduplication and merge into the store.
// Everything here runs on the single writer between iterations.

#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "expmem/embedding.hpp"
#include "expmem/memory.hpp"
#include "expmem/trajectory.hpp"

namespace expmem {

enum class EmaSource {
  NoneOnly,  // mean outcome of the group's unguided rollouts (all if none)
  All,
};

struct EvolutionConfig {
  double gamma = 0.9;
  double dedup_threshold = 0.85;
  EmaSource ema_source = EmaSource::NoneOnly;

  void validate() const;
};

TaskStats update_ema(TaskStats stats, double outcome_mean, double gamma);

// Outcome mean fed to update_ema for one group, per `source`.
double ema_input(std::span<const Trajectory> group, EmaSource source);

enum class SubtaskStatus { Completed, FirstFailed, NotReached };

std::string_view to_string(SubtaskStatus status);

struct SubtaskOutcome {
  std::string subtask_id;
  SubtaskStatus status = SubtaskStatus::NotReached;

  bool operator==(const SubtaskOutcome&) const = default;
};

struct FailureDiagnosis {
  std::string subtask_id;
  std::string root_cause;
  std::string correction;

  bool operator==(const FailureDiagnosis&) const = default;
};

struct RawExperience {
  std::string task_template_id;
  VariableBindings bindings;
  int outcome = 0;
  std::vector<SubtaskOutcome> subtask_outcomes;
  // (subtask_id, plan text) for Completed subtasks, in template order.
  std::vector<std::pair<std::string, std::string>> success_plans;
  std::optional<FailureDiagnosis> failure_diagnosis;
  std::optional<std::vector<std::string>> workflow_sequence;
  std::string rationale;
  int step_count = 0;

  bool operator==(const RawExperience&) const = default;
  // Nothing to merge: no plans, no diagnosis, no workflow.
  bool empty() const;
};

// Statuses from the verified state set: subtasks and states are paired in
// declared order (proportionally when the counts differ); a subtask is
// Completed when all its states are, the first incomplete one of an
// attempted trajectory is FirstFailed, the rest NotReached.
std::vector<SubtaskOutcome> subtask_statuses(const TaskTemplate& task,
                                             const std::set<std::string>& completed,
                                             bool attempted);

struct ExtractionRequest {
  const Trajectory* trajectory = nullptr;
  const TaskTemplate* task = nullptr;
  const VariableBindings* bindings = nullptr;
  const std::vector<SubtaskOutcome>* statuses = nullptr;
};

// Texts for one trajectory: plans for Completed subtasks, a diagnosis for
// the FirstFailed one, and a workflow rationale on success.
struct ExtractedTexts {
  std::vector<std::pair<std::string, std::string>> plans;
  std::optional<FailureDiagnosis> diagnosis;
  std::string rationale;
};

class ExtractionBackend {
 public:
  virtual ~ExtractionBackend() = default;
  // Throws BackendFailure.
  virtual ExtractedTexts extract(const ExtractionRequest& request) const = 0;
};

// Correct action label for a screen, when the caller knows it.
using ExpertHint = std::function<std::optional<std::string>(const std::string& task_id,
                                                            const std::string& screen_id)>;

// Mechanical extraction from the step descriptions. Segments are delimited by
// the simulator's fired-state flags; a plan is the segment's action
// descriptions joined by "; ". The diagnosis names the last action taken;
// with an ExpertHint its correction names the expected action.
class TraceExtractionBackend final : public ExtractionBackend {
 public:
  explicit TraceExtractionBackend(ExpertHint hint = {}) : hint_(std::move(hint)) {}
  ExtractedTexts extract(const ExtractionRequest& request) const override;

 private:
  ExpertHint hint_;
};

// Zero-step trajectories yield all-NotReached and no texts, without calling
// the backend.
RawExperience extract_experience(const Trajectory& trajectory, const TaskTemplate& task,
                                 const VariableBindings& bindings,
                                 const std::set<std::string>& completed,
                                 const ExtractionBackend& backend);

class AbstractionBackend {
 public:
  virtual ~AbstractionBackend() = default;
  virtual RawExperience abstract(const RawExperience& raw) const = 0;
};

// abstract_text over every text with the experience's own bindings.
class BindingAbstractionBackend final : public AbstractionBackend {
 public:
  RawExperience abstract(const RawExperience& raw) const override;
};

const AbstractionBackend& default_abstraction_backend();

RawExperience abstract_experience(const RawExperience& raw,
                                  const AbstractionBackend& backend = default_abstraction_backend());

// Index of the most similar text when that similarity reaches `threshold`;
// ties go to the lowest index.
std::optional<std::size_t> dedup_lookup(std::span<const std::string> items,
                                        const std::string& candidate, double threshold,
                                        const EmbeddingProvider& provider = default_embedder());

struct MergeSummary {
  int plans_added = 0;
  int plans_merged = 0;
  int diagnoses_added = 0;
  int diagnoses_merged = 0;
  bool workflow_added = false;
  bool workflow_merged = false;

  bool changed() const {
    return plans_added || plans_merged || diagnoses_added || diagnoses_merged ||
           workflow_added || workflow_merged;
  }
};

// Writer-only. Plans and diagnoses are deduplicated into the skill keyed by
// (package, subtask label); a hit bumps counts and the timestamp and keeps
// the strictly longer text. Successful workflows are matched by exact
// subtask sequence and the template's list is re-sorted by UCB score.
MergeSummary merge_experience(ExperienceStore& store, const RawExperience& abstracted,
                              Iteration now, const EvolutionConfig& cfg,
                              double ucb_lambda = 1.0,
                              const EmbeddingProvider& provider = default_embedder());

}  // namespace expmem
