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

// Hierarchical experience memory: task templates, high-level workflows,
// subtask skills (plan summaries and failure diagnoses) and per-task
// success statistics.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "expmem/template.hpp"

namespace expmem {

// Training-iteration index. Never wall-clock time.
using Iteration = std::int64_t;

struct EssentialStateTemplate {
  std::string state_id;
  std::string content;
  // placeholder -> task variable name
  std::map<std::string, std::string> variable_mapping;

  bool operator==(const EssentialStateTemplate&) const = default;
};

struct SubtaskTemplate {
  std::string subtask_id;
  std::string label;
  std::string content;

  bool operator==(const SubtaskTemplate&) const = default;
};

struct TaskTemplate {
  std::string task_id;
  std::vector<std::string> package_names;
  std::string content;
  std::map<std::string, std::string> fixed_parameters;
  std::vector<std::string> variable_parameters;
  // Declared order is significant for both lists.
  std::vector<EssentialStateTemplate> essential_states;
  std::vector<SubtaskTemplate> subtasks;

  bool operator==(const TaskTemplate&) const = default;

  const SubtaskTemplate* find_subtask(const std::string& id) const;
  const EssentialStateTemplate* find_state(const std::string& id) const;
  std::vector<std::string> state_ids() const;

  // Package used to key subtask skills; empty when none is declared.
  std::string primary_package() const;

  // Bindings under which `text` (a subtask or state template) can be
  // instantiated. A placeholder resolves, in order, through `mapping`, the
  // task variables, a fixed parameter of the same name, and finally the one
  // fixed parameter whose name ends in "_<placeholder>" (so `icon_name`
  // reaches `rename_icon_name`). Unresolvable placeholders are left out and
  // surface as UnboundPlaceholder on instantiation.
  VariableBindings parameters_for(
      const std::string& text, const VariableBindings& variables,
      const std::map<std::string, std::string>& mapping = {}) const;

  // Instantiated task instruction.
  std::string instruction(const VariableBindings& variables) const;
  std::string subtask_text(const SubtaskTemplate& subtask,
                           const VariableBindings& variables) const;
  std::string state_text(const EssentialStateTemplate& state,
                         const VariableBindings& variables) const;

  // Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

struct WorkflowEntry {
  std::string task_template_id;
  std::vector<std::string> subtask_sequence;
  std::string rationale;
  std::int64_t success_count = 0;
  std::int64_t used_count = 0;
  double avg_steps = 0.0;
  Iteration last_updated = 0;

  bool operator==(const WorkflowEntry&) const = default;
};

struct ExperienceItem {
  std::string content;
  std::int64_t success_count = 0;
  std::int64_t used_count = 0;
  Iteration last_updated = 0;

  bool operator==(const ExperienceItem&) const = default;
};

struct DiagnosisItem {
  std::string content;  // root cause
  std::string correction_guideline;
  Iteration last_updated = 0;

  bool operator==(const DiagnosisItem&) const = default;
};

struct SkillKey {
  std::string package;
  std::string label;

  auto operator<=>(const SkillKey&) const = default;
  bool operator==(const SkillKey&) const = default;
};

struct SkillEntry {
  SkillKey key;
  std::vector<ExperienceItem> plan_summaries;
  std::vector<DiagnosisItem> failure_diagnoses;

  bool operator==(const SkillEntry&) const = default;
};

struct TaskStats {
  double ema_success = 0.0;
  std::int64_t group_count = 0;

  bool operator==(const TaskStats&) const = default;
};

class ExperienceStore {
 public:
  std::map<std::string, TaskTemplate> task_templates;
  std::map<std::string, std::vector<WorkflowEntry>> workflows;
  std::map<SkillKey, SkillEntry> skills;
  std::map<std::string, TaskStats> task_stats;
  Iteration iteration_clock = 0;

  // Structural equality; the revision counter is not part of the value.
  bool operator==(const ExperienceStore& other) const;

  void add_template(TaskTemplate t);

  // Bumped by every writer-side mutation; lets callers assert that a phase
  // left the store untouched. Not persisted.
  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

  // Throws InvalidArgument when a cross-reference does not resolve.
  void validate() const;

 private:
  std::uint64_t revision_ = 0;
};

}  // namespace expmem
