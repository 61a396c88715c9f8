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

#include "expmem/evolution.hpp"

#include <algorithm>

#include "expmem/error.hpp"

namespace expmem {

void EvolutionConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidConfig("evolution.gamma must lie in (0, 1)");
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) {
    throw InvalidConfig("evolution.dedup_threshold must lie in (0, 1]");
  }
}

TaskStats update_ema(TaskStats stats, double outcome_mean, double gamma) {
  if (!(outcome_mean >= 0.0 && outcome_mean <= 1.0)) {
    throw InvalidArgument("update_ema: outcome mean outside [0, 1]");
  }
  stats.ema_success = std::clamp(gamma * stats.ema_success + (1.0 - gamma) * outcome_mean, 0.0, 1.0);
  ++stats.group_count;
  return stats;
}

double ema_input(std::span<const Trajectory> group, EmaSource source) {
  auto mean_of = [&](bool none_only) {
    int n = 0;
    int wins = 0;
    for (const auto& t : group) {
      if (none_only && t.guidance_level != GuidanceLevel::None) continue;
      ++n;
      wins += t.r_outcome;
    }
    return std::make_pair(n, n ? static_cast<double>(wins) / n : 0.0);
  };
  if (source == EmaSource::NoneOnly) {
    auto [n, m] = mean_of(true);
    if (n > 0) return m;
  }
  return mean_of(false).second;
}

std::string_view to_string(SubtaskStatus status) {
  switch (status) {
    case SubtaskStatus::Completed:
      return "completed";
    case SubtaskStatus::FirstFailed:
      return "first_failed";
    case SubtaskStatus::NotReached:
      return "not_reached";
  }
  return "not_reached";
}

bool RawExperience::empty() const {
  return success_plans.empty() && !failure_diagnosis && !workflow_sequence;
}

namespace {

// States owned by subtask j: [first[j], first[j + 1]).
std::vector<std::size_t> state_partition(const TaskTemplate& task) {
  const std::size_t ns = task.essential_states.size();
  const std::size_t nt = task.subtasks.size();
  std::vector<std::size_t> first(nt + 1, ns);
  for (std::size_t j = 0; j <= nt; ++j) first[j] = nt ? (j * ns) / nt : ns;
  return first;
}

}  // namespace

std::vector<SubtaskOutcome> subtask_statuses(const TaskTemplate& task,
                                             const std::set<std::string>& completed,
                                             bool attempted) {
  const auto first = state_partition(task);
  std::vector<SubtaskOutcome> out;
  bool failed = !attempted;
  for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
    SubtaskOutcome o{task.subtasks[j].subtask_id, SubtaskStatus::NotReached};
    if (!failed) {
      bool done = true;
      for (std::size_t k = first[j]; k < first[j + 1]; ++k) {
        done = done && completed.count(task.essential_states[k].state_id) > 0;
      }
      if (done) {
        o.status = SubtaskStatus::Completed;
      } else {
        o.status = SubtaskStatus::FirstFailed;
        failed = true;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

ExtractedTexts TraceExtractionBackend::extract(const ExtractionRequest& req) const {
  const Trajectory& traj = *req.trajectory;
  const TaskTemplate& task = *req.task;
  const auto& statuses = *req.statuses;
  const auto first = state_partition(task);

  // Step index at which each subtask's last state fired.
  std::vector<std::optional<std::size_t>> boundary(task.subtasks.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& fired = traj.steps[i].fired_state;
    if (!fired) continue;
    for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
      if (first[j + 1] > first[j] &&
          task.essential_states[first[j + 1] - 1].state_id == *fired) {
        boundary[j] = i;
      }
    }
  }

  ExtractedTexts out;
  std::size_t start = 0;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < statuses.size(); ++j) {
    const SubtaskTemplate& sub = task.subtasks[j];
    if (statuses[j].status == SubtaskStatus::Completed) {
      labels.push_back(sub.label);
      if (!boundary[j] || *boundary[j] < start) continue;
      std::string plan;
      for (std::size_t i = start; i <= *boundary[j]; ++i) {
        if (!plan.empty()) plan += "; ";
        plan += traj.steps[i].action_description;
      }
      if (!plan.empty()) out.plans.emplace_back(sub.subtask_id, std::move(plan));
      start = *boundary[j] + 1;
    } else if (statuses[j].status == SubtaskStatus::FirstFailed) {
      FailureDiagnosis d;
      d.subtask_id = sub.subtask_id;
      if (start >= traj.steps.size()) {
        d.root_cause = "Ran out of steps before starting '" + sub.label + "'.";
        d.correction = "Move on to '" + sub.label + "' without detours.";
      } else {
        const TrajectoryStep& last = traj.steps.back();
        d.root_cause = "While doing '" + sub.label + "', " + last.action_description +
                       " led to: " + last.ui_description;
        std::optional<std::string> expected;
        if (hint_) expected = hint_(task.task_id, last.screen_id);
        if (expected) {
          d.correction = "Tap '" + *expected + "' instead.";
        } else {
          d.correction = "Avoid repeating the last action while doing '" + sub.label + "'.";
        }
      }
      out.diagnosis = std::move(d);
    }
  }
  if (traj.r_outcome == 1) {
    out.rationale = "Completed by ";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i) out.rationale += " -> ";
      out.rationale += labels[i];
    }
    out.rationale += " in " + std::to_string(traj.steps.size()) + " steps.";
  }
  return out;
}

RawExperience extract_experience(const Trajectory& trajectory, const TaskTemplate& task,
                                 const VariableBindings& bindings,
                                 const std::set<std::string>& completed,
                                 const ExtractionBackend& backend) {
  RawExperience raw;
  raw.task_template_id = task.task_id;
  raw.bindings = bindings;
  raw.outcome = trajectory.r_outcome;
  raw.step_count = static_cast<int>(trajectory.steps.size());
  const bool attempted = !trajectory.steps.empty();
  raw.subtask_outcomes = subtask_statuses(task, completed, attempted);
  if (!attempted) return raw;

  ExtractionRequest req{&trajectory, &task, &bindings, &raw.subtask_outcomes};
  ExtractedTexts texts = backend.extract(req);
  raw.success_plans = std::move(texts.plans);
  if (trajectory.r_outcome == 0) raw.failure_diagnosis = std::move(texts.diagnosis);
  if (trajectory.r_outcome == 1) {
    std::vector<std::string> seq;
    for (const auto& o : raw.subtask_outcomes) {
      if (o.status == SubtaskStatus::Completed) seq.push_back(o.subtask_id);
    }
    raw.workflow_sequence = std::move(seq);
    raw.rationale = std::move(texts.rationale);
  }
  return raw;
}

RawExperience BindingAbstractionBackend::abstract(const RawExperience& raw) const {
  RawExperience out = raw;
  auto abs = [&](std::string& s) { s = abstract_text(s, raw.bindings); };
  for (auto& [sid, plan] : out.success_plans) abs(plan);
  if (out.failure_diagnosis) {
    abs(out.failure_diagnosis->root_cause);
    abs(out.failure_diagnosis->correction);
  }
  abs(out.rationale);
  return out;
}

const AbstractionBackend& default_abstraction_backend() {
  static const BindingAbstractionBackend instance;
  return instance;
}

RawExperience abstract_experience(const RawExperience& raw, const AbstractionBackend& backend) {
  return backend.abstract(raw);
}

std::optional<std::size_t> dedup_lookup(std::span<const std::string> items,
                                        const std::string& candidate, double threshold,
                                        const EmbeddingProvider& provider) {
  if (items.empty()) return std::nullopt;
  const EmbeddingVector c = provider.embed(candidate);
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double sim = cosine(provider.embed(items[i]), c);
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  if (best_sim >= threshold) return best;
  return std::nullopt;
}

namespace {

template <typename Item>
std::vector<std::string> contents(const std::vector<Item>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.content);
  return out;
}

SkillEntry& skill_for(ExperienceStore& store, SkillKey key) {
  auto it = store.skills.find(key);
  if (it == store.skills.end()) {
    SkillEntry entry;
    entry.key = key;
    it = store.skills.emplace(std::move(key), std::move(entry)).first;
  }
  return it->second;
}

}  // namespace

MergeSummary merge_experience(ExperienceStore& store, const RawExperience& abstracted,
                              Iteration now, const EvolutionConfig& cfg, double ucb_lambda,
                              const EmbeddingProvider& provider) {
  MergeSummary summary;
  if (abstracted.empty()) return summary;
  auto tt = store.task_templates.find(abstracted.task_template_id);
  if (tt == store.task_templates.end()) {
    throw InvalidArgument("merge_experience: unknown template '" +
                          abstracted.task_template_id + "'");
  }
  const TaskTemplate& task = tt->second;
  const std::string package = task.primary_package();

  for (const auto& [sid, plan] : abstracted.success_plans) {
    const SubtaskTemplate* sub = task.find_subtask(sid);
    if (!sub || plan.empty()) continue;
    SkillEntry& entry = skill_for(store, {package, sub->label});
    const auto texts = contents(entry.plan_summaries);
    if (auto hit = dedup_lookup(texts, plan, cfg.dedup_threshold, provider)) {
      ExperienceItem& item = entry.plan_summaries[*hit];
      ++item.success_count;
      item.last_updated = now;
      if (plan.size() > item.content.size()) item.content = plan;
      ++summary.plans_merged;
    } else {
      entry.plan_summaries.push_back({plan, 1, 0, now});
      ++summary.plans_added;
    }
  }

  if (abstracted.failure_diagnosis) {
    const FailureDiagnosis& d = *abstracted.failure_diagnosis;
    const SubtaskTemplate* sub = task.find_subtask(d.subtask_id);
    if (sub && !d.root_cause.empty() && !d.correction.empty()) {
      SkillEntry& entry = skill_for(store, {package, sub->label});
      const auto texts = contents(entry.failure_diagnoses);
      if (auto hit = dedup_lookup(texts, d.root_cause, cfg.dedup_threshold, provider)) {
        DiagnosisItem& item = entry.failure_diagnoses[*hit];
        item.last_updated = now;
        if (d.root_cause.size() > item.content.size()) {
          item.content = d.root_cause;
          item.correction_guideline = d.correction;
        }
        ++summary.diagnoses_merged;
      } else {
        entry.failure_diagnoses.push_back({d.root_cause, d.correction, now});
        ++summary.diagnoses_added;
      }
    }
  }

  if (abstracted.outcome == 1 && abstracted.workflow_sequence &&
      !abstracted.workflow_sequence->empty()) {
    auto& list = store.workflows[task.task_id];
    const auto& seq = *abstracted.workflow_sequence;
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const WorkflowEntry& w) { return w.subtask_sequence == seq; });
    if (it != list.end()) {
      const double n = static_cast<double>(it->success_count);
      it->avg_steps = (it->avg_steps * n + abstracted.step_count) / (n + 1.0);
      ++it->success_count;
      it->last_updated = now;
      if (abstracted.rationale.size() > it->rationale.size()) it->rationale = abstracted.rationale;
      summary.workflow_merged = true;
    } else {
      list.push_back({task.task_id, seq, abstracted.rationale, 1, 0,
                      static_cast<double>(abstracted.step_count), now});
      summary.workflow_added = true;
    }
    UsageCounts totals;
    for (const auto& w : list) {
      totals.success += w.success_count;
      totals.used += w.used_count;
    }
    std::vector<std::pair<double, WorkflowEntry>> scored;
    for (auto& w : list) {
      scored.emplace_back(ucb_score({w.success_count, w.used_count}, totals, ucb_lambda),
                          std::move(w));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    list.clear();
    for (auto& [s, w] : scored) list.push_back(std::move(w));
  }

  if (summary.changed()) store.touch();
  return summary;
}

}  // namespace expmem
