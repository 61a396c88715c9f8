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

#include "expmem/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "expmem/error.hpp"

namespace expmem {

std::string_view to_string(GuidanceLevel level) {
  switch (level) {
    case GuidanceLevel::Strong:
      return "strong";
    case GuidanceLevel::Weak:
      return "weak";
    case GuidanceLevel::None:
      return "none";
  }
  return "none";
}

GuidanceLevel parse_guidance_level(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "strong") return GuidanceLevel::Strong;
  if (lower == "weak") return GuidanceLevel::Weak;
  if (lower == "none") return GuidanceLevel::None;
  throw InvalidArgument("unknown guidance level '" + std::string(text) + "'");
}

void RetrievalConfig::validate() const {
  if (!(ucb_lambda > 0.0)) throw InvalidConfig("retrieval.ucb_lambda must be positive");
  if (!(decay_lambda > 0.0)) throw InvalidConfig("retrieval.decay_lambda must be positive");
  if (top_k < 1) throw InvalidConfig("retrieval.top_k must be >= 1");
  if (!(match_threshold > 0.0 && match_threshold <= 1.0)) {
    throw InvalidConfig("retrieval.match_threshold must lie in (0, 1]");
  }
  if (tips_per_step < 1) throw InvalidConfig("retrieval.tips_per_step must be >= 1");
  if (warnings_per_step < 1) throw InvalidConfig("retrieval.warnings_per_step must be >= 1");
}

double ucb_score(UsageCounts entry, UsageCounts totals, double ucb_lambda) {
  const double exploit = totals.success > 0
                             ? static_cast<double>(entry.success) / static_cast<double>(totals.success)
                             : 0.0;
  const double explore = std::sqrt(std::log1p(static_cast<double>(totals.used)) /
                                   (static_cast<double>(entry.used) + 1.0));
  return exploit + ucb_lambda * explore;
}

double recency_score(Iteration last_updated, Iteration now, double decay_lambda) {
  if (now < last_updated) {
    throw InvalidArgument("recency_score: last_updated " + std::to_string(last_updated) +
                          " is after now " + std::to_string(now));
  }
  return 1.0 / (1.0 + decay_lambda * static_cast<double>(now - last_updated));
}

GuidancePacket GuidancePacket::weakened() const {
  GuidancePacket p = *this;
  if (p.level == GuidanceLevel::Strong) p.level = GuidanceLevel::Weak;
  for (auto& s : p.steps) {
    s.tips.clear();
    s.warnings.clear();
  }
  return p;
}

void UsageLog::record_workflow(const std::string& template_id,
                               std::vector<std::string> sequence) {
  workflows_.emplace_back(template_id, std::move(sequence));
}

void UsageLog::record_tip(const SkillKey& key, std::string content) {
  tips_.emplace_back(key, std::move(content));
}

void UsageLog::apply(ExperienceStore& store) const {
  if (empty()) return;
  for (const auto& [tid, seq] : workflows_) {
    auto it = store.workflows.find(tid);
    if (it == store.workflows.end()) continue;
    for (auto& w : it->second) {
      if (w.subtask_sequence == seq) {
        ++w.used_count;
        break;
      }
    }
  }
  for (const auto& [key, content] : tips_) {
    auto it = store.skills.find(key);
    if (it == store.skills.end()) continue;
    for (auto& p : it->second.plan_summaries) {
      if (p.content == content) {
        ++p.used_count;
        break;
      }
    }
  }
  store.touch();
}

void UsageLog::clear() {
  workflows_.clear();
  tips_.clear();
}

namespace {

std::string skill_id(const SkillKey& key) { return key.package + "\n" + key.label; }

}  // namespace

MemorySnapshot::MemorySnapshot(const ExperienceStore& store, const EmbeddingProvider& provider)
    : store_(store), provider_(provider) {
  for (const auto& [id, t] : store.task_templates) {
    templates_.add(id, template_skeleton(t.content), provider);
  }
  for (const auto& [key, entry] : store.skills) {
    const std::string id = skill_id(key);
    skills_.add(id, key.label, provider);
    skill_ids_.emplace(id, key);
  }
}

const SkillEntry* MemorySnapshot::nearest_skill(std::string_view text) const {
  if (skills_.empty()) return nullptr;
  const auto best = skills_.topk(provider_.embed(text), 1);
  if (best.empty() || !(best.front().score > 0.0)) return nullptr;
  return &store_.skills.at(skill_ids_.at(best.front().id));
}

MatchDecision RuleMatchBackend::decide(const MatchRequest& request) const {
  for (const auto& cand : request.candidates) {
    auto bindings = extract_bindings(cand.task->content, request.instruction);
    if (!bindings) continue;
    bool fixed_ok = true;
    for (const auto& [name, value] : cand.task->fixed_parameters) {
      auto it = bindings->find(name);
      if (it == bindings->end()) continue;
      fixed_ok = fixed_ok && it->second == value;
      bindings->erase(it);
    }
    if (!fixed_ok) continue;
    VariableBindings masked;
    for (const auto& name : placeholder_names(cand.task->content)) masked[name] = " ";
    const std::string masked_instruction = instantiate_template(cand.task->content, masked);
    const double sim = cosine(provider_.embed(masked_instruction),
                              provider_.embed(template_skeleton(cand.task->content)));
    if (sim >= request.match_threshold) {
      return {true, cand.task->task_id, std::move(*bindings)};
    }
  }
  return {};
}

const MatchBackend& default_match_backend() {
  static const RuleMatchBackend instance;
  return instance;
}

TaskMatch match_task(const MemorySnapshot& snapshot, std::string_view instruction,
                     const RetrievalConfig& cfg, const MatchBackend& backend) {
  const auto& templates = snapshot.store().task_templates;
  if (templates.empty()) throw EmptyMemory();

  MatchRequest request;
  request.instruction = std::string(instruction);
  request.match_threshold = cfg.match_threshold;
  for (const auto& hit :
       snapshot.template_index().topk(snapshot.provider().embed(instruction), cfg.top_k)) {
    request.candidates.push_back({&templates.at(hit.id), hit.score});
  }

  MatchDecision decision = backend.decide(request);
  if (decision.matched && templates.count(decision.template_id)) {
    return {decision.template_id, std::move(decision.bindings), true};
  }
  // Best analogy: highest-scoring candidate, bindings best effort.
  const TaskTemplate& best = *request.candidates.front().task;
  auto bindings = extract_bindings(best.content, instruction);
  return {best.task_id, bindings.value_or(VariableBindings{}), false};
}

std::size_t select_best_workflow(std::span<const WorkflowEntry> entries,
                                 const RetrievalConfig& cfg, UsageLog* usage) {
  if (entries.empty()) throw InvalidArgument("select_best_workflow on an empty list");
  UsageCounts totals;
  for (const auto& w : entries) {
    totals.success += w.success_count;
    totals.used += w.used_count;
  }
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double s =
        ucb_score({entries[i].success_count, entries[i].used_count}, totals, cfg.ucb_lambda);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  if (usage) usage->record_workflow(entries[best].task_template_id, entries[best].subtask_sequence);
  return best;
}

namespace {

template <typename T, typename Score>
std::vector<std::size_t> rank_descending(const std::vector<T>& items, Score score) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) scores.push_back(score(item));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void attach_experience(const MemorySnapshot& snapshot, const TaskTemplate& task,
                       const VariableBindings& bindings, Iteration now,
                       const RetrievalConfig& cfg, GuidanceStep& step, UsageLog* usage) {
  const auto& skills = snapshot.store().skills;
  const SkillEntry* entry = nullptr;
  if (auto it = skills.find({task.primary_package(), step.label}); it != skills.end()) {
    entry = &it->second;
  } else {
    entry = snapshot.nearest_skill(step.instruction);
  }
  if (!entry) return;

  UsageCounts totals;
  for (const auto& p : entry->plan_summaries) {
    totals.success += p.success_count;
    totals.used += p.used_count;
  }
  const auto plans = rank_descending(entry->plan_summaries, [&](const ExperienceItem& p) {
    return ucb_score({p.success_count, p.used_count}, totals, cfg.ucb_lambda);
  });
  for (std::size_t idx : plans) {
    if (static_cast<int>(step.tips.size()) >= cfg.tips_per_step) break;
    const auto& item = entry->plan_summaries[idx];
    try {
      step.tips.push_back(
          instantiate_template(item.content, task.parameters_for(item.content, bindings)));
    } catch (const Error&) {
      continue;  // written for a different parameterization
    }
    if (usage) usage->record_tip(entry->key, item.content);
  }

  const auto diags = rank_descending(entry->failure_diagnoses, [&](const DiagnosisItem& d) {
    return recency_score(d.last_updated, std::max(now, d.last_updated), cfg.decay_lambda);
  });
  for (std::size_t idx : diags) {
    if (static_cast<int>(step.warnings.size()) >= cfg.warnings_per_step) break;
    const auto& d = entry->failure_diagnoses[idx];
    try {
      step.warnings.push_back(
          {instantiate_template(d.content, task.parameters_for(d.content, bindings)),
           instantiate_template(d.correction_guideline,
                                task.parameters_for(d.correction_guideline, bindings))});
    } catch (const Error&) {
      continue;
    }
  }
}

}  // namespace

GuidancePacket retrieve_guidance(const MemorySnapshot& snapshot, std::string_view instruction,
                                 GuidanceLevel level, Iteration now,
                                 const RetrievalConfig& cfg, const MatchBackend& backend,
                                 UsageLog* usage) {
  GuidancePacket packet;
  packet.level = level;
  if (level == GuidanceLevel::None) return packet;

  TaskMatch match;
  try {
    match = match_task(snapshot, instruction, cfg, backend);
  } catch (const EmptyMemory&) {
    return packet;
  }
  const TaskTemplate& task = snapshot.store().task_templates.at(match.template_id);
  packet.task_template_id = match.template_id;
  packet.matched = match.matched;
  packet.bindings = match.bindings;

  std::vector<std::string> sequence;
  const auto wf = snapshot.store().workflows.find(task.task_id);
  if (wf != snapshot.store().workflows.end() && !wf->second.empty()) {
    sequence = wf->second[select_best_workflow(wf->second, cfg, usage)].subtask_sequence;
  } else {
    for (const auto& s : task.subtasks) sequence.push_back(s.subtask_id);
  }

  for (const auto& sid : sequence) {
    const SubtaskTemplate* sub = task.find_subtask(sid);
    if (!sub) continue;
    GuidanceStep step;
    step.subtask_id = sid;
    step.label = sub->label;
    try {
      step.instruction = task.subtask_text(*sub, packet.bindings);
    } catch (const UnboundPlaceholder&) {
      // Analogy matches can leave variables unbound; keep the label only.
      step.instruction = sub->label;
    }
    if (level == GuidanceLevel::Strong) {
      attach_experience(snapshot, task, packet.bindings, now, cfg, step, usage);
    }
    packet.steps.push_back(std::move(step));
  }
  return packet;
}

std::string format_packet(const GuidancePacket& packet) {
  std::ostringstream out;
  out << "level: " << to_string(packet.level) << "\n";
  if (!packet.task_template_id) {
    out << "template: -\n";
    return out.str();
  }
  out << "template: " << *packet.task_template_id << "\n";
  out << "matched: " << (packet.matched ? "true" : "false") << "\n";
  for (const auto& [name, value] : packet.bindings) {
    out << "  " << name << " = " << value << "\n";
  }
  for (std::size_t i = 0; i < packet.steps.size(); ++i) {
    const auto& s = packet.steps[i];
    out << "step " << (i + 1) << " [" << s.subtask_id << "] " << s.label << ": "
        << s.instruction << "\n";
    for (const auto& tip : s.tips) out << "    tip: " << tip << "\n";
    for (const auto& w : s.warnings) {
      out << "    warning: " << w.diagnosis << "\n";
      out << "    correction: " << w.correction << "\n";
    }
  }
  return out.str();
}

}  // namespace expmem
