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

#include "expmem/memory.hpp"

#include <algorithm>
#include <set>

#include "expmem/error.hpp"

namespace expmem {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

const SubtaskTemplate* TaskTemplate::find_subtask(const std::string& id) const {
  for (const auto& s : subtasks) {
    if (s.subtask_id == id) return &s;
  }
  return nullptr;
}

const EssentialStateTemplate* TaskTemplate::find_state(const std::string& id) const {
  for (const auto& s : essential_states) {
    if (s.state_id == id) return &s;
  }
  return nullptr;
}

std::vector<std::string> TaskTemplate::state_ids() const {
  std::vector<std::string> ids;
  ids.reserve(essential_states.size());
  for (const auto& s : essential_states) ids.push_back(s.state_id);
  return ids;
}

std::string TaskTemplate::primary_package() const {
  return package_names.empty() ? std::string() : package_names.front();
}

VariableBindings TaskTemplate::parameters_for(
    const std::string& text, const VariableBindings& variables,
    const std::map<std::string, std::string>& mapping) const {
  VariableBindings out;
  for (const auto& name : placeholder_names(text)) {
    std::string target = name;
    if (auto it = mapping.find(name); it != mapping.end()) target = it->second;

    if (auto it = variables.find(target); it != variables.end()) {
      out[name] = it->second;
      continue;
    }
    if (auto it = fixed_parameters.find(target); it != fixed_parameters.end()) {
      out[name] = it->second;
      continue;
    }
    const std::string suffix = "_" + name;
    const std::string* unique = nullptr;
    int hits = 0;
    for (const auto& [key, value] : fixed_parameters) {
      if (ends_with(key, suffix)) {
        unique = &value;
        ++hits;
      }
    }
    if (hits == 1) out[name] = *unique;
  }
  return out;
}

std::string TaskTemplate::instruction(const VariableBindings& variables) const {
  return instantiate_template(content, variables, fixed_parameters);
}

std::string TaskTemplate::subtask_text(const SubtaskTemplate& subtask,
                                       const VariableBindings& variables) const {
  return instantiate_template(subtask.content,
                              parameters_for(subtask.content, variables));
}

std::string TaskTemplate::state_text(const EssentialStateTemplate& state,
                                     const VariableBindings& variables) const {
  return instantiate_template(
      state.content, parameters_for(state.content, variables, state.variable_mapping));
}

void TaskTemplate::validate() const {
  auto fail = [&](const std::string& what) {
    throw InvalidArgument("task template '" + task_id + "': " + what);
  };
  if (task_id.empty()) fail("empty task_id");

  std::set<std::string> vars(variable_parameters.begin(), variable_parameters.end());
  if (vars.size() != variable_parameters.size()) fail("duplicate variable parameter");
  for (const auto& v : variable_parameters) {
    if (!is_valid_placeholder_name(v)) fail("invalid variable name '" + v + "'");
    if (fixed_parameters.count(v)) {
      fail("'" + v + "' is both a fixed and a variable parameter");
    }
  }
  for (const auto& name : placeholder_names(content)) {
    if (!vars.count(name) && !fixed_parameters.count(name)) {
      fail("content placeholder '" + name + "' is not a declared parameter");
    }
  }

  VariableBindings probe;
  for (const auto& v : variable_parameters) probe[v] = v;

  std::set<std::string> ids;
  for (const auto& s : essential_states) {
    if (s.state_id.empty() || !ids.insert(s.state_id).second) {
      fail("duplicate or empty state id '" + s.state_id + "'");
    }
    for (const auto& name : placeholder_names(s.content)) {
      auto m = s.variable_mapping.find(name);
      const std::string target = m == s.variable_mapping.end() ? name : m->second;
      if (!vars.count(target) && !fixed_parameters.count(target)) {
        fail("state '" + s.state_id + "' placeholder '" + name + "' is unresolvable");
      }
    }
  }
  ids.clear();
  for (const auto& s : subtasks) {
    if (s.subtask_id.empty() || !ids.insert(s.subtask_id).second) {
      fail("duplicate or empty subtask id '" + s.subtask_id + "'");
    }
    if (s.label.empty()) fail("subtask '" + s.subtask_id + "' has an empty label");
    const auto resolved = parameters_for(s.content, probe);
    for (const auto& name : placeholder_names(s.content)) {
      if (!resolved.count(name)) {
        fail("subtask '" + s.subtask_id + "' placeholder '" + name + "' is unresolvable");
      }
    }
  }
}

bool ExperienceStore::operator==(const ExperienceStore& other) const {
  return task_templates == other.task_templates && workflows == other.workflows &&
         skills == other.skills && task_stats == other.task_stats &&
         iteration_clock == other.iteration_clock;
}

void ExperienceStore::add_template(TaskTemplate t) {
  t.validate();
  const std::string id = t.task_id;
  task_templates[id] = std::move(t);
  task_stats.try_emplace(id);
  touch();
}

void ExperienceStore::validate() const {
  for (const auto& [id, t] : task_templates) {
    if (id != t.task_id) throw InvalidArgument("template key '" + id + "' != task_id");
    t.validate();
  }
  for (const auto& [id, list] : workflows) {
    auto it = task_templates.find(id);
    if (it == task_templates.end()) {
      throw InvalidArgument("workflows reference unknown template '" + id + "'");
    }
    for (const auto& w : list) {
      if (w.task_template_id != id) {
        throw InvalidArgument("workflow filed under '" + id + "' names '" +
                              w.task_template_id + "'");
      }
      for (const auto& sid : w.subtask_sequence) {
        if (!it->second.find_subtask(sid)) {
          throw InvalidArgument("workflow of '" + id + "' names unknown subtask '" + sid + "'");
        }
      }
    }
  }
  for (const auto& [key, entry] : skills) {
    if (!(entry.key == key)) throw InvalidArgument("skill entry key mismatch");
  }
  for (const auto& [id, stats] : task_stats) {
    if (!task_templates.count(id)) {
      throw InvalidArgument("task_stats reference unknown template '" + id + "'");
    }
    if (!(stats.ema_success >= 0.0 && stats.ema_success <= 1.0)) {
      throw InvalidArgument("ema_success out of [0,1] for '" + id + "'");
    }
  }
}

}  // namespace expmem
