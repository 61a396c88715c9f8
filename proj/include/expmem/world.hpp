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

// Deterministic simulated GUI world: screens joined by labelled actions and
// multi-step tasks whose essential states fire on specific expert actions.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "expmem/memory.hpp"
#include "expmem/template.hpp"

namespace expmem {

struct Action {
  std::string label;
  std::size_t target = 0;

  bool operator==(const Action&) const = default;
};

struct Screen {
  std::string id;
  std::string title;
  std::vector<Action> actions;  // empty: the rollout stops here

  bool operator==(const Screen&) const = default;
};

struct PathEdge {
  std::size_t screen = 0;
  std::size_t action = 0;

  bool operator==(const PathEdge&) const = default;
};

struct AppWorld {
  std::vector<Screen> screens;
  std::map<std::string, std::vector<PathEdge>> expert_paths;  // by task id

  bool operator==(const AppWorld&) const = default;

  std::optional<std::size_t> find_screen(const std::string& id) const;
  std::vector<std::size_t> action_counts() const;
  std::vector<std::string> screen_ids() const;
};

// Fires when `label` is taken on `screen`.
struct StatePredicate {
  std::string state_id;
  std::size_t screen = 0;
  std::string label;

  bool operator==(const StatePredicate&) const = default;
};

// Expert-path slice [begin, end) covering one subtask.
struct SubtaskSegment {
  std::string subtask_id;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SubtaskSegment&) const = default;
};

inline constexpr int kDefaultHorizon = 12;

struct SimTask {
  TaskTemplate task_template;
  VariableBindings bindings;
  std::size_t start_screen = 0;
  std::vector<StatePredicate> predicates;  // template state order
  int horizon = kDefaultHorizon;
  std::vector<SubtaskSegment> segments;

  bool operator==(const SimTask&) const = default;

  const std::string& id() const { return task_template.task_id; }
  std::string instruction() const { return task_template.instruction(bindings); }
};

struct SimWorld {
  AppWorld app;
  std::vector<SimTask> tasks;

  bool operator==(const SimWorld&) const = default;

  const SimTask& task(const std::string& id) const;
};

// Tasks of 3-4 subtasks and 6-10 expert steps drawn from a fixed per-app
// subtask library; every on-path screen carries 2-4 distractor actions that
// lead to dead ends. Same seed, same world.
SimWorld build_world(std::uint64_t seed, int n_tasks);

// One task on a bare chain of `path_length` screens with `branching`
// actions each (one correct, the rest dead ends), split into `n_subtasks`
// near-equal segments.
SimWorld make_chain_world(int path_length, int branching, int n_subtasks = 3,
                          int horizon = kDefaultHorizon);

// Throws InvalidArgument: expert paths must be valid edge by edge from the
// start screen, predicates must fire in state order along them, segments
// must tile them, and the horizon must cover them.
void validate_world(const SimWorld& world);

// Label of the expert action on `screen_id` for the task, if on its path.
std::optional<std::string> expert_label(const SimWorld& world, const std::string& task_id,
                                        const std::string& screen_id);

// Unordered task pairs sharing at least one (package, subtask label) skill.
int shared_label_pairs(const SimWorld& world);

nlohmann::json world_to_json(const SimWorld& world);
// Throws IoFailure, including for documents that fail validate_world.
SimWorld world_from_json(const nlohmann::json& j);
void save_world(const SimWorld& world, const std::filesystem::path& path);
SimWorld load_world(const std::filesystem::path& path);

}  // namespace expmem
