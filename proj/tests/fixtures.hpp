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

// Shared test fixtures.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "expmem/memory.hpp"
#include "expmem/policy.hpp"
#include "expmem/store_io.hpp"

namespace expmem::testing {

// The Markor rename task in the published hierarchical-memory layout.
inline const char* kMarkorRenameJson = R"json([
  {
    "task_id": "AutoGenerated_Task_75",
    "package_name": ["net.gsantner.markor"],
    "task_template": {
      "content": "Rename file {{current_filename}} to {{new_filename}} in Markor.",
      "parameter_config": {
        "fixed_parameters": {
          "app_package": "net.gsantner.markor",
          "rename_icon_name": "A",
          "confirm_button_name": "OK"
        },
        "variable_parameters": ["current_filename", "new_filename"]
      }
    },
    "essential_states_template": {
      "S1": {
        "content": "File '{{current_filename}}' is selected with context options visible.",
        "variable_mapping": { "current_filename": "current_filename" }
      },
      "S2": { "content": "Rename dialog is active." },
      "S3": {
        "content": "File is renamed to '{{new_filename}}'.",
        "variable_mapping": { "new_filename": "new_filename" }
      }
    },
    "subtask_template": {
      "T1": {
        "subtask_label": "Select Note via Long Press",
        "content": "Long press the file named '{{current_filename}}'."
      },
      "T2": {
        "subtask_label": "Tap Rename Icon",
        "content": "Tap the '{{icon_name}}' icon to open rename options."
      },
      "T3": {
        "subtask_label": "Enter Text and Confirm",
        "content": "Enter '{{new_filename}}' and tap '{{button_name}}' to confirm."
      }
    }
  }
])json";

inline TaskTemplate markor_template() { return parse_task_templates(kMarkorRenameJson).at(0); }

inline ExperienceStore markor_store() {
  ExperienceStore store;
  store.add_template(markor_template());
  return store;
}

inline const char* kMarkorInstruction = "Rename file notes.md to todo.md in Markor.";

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("expmem_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random lowercase-alphanumeric word of length in [lo, hi].
inline std::string random_word(std::mt19937_64& rng, int lo = 3, int hi = 8) {
  static const char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  const int n = lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(kAlphabet[rng() % 36]);
  return s;
}

// A small random tabular problem: reference, behaviour and current tables
// plus one group of trajectories with random guidance bonuses.
struct RandomProblem {
  PolicyTable ref;
  PolicyTable old;
  PolicyTable theta;
  GroupBatch batch;
};

inline RandomProblem random_problem(std::mt19937_64& rng, double spread = 0.3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n_screens = 3 + rng() % 3;
  std::vector<std::size_t> counts;
  for (std::size_t s = 0; s < n_screens; ++s) counts.push_back(2 + rng() % 3);
  RandomProblem p{PolicyTable(counts), PolicyTable(counts), PolicyTable(counts), {}};
  for (std::size_t s = 0; s < n_screens; ++s) {
    for (std::size_t a = 0; a < counts[s]; ++a) {
      p.ref.at(s, a) = u(rng);
      p.old.at(s, a) = u(rng);
      p.theta.at(s, a) = p.old.at(s, a) + spread * u(rng);
    }
  }
  const std::size_t g = 2 + rng() % 4;
  for (std::size_t i = 0; i < g; ++i) {
    Trajectory t;
    const std::size_t len = 1 + rng() % 4;
    for (std::size_t k = 0; k < len; ++k) {
      TrajectoryStep step;
      step.screen = rng() % n_screens;
      step.action = rng() % counts[step.screen];
      if (rng() % 2) {
        step.bonus.assign(counts[step.screen], 0.0);
        step.bonus[rng() % counts[step.screen]] = 2.0;
      }
      t.steps.push_back(step);
    }
    t.behavior_logprob = trajectory_logprob(p.old, t);
    p.batch.trajectories.push_back(t);
    p.batch.advantages.push_back(u(rng));
  }
  return p;
}

// Largest relative difference between the analytic gradient and central
// differences with step h. Entries where both are below `floor` in magnitude
// are compared against `floor`.
inline double gradient_check(const RandomProblem& p, const RewardConfig& cfg, double h = 1e-5,
                             double floor = 1e-8) {
  const std::vector<double> analytic = grpo_gradient(p.batch, p.theta, p.ref, cfg).flatten();
  std::vector<double> x = p.theta.flatten();
  PolicyTable probe = p.theta;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    probe.assign_flat(x);
    const double up = grpo_objective(p.batch, probe, p.ref, cfg);
    x[i] = keep - h;
    probe.assign_flat(x);
    const double down = grpo_objective(p.batch, probe, p.ref, cfg);
    x[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

// True when every trajectory's ratio sits at least `margin` away from both
// clip boundaries, so the objective is smooth around theta.
inline bool away_from_kinks(const RandomProblem& p, const RewardConfig& cfg,
                            double margin = 1e-3) {
  for (const auto& t : p.batch.trajectories) {
    const double r = std::exp(trajectory_logprob(p.theta, t) - t.behavior_logprob);
    if (std::abs(r - (1.0 + cfg.clip_delta)) < margin) return false;
    if (std::abs(r - (1.0 - cfg.clip_delta)) < margin) return false;
  }
  return true;
}

}  // namespace expmem::testing
