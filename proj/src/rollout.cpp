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

#include "expmem/rollout.hpp"

#include <cmath>
#include <regex>

#include "expmem/error.hpp"

namespace expmem {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream RngStream::for_slot(std::uint64_t seed, std::uint64_t iteration, std::uint64_t task,
                              std::uint64_t slot) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ iteration);
  h = splitmix64(h ^ task);
  h = splitmix64(h ^ slot);
  return RngStream(h);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::sample(std::span<const double> probabilities) {
  if (probabilities.empty()) throw InvalidArgument("sample from an empty distribution");
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  return probabilities.size() - 1;
}

std::set<std::string> guided_labels(const GuidancePacket& packet) {
  static const std::regex tap("Tap '([^']+)'");
  std::set<std::string> out;
  auto scan = [&](const std::string& text) {
    for (std::sregex_iterator it(text.begin(), text.end(), tap), end; it != end; ++it) {
      out.insert((*it)[1].str());
    }
  };
  for (const auto& step : packet.steps) {
    scan(step.instruction);
    for (const auto& tip : step.tips) scan(tip);
    for (const auto& w : step.warnings) scan(w.correction);
  }
  return out;
}

double GuidedPolicy::bonus_for(GuidanceLevel level) const {
  switch (level) {
    case GuidanceLevel::Strong:
      return bonus_strong;
    case GuidanceLevel::Weak:
      return bonus_weak;
    case GuidanceLevel::None:
      return 0.0;
  }
  return 0.0;
}

std::vector<double> GuidedPolicy::bonus_vector(const Screen& screen, GuidanceLevel level,
                                               const std::set<std::string>& labels) const {
  const double b = bonus_for(level);
  if (b == 0.0 || labels.empty()) return {};
  std::vector<double> out(screen.actions.size(), 0.0);
  bool any = false;
  for (std::size_t a = 0; a < screen.actions.size(); ++a) {
    if (labels.count(screen.actions[a].label)) {
      out[a] = b;
      any = true;
    }
  }
  if (!any) out.clear();
  return out;
}

std::string action_text(const std::string& label) { return "Tap '" + label + "'"; }

Trajectory rollout(const GuidedPolicy& policy, const SimWorld& world, const SimTask& task,
                   const GuidancePacket& packet, RngStream& rng) {
  if (!policy.base) throw InvalidArgument("rollout without a base policy");
  Trajectory traj;
  traj.task_template_id = task.id();
  traj.guidance_level = packet.level;
  const auto labels = guided_labels(packet);
  const auto& screens = world.app.screens;

  std::size_t at = task.start_screen;
  std::size_t next_state = 0;
  for (int t = 0; t < task.horizon; ++t) {
    const Screen& screen = screens[at];
    if (screen.actions.empty()) break;
    TrajectoryStep step;
    step.screen = at;
    step.screen_id = screen.id;
    step.bonus = policy.bonus_vector(screen, packet.level, labels);
    const auto lp = policy.base->log_probabilities(at, step.bonus);
    std::vector<double> p(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) p[i] = std::exp(lp[i]);
    step.action = rng.sample(p);
    traj.behavior_logprob += lp[step.action];

    const Action& action = screen.actions[step.action];
    step.action_description = action_text(action.label);
    if (next_state < task.predicates.size()) {
      const StatePredicate& pred = task.predicates[next_state];
      if (pred.screen == at && pred.label == action.label) {
        step.fired_state = pred.state_id;
        traj.completed_states.insert(pred.state_id);
        ++next_state;
      }
    }
    std::string ui;
    if (step.fired_state) {
      const auto* state = task.task_template.find_state(*step.fired_state);
      ui = task.task_template.state_text(*state, task.bindings) + ". ";
    }
    at = action.target;
    ui += "Now on '" + screens[at].title + "'.";
    step.ui_description = std::move(ui);
    traj.steps.push_back(std::move(step));
    if (next_state == task.predicates.size()) break;
  }
  traj.r_outcome = !task.predicates.empty() && next_state == task.predicates.size() ? 1 : 0;
  return traj;
}

ExpertHint make_expert_hint(const SimWorld& world) {
  return [&world](const std::string& task_id, const std::string& screen_id) {
    return expert_label(world, task_id, screen_id);
  };
}

std::vector<double> eval_policy(const GuidedPolicy& policy, const SimWorld& world,
                                const EvalOptions& options) {
  if (options.n_episodes < 1) throw InvalidArgument("eval_policy: n_episodes must be >= 1");
  if (options.level != GuidanceLevel::None && !options.store) {
    throw InvalidArgument("eval_policy: guided evaluation needs a store");
  }
  std::optional<MemorySnapshot> snapshot;
  if (options.store) snapshot.emplace(*options.store);

  std::vector<double> rates;
  for (std::size_t t = 0; t < world.tasks.size(); ++t) {
    const SimTask& task = world.tasks[t];
    GuidancePacket packet;
    if (options.level != GuidanceLevel::None) {
      packet = retrieve_guidance(*snapshot, task.instruction(), options.level, options.now,
                                 options.retrieval);
    }
    int wins = 0;
    for (int e = 0; e < options.n_episodes; ++e) {
      RngStream rng = RngStream::for_slot(options.seed, static_cast<std::uint64_t>(e), t, 0);
      wins += rollout(policy, world, task, packet, rng).r_outcome;
    }
    rates.push_back(static_cast<double>(wins) / options.n_episodes);
  }
  return rates;
}

}  // namespace expmem
