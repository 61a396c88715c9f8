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

#include "expmem/trainer.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "expmem/error.hpp"
#include "expmem/rollout.hpp"

namespace expmem {

std::string_view to_string(SamplerKind kind) {
  return kind == SamplerKind::UiMem ? "uimem" : "vanilla";
}

SamplerKind parse_sampler(std::string_view text) {
  if (text == "uimem") return SamplerKind::UiMem;
  if (text == "vanilla") return SamplerKind::Vanilla;
  throw InvalidConfig("unknown sampler '" + std::string(text) + "' (expected uimem or vanilla)");
}

void TrainConfig::validate() const {
  if (iterations < 0) throw InvalidConfig("run.iterations must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidConfig("policy.learning_rate must be positive");
  }
  if (bonus_strong < 0.0 || bonus_weak < 0.0) {
    throw InvalidConfig("policy bonuses must be non-negative");
  }
  curriculum.validate();
  reward.validate();
  retrieval.validate();
  evolution.validate();
}

ExperienceStore initial_store(const SimWorld& world) {
  ExperienceStore store;
  for (const auto& task : world.tasks) store.add_template(task.task_template);
  return store;
}

PolicyTable initial_policy(const SimWorld& world) { return PolicyTable(world.app.action_counts()); }

namespace {

struct TaskRun {
  std::vector<Trajectory> group;
  std::vector<std::set<std::string>> completed;
};

double success_rate(const std::vector<Trajectory>& group, GuidanceLevel level, int* count) {
  int n = 0;
  int wins = 0;
  for (const auto& t : group) {
    if (t.guidance_level != level) continue;
    ++n;
    wins += t.r_outcome;
  }
  *count = n;
  return n ? static_cast<double>(wins) / n : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TrainResult train(const SimWorld& world, const TrainConfig& cfg, const TrainBackends& backends,
                  std::optional<ExperienceStore> store, const IterationHook& hook) {
  cfg.validate();
  validate_world(world);

  TrainResult result;
  result.store = store ? std::move(*store) : initial_store(world);
  for (const auto& task : world.tasks) {
    if (!result.store.task_templates.count(task.id())) result.store.add_template(task.task_template);
  }
  ExperienceStore& st = result.store;
  PolicyTable theta = initial_policy(world);
  const PolicyTable ref = theta;

  const RuleJudge rule_judge(true);
  const TraceExtractionBackend trace(make_expert_hint(world));
  const StateJudge& judge = backends.judge ? *backends.judge : rule_judge;
  const MatchBackend& match = backends.match ? *backends.match : default_match_backend();
  const ExtractionBackend& extraction = backends.extraction ? *backends.extraction : trace;
  const AbstractionBackend& abstraction =
      backends.abstraction ? *backends.abstraction : default_abstraction_backend();
  const bool uimem = cfg.sampler == SamplerKind::UiMem;

  for (int it = 1; it <= cfg.iterations; ++it) {
    UsageLog usage;
    std::vector<TaskRun> runs(world.tasks.size());
    {
      const MemorySnapshot snapshot(st);
      for (std::size_t t = 0; t < world.tasks.size(); ++t) {
        const SimTask& task = world.tasks[t];
        const TaskStats stats = st.task_stats.at(task.id());
        const PolicyTable theta_old = theta;
        const GroupPlan plan =
            uimem ? assign_guidance(stats, snapshot, task.instruction(), cfg.curriculum,
                                    cfg.retrieval, it, match, &usage)
                  : unguided_plan(cfg.curriculum.group_size);

        const GuidedPolicy acting{&theta_old, cfg.bonus_strong, cfg.bonus_weak};
        const auto states = task.task_template.state_ids();
        TaskRun& run = runs[t];
        std::vector<double> rewards;
        for (std::size_t slot = 0; slot < plan.packets.size(); ++slot) {
          RngStream rng = RngStream::for_slot(cfg.seed, static_cast<std::uint64_t>(it), t, slot);
          GuidancePacket packet = plan.packets[slot];
          packet.level = plan.levels[slot];
          Trajectory traj = rollout(acting, world, task, packet, rng);
          auto completed = verify_states(traj, task.task_template, task.bindings, judge);
          traj.completed_states = completed;
          traj.shaped_reward = shaped_reward(traj.r_outcome, progress_reward(completed, states),
                                             traj.guidance_level, cfg.reward);
          rewards.push_back(traj.shaped_reward);
          run.completed.push_back(std::move(completed));
          run.group.push_back(std::move(traj));
        }

        GroupBatch batch{run.group, group_advantages(rewards, cfg.reward.adv_epsilon)};
        const GroupBatch* one = &batch;
        theta = grpo_update(theta, std::span<const GroupBatch>(one, 1), ref, cfg.reward,
                            cfg.learning_rate);

        MetricsRow row;
        row.iteration = it;
        row.task_id = task.id();
        row.s_t = stats.ema_success;
        row.lambda_strong = plan.mix.strong;
        row.lambda_weak = plan.mix.weak;
        row.lambda_none = plan.mix.none;
        row.sr_strong = success_rate(run.group, GuidanceLevel::Strong, &row.n_strong);
        row.sr_weak = success_rate(run.group, GuidanceLevel::Weak, &row.n_weak);
        row.sr_none = success_rate(run.group, GuidanceLevel::None, &row.n_none);
        row.mean_reward = mean_of(rewards);
        row.reward_std = population_std(rewards);
        row.objective = grpo_objective(batch, theta, ref, cfg.reward);
        row.kl = kl_estimate(theta, ref, batch);
        result.rows.push_back(std::move(row));
      }
    }

    // Writer phase: the only place the store changes.
    if (uimem) {
      usage.apply(st);
      for (std::size_t t = 0; t < world.tasks.size(); ++t) {
        const SimTask& task = world.tasks[t];
        for (std::size_t i = 0; i < runs[t].group.size(); ++i) {
          try {
            const RawExperience raw = extract_experience(runs[t].group[i], task.task_template,
                                                         task.bindings, runs[t].completed[i],
                                                         extraction);
            merge_experience(st, abstract_experience(raw, abstraction), it, cfg.evolution,
                             cfg.retrieval.ucb_lambda);
          } catch (const BackendFailure& e) {
            std::cerr << "warning: skipped experience of '" << task.id() << "' at iteration "
                      << it << ": " << e.what() << "\n";
          }
        }
      }
    }
    for (std::size_t t = 0; t < world.tasks.size(); ++t) {
      TaskStats& stats = st.task_stats.at(world.tasks[t].id());
      stats = update_ema(stats, ema_input(runs[t].group, cfg.evolution.ema_source),
                         cfg.evolution.gamma);
    }
    st.iteration_clock = it;
    st.touch();
    if (hook) hook(it, st, theta);
  }
  result.policy = std::move(theta);
  return result;
}

}  // namespace expmem
