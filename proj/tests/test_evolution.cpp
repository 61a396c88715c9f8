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

#include <doctest.h>

#include <cmath>
#include <random>

#include "expmem/error.hpp"
#include "expmem/evolution.hpp"
#include "fixtures.hpp"

using namespace expmem;
using expmem::testing::markor_store;
using expmem::testing::markor_template;

namespace {

const VariableBindings kBindings = {{"current_filename", "notes.md"}, {"new_filename", "todo.md"}};

TrajectoryStep step(const std::string& action, std::optional<std::string> fired = {}) {
  TrajectoryStep s;
  s.screen_id = "screen";
  s.action_description = action;
  s.ui_description = "Some screen.";
  s.fired_state = std::move(fired);
  return s;
}

Trajectory markor_success() {
  Trajectory t;
  t.task_template_id = "AutoGenerated_Task_75";
  t.steps = {step("Long press 'notes.md'", "S1"), step("Tap 'A'", "S2"),
             step("Type 'todo.md'"), step("Tap 'OK'", "S3")};
  t.completed_states = {"S1", "S2", "S3"};
  t.r_outcome = 1;
  return t;
}

RawExperience replay(const Trajectory& t, const std::set<std::string>& completed) {
  static const TraceExtractionBackend backend;
  return abstract_experience(
      extract_experience(t, markor_template(), kBindings, completed, backend));
}

RawExperience diagnosis(const std::string& subtask, const std::string& cause) {
  RawExperience r;
  r.task_template_id = "AutoGenerated_Task_75";
  r.outcome = 0;
  r.failure_diagnosis = FailureDiagnosis{subtask, cause, "Do the other thing."};
  return r;
}

}  // namespace

TEST_CASE("update_ema") {
  CHECK(update_ema({0.5, 0}, 0.5, 0.9).ema_success == doctest::Approx(0.5));
  TaskStats s = update_ema({0.0, 0}, 1.0, 0.9);
  CHECK(s.ema_success == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(s.group_count == 1);
  s = update_ema(s, 1.0, 0.9);
  CHECK(s.ema_success == doctest::Approx(0.19).epsilon(1e-12));
  CHECK(s.group_count == 2);

  TaskStats c{0.0, 0};
  for (int i = 0; i < 150; ++i) c = update_ema(c, 0.37, 0.9);
  // Geometric series: m * (1 - gamma^n).
  CHECK(std::abs(c.ema_success - 0.37 * (1.0 - std::pow(0.9, 150))) < 1e-12);
  CHECK(std::abs(c.ema_success - 0.37) < 1e-6);
  CHECK_THROWS_AS(update_ema({}, 1.5, 0.9), InvalidArgument);
}

TEST_CASE("property: ema stays in [0, 1]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int run = 0; run < 50; ++run) {
    TaskStats s{u(rng), 0};
    const double gamma = 0.01 + 0.98 * u(rng);
    for (int i = 0; i < 100; ++i) {
      s = update_ema(s, (rng() % 3 == 0) ? std::round(u(rng)) : u(rng), gamma);
      REQUIRE(s.ema_success >= 0.0);
      REQUIRE(s.ema_success <= 1.0);
    }
  }
}

TEST_CASE("ema input prefers unguided rollouts") {
  std::vector<Trajectory> group(4);
  group[0].guidance_level = GuidanceLevel::Strong;
  group[0].r_outcome = 1;
  group[1].guidance_level = GuidanceLevel::Weak;
  group[1].r_outcome = 1;
  group[2].guidance_level = GuidanceLevel::None;
  group[3].guidance_level = GuidanceLevel::None;
  group[3].r_outcome = 1;
  CHECK(ema_input(group, EmaSource::NoneOnly) == doctest::Approx(0.5));
  CHECK(ema_input(group, EmaSource::All) == doctest::Approx(0.75));
  // Without unguided slots every rollout counts.
  std::vector<Trajectory> guided(group.begin(), group.begin() + 2);
  CHECK(ema_input(guided, EmaSource::NoneOnly) == doctest::Approx(1.0));
  // All-fail group.
  std::vector<Trajectory> fails(3);
  CHECK(ema_input(fails, EmaSource::NoneOnly) == 0.0);
}

TEST_CASE("subtask statuses follow declared state order") {
  const TaskTemplate t = markor_template();
  auto st = subtask_statuses(t, {"S1"}, true);
  REQUIRE(st.size() == 3);
  CHECK(st[0].status == SubtaskStatus::Completed);
  CHECK(st[1].status == SubtaskStatus::FirstFailed);
  CHECK(st[2].status == SubtaskStatus::NotReached);
  st = subtask_statuses(t, {"S1", "S2", "S3"}, true);
  for (const auto& o : st) CHECK(o.status == SubtaskStatus::Completed);
  st = subtask_statuses(t, {}, false);
  for (const auto& o : st) CHECK(o.status == SubtaskStatus::NotReached);
  // Later states do not rescue an earlier failure.
  st = subtask_statuses(t, {"S2", "S3"}, true);
  CHECK(st[0].status == SubtaskStatus::FirstFailed);
  CHECK(st[1].status == SubtaskStatus::NotReached);
}

TEST_CASE("extract_experience") {
  SUBCASE("full success") {
    const RawExperience r = replay(markor_success(), {"S1", "S2", "S3"});
    REQUIRE(r.workflow_sequence);
    CHECK(*r.workflow_sequence == std::vector<std::string>{"T1", "T2", "T3"});
    CHECK_FALSE(r.failure_diagnosis);
    REQUIRE(r.success_plans.size() == 3);
    CHECK(r.success_plans[0].second == "Long press '{{current_filename}}'");
    CHECK(r.success_plans[1].second == "Tap 'A'");
    CHECK(r.success_plans[2].second == "Type '{{new_filename}}'; Tap 'OK'");
    CHECK(r.step_count == 4);
    // Abstracted texts instantiate back to what the agent did.
    CHECK(instantiate_template(r.success_plans[2].second, kBindings) == "Type 'todo.md'; Tap 'OK'");
  }
  SUBCASE("partial run") {
    Trajectory t = markor_success();
    t.steps.resize(2);
    t.steps[1] = step("Tap 'Share'");
    t.r_outcome = 0;
    const RawExperience r = replay(t, {"S1"});
    CHECK_FALSE(r.workflow_sequence);
    REQUIRE(r.failure_diagnosis);
    CHECK(r.failure_diagnosis->subtask_id == "T2");
    REQUIRE(r.success_plans.size() == 1);
    CHECK(r.success_plans[0].first == "T1");
  }
  SUBCASE("zero steps") {
    Trajectory t;
    t.task_template_id = "AutoGenerated_Task_75";
    const RawExperience r = replay(t, {});
    CHECK(r.empty());
    for (const auto& o : r.subtask_outcomes) CHECK(o.status == SubtaskStatus::NotReached);
  }
}

TEST_CASE("abstract_experience") {
  RawExperience r;
  r.bindings = {{"url", "www.baidu.com"}};
  r.success_plans = {{"T1", "type www.baidu.com in the address bar"}, {"T2", "press enter"}};
  const RawExperience a = abstract_experience(r);
  CHECK(a.success_plans[0].second == "type {{url}} in the address bar");
  CHECK(a.success_plans[1].second == "press enter");
}

TEST_CASE("dedup_lookup") {
  const std::vector<std::string> items = {"tap the rename icon", "open the share sheet",
                                          "tap the rename icon now"};
  CHECK(dedup_lookup(items, "tap the rename icon", 0.85) == std::optional<std::size_t>(0));
  CHECK_FALSE(dedup_lookup({}, "anything", 0.85));
  const std::string candidate = "scroll down to the bottom";
  const auto& e = default_embedder();
  for (const auto& item : items) REQUIRE(cosine(e.embed(item), e.embed(candidate)) < 0.85);
  CHECK_FALSE(dedup_lookup(items, candidate, 0.85));
  // Equal similarity: lowest index.
  const std::vector<std::string> twins = {"same text", "same text"};
  CHECK(dedup_lookup(twins, "same text", 0.85) == std::optional<std::size_t>(0));
}

TEST_CASE("replaying one success twice") {
  ExperienceStore store = markor_store();
  const EvolutionConfig cfg;
  const RawExperience r = replay(markor_success(), {"S1", "S2", "S3"});
  auto first = merge_experience(store, r, 1, cfg);
  CHECK(first.workflow_added);
  CHECK(first.plans_added == 3);
  auto second = merge_experience(store, r, 2, cfg);
  CHECK(second.workflow_merged);
  CHECK(second.plans_merged == 3);

  const auto& wf = store.workflows.at("AutoGenerated_Task_75");
  REQUIRE(wf.size() == 1);
  CHECK(wf[0].success_count == 2);
  CHECK(wf[0].used_count == 0);
  CHECK(wf[0].avg_steps == doctest::Approx(4.0));
  CHECK(wf[0].last_updated == 2);
  REQUIRE(store.skills.size() == 3);
  for (const auto& [key, skill] : store.skills) {
    CHECK(key.package == "net.gsantner.markor");
    REQUIRE(skill.plan_summaries.size() == 1);
    CHECK(skill.plan_summaries[0].success_count == 2);
  }
}

TEST_CASE("workflow bookkeeping") {
  ExperienceStore store = markor_store();
  const EvolutionConfig cfg;
  RawExperience a;
  a.task_template_id = "AutoGenerated_Task_75";
  a.outcome = 1;
  a.workflow_sequence = std::vector<std::string>{"T1", "T2", "T3"};
  a.step_count = 10;
  merge_experience(store, a, 1, cfg);
  a.step_count = 14;
  merge_experience(store, a, 2, cfg);
  CHECK(store.workflows.at("AutoGenerated_Task_75")[0].avg_steps == doctest::Approx(12.0));

  RawExperience b = a;
  b.workflow_sequence = std::vector<std::string>{"T1", "T3"};
  merge_experience(store, b, 3, cfg);
  const auto& wf = store.workflows.at("AutoGenerated_Task_75");
  REQUIRE(wf.size() == 2);
  // Sorted by UCB: the twice-successful sequence first.
  CHECK(wf[0].subtask_sequence.size() == 3);
  CHECK(wf[1].subtask_sequence.size() == 2);
}

TEST_CASE("diagnoses rank strictly by recency") {
  ExperienceStore store = markor_store();
  const EvolutionConfig cfg;
  merge_experience(store, diagnosis("T2", "Keyboard covered the dialog"), 1, cfg);
  merge_experience(store, diagnosis("T2", "Selected wrong folder entirely"), 7, cfg);
  merge_experience(store, diagnosis("T2", "Pressed back twice quickly"), 4, cfg);
  const auto& diags = store.skills.at({"net.gsantner.markor", "Tap Rename Icon"}).failure_diagnoses;
  REQUIRE(diags.size() == 3);

  const MemorySnapshot snap(store);
  RetrievalConfig rc;
  rc.warnings_per_step = 3;
  const auto p = retrieve_guidance(snap, expmem::testing::kMarkorInstruction,
                                   GuidanceLevel::Strong, 10, rc);
  REQUIRE(p.steps.size() == 3);
  const auto& w = p.steps[1].warnings;
  REQUIRE(w.size() == 3);
  CHECK(w[0].diagnosis == "Selected wrong folder entirely");
  CHECK(w[1].diagnosis == "Pressed back twice quickly");
  CHECK(w[2].diagnosis == "Keyboard covered the dialog");

  // A repeat refreshes recency instead of adding a row.
  merge_experience(store, diagnosis("T2", "Keyboard covered the dialog"), 9, cfg);
  CHECK(diags.size() == 3);
  CHECK(diags[0].last_updated == 9);
}

TEST_CASE("merge frame property and empty experiences") {
  ExperienceStore store = markor_store();
  const EvolutionConfig cfg;
  SkillEntry other;
  other.key = {"com.other", "Unrelated"};
  other.plan_summaries = {{"keep me", 3, 3, 1}};
  store.skills[other.key] = other;
  store.task_stats["AutoGenerated_Task_75"] = {0.4, 3};

  const ExperienceStore before = store;
  const auto rev = store.revision();
  RawExperience empty;
  empty.task_template_id = "AutoGenerated_Task_75";
  CHECK_FALSE(merge_experience(store, empty, 5, cfg).changed());
  CHECK(store == before);
  CHECK(store.revision() == rev);

  merge_experience(store, replay(markor_success(), {"S1", "S2", "S3"}), 5, cfg);
  CHECK(store.skills.at(other.key) == other);
  CHECK(store.task_stats == before.task_stats);
  CHECK(store.revision() > rev);

  RawExperience unknown = diagnosis("T1", "x");
  unknown.task_template_id = "nope";
  CHECK_THROWS_AS(merge_experience(store, unknown, 6, cfg), InvalidArgument);
}

TEST_CASE("property: skill lists stay pairwise below the dedup threshold") {
  ExperienceStore store = markor_store();
  const EvolutionConfig cfg;
  std::mt19937_64 rng(21);
  static const char* kVocab[] = {"tap", "the", "rename", "icon", "button", "open", "menu",
                                 "long", "press", "file", "confirm", "dialog", "back"};
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const int n = 2 + static_cast<int>(rng() % 4);
    for (int w = 0; w < n; ++w) text += std::string(w ? " " : "") + kVocab[rng() % 13];
    RawExperience r;
    r.task_template_id = "AutoGenerated_Task_75";
    r.outcome = static_cast<int>(rng() % 2);
    if (r.outcome) {
      r.success_plans = {{"T" + std::to_string(1 + rng() % 3), text}};
    } else {
      r.failure_diagnosis = FailureDiagnosis{"T" + std::to_string(1 + rng() % 3), text, "fix"};
    }
    merge_experience(store, r, i, cfg);
  }
  const auto& e = default_embedder();
  auto check_list = [&](const std::vector<std::string>& texts) {
    for (std::size_t a = 0; a < texts.size(); ++a) {
      for (std::size_t b = a + 1; b < texts.size(); ++b) {
        CHECK(cosine(e.embed(texts[a]), e.embed(texts[b])) < cfg.dedup_threshold);
      }
    }
  };
  for (const auto& [key, skill] : store.skills) {
    std::vector<std::string> plans, diags;
    for (const auto& p : skill.plan_summaries) plans.push_back(p.content);
    for (const auto& d : skill.failure_diagnoses) diags.push_back(d.content);
    check_list(plans);
    check_list(diags);
  }
}
