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

#include <random>

#include "expmem/error.hpp"
#include "expmem/memory.hpp"
#include "expmem/store_io.hpp"
#include "expmem/template.hpp"
#include "fixtures.hpp"

using namespace expmem;
using expmem::testing::random_word;

TEST_CASE("instantiate substitutes every placeholder") {
  CHECK(instantiate_template("Rename file {{current_filename}} to {{new_filename}} in Markor.",
                             {{"current_filename", "a.md"}, {"new_filename", "b.md"}}) ==
        "Rename file a.md to b.md in Markor.");
  CHECK(instantiate_template("no placeholders", {}) == "no placeholders");
  CHECK(instantiate_template("Tap the '{{icon_name}}' icon", {}, {{"icon_name", "A"}}) ==
        "Tap the 'A' icon");
  // Bindings shadow fixed values.
  CHECK(instantiate_template("{{x}}", {{"x", "var"}}, {{"x", "fixed"}}) == "var");
}

TEST_CASE("instantiate reports unbound and malformed templates") {
  try {
    instantiate_template("Hello {{who}}", {});
    FAIL("expected UnboundPlaceholder");
  } catch (const UnboundPlaceholder& e) {
    CHECK(e.name() == "who");
  }
  CHECK_THROWS_AS(instantiate_template("open {{x", {{"x", "1"}}), MalformedTemplate);
  CHECK_THROWS_AS(instantiate_template("stray }} here", {}), MalformedTemplate);
  CHECK_THROWS_AS(instantiate_template("{{9bad}}", {{"9bad", "1"}}), MalformedTemplate);
  CHECK_THROWS_AS(instantiate_template("{{with space}}", {}), MalformedTemplate);
}

TEST_CASE("placeholder names") {
  CHECK(is_valid_placeholder_name("current_filename"));
  CHECK(is_valid_placeholder_name("_x9"));
  CHECK_FALSE(is_valid_placeholder_name("9x"));
  CHECK_FALSE(is_valid_placeholder_name(""));
  CHECK(placeholder_names("{{a}} {{b}} {{a}}") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("extract_bindings inverts instantiation") {
  auto b = extract_bindings("Rename file {{a}} to {{b}} in Markor.",
                            "Rename file x.md to y.md in Markor.");
  REQUIRE(b);
  CHECK(*b == VariableBindings{{"a", "x.md"}, {"b", "y.md"}});
  CHECK_FALSE(extract_bindings("Send email to {{r}}", "Open settings"));
  // Anchored at both ends.
  CHECK_FALSE(extract_bindings("Open {{app}}", "Please Open Mail"));
  CHECK_FALSE(extract_bindings("Open {{app}}.", "Open Mail. Now"));
  // Spans must be non-empty.
  CHECK_FALSE(extract_bindings("Open {{app}} now", "Open  now"));
}

TEST_CASE("extract_bindings: non-greedy spans, greedy last span") {
  auto b = extract_bindings("{{a}} to {{b}}", "x to y to z");
  REQUIRE(b);
  CHECK(b->at("a") == "x");
  CHECK(b->at("b") == "y to z");
  // Repeated names must agree.
  CHECK(extract_bindings("{{a}} and {{a}}", "k and k"));
  CHECK_FALSE(extract_bindings("{{a}} and {{a}}", "k and j"));
}

TEST_CASE("abstract_text replaces values by placeholders") {
  CHECK(abstract_text("Click the 'Save' button to confirm creating report.txt",
                      {{"confirm_button", "Save"}, {"filename", "report.txt"}}) ==
        "Click the '{{confirm_button}}' button to confirm creating {{filename}}");
  CHECK(abstract_text("hello", {}) == "hello");
  CHECK(abstract_text("call 1234 then 1234", {{"num", "1234"}}) == "call {{num}} then {{num}}");
  // Longer values win over their substrings.
  CHECK(abstract_text("open report.txt.bak then report.txt",
                      {{"short", "report.txt"}, {"long", "report.txt.bak"}}) ==
        "open {{long}} then {{short}}");
  CHECK_THROWS_AS(abstract_text("x", {{"a", "same"}, {"b", "same"}}), OverlappingValues);
  CHECK_THROWS_AS(abstract_text("x", {{"a", ""}}), InvalidArgument);
}

namespace {

// Uppercase literal words; values are lowercase so they can never collide
// with literal text.
std::string random_literal(std::mt19937_64& rng) {
  static const char* kWords[] = {"OPEN", "TAP", "THE", "FILE", "THEN", "SAVE", "TO", "IN", "AS"};
  static const char* kPunct[] = {" ", " - ", ", ", " '", "' ", ": "};
  std::string s = kPunct[rng() % 6];
  const int n = static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) {
    s += kWords[rng() % 9];
    s += kPunct[rng() % 6];
  }
  return s;
}

struct RandomCase {
  std::string text;
  VariableBindings bindings;
};

RandomCase random_case(std::mt19937_64& rng) {
  RandomCase c;
  const int n = 1 + static_cast<int>(rng() % 4);
  if (rng() % 2) c.text += "GO";
  for (int i = 0; i < n; ++i) {
    const std::string name = "v" + std::to_string(i);
    c.text += random_literal(rng) + "{{" + name + "}}";
    std::string value;
    do {
      value = random_word(rng);
    } while ([&] {
      for (const auto& [k, v] : c.bindings) {
        if (v.find(value) != std::string::npos || value.find(v) != std::string::npos) return true;
      }
      return false;
    }());
    c.bindings[name] = value;
  }
  if (rng() % 2) c.text += random_literal(rng) + "END";
  return c;
}

}  // namespace

TEST_CASE("property: extract(instantiate(T, B)) == B over 1000 random templates") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    const RandomCase c = random_case(rng);
    const std::string concrete = instantiate_template(c.text, c.bindings);
    CHECK(concrete.find("{{") == std::string::npos);
    const auto back = extract_bindings(c.text, concrete);
    REQUIRE_MESSAGE(back, c.text);
    CHECK(*back == c.bindings);
  }
}

TEST_CASE("property: abstract is the left inverse of instantiate") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const RandomCase c = random_case(rng);
    const std::string concrete = instantiate_template(c.text, c.bindings);
    const std::string abstracted = abstract_text(concrete, c.bindings);
    CHECK(abstracted == c.text);
    CHECK(instantiate_template(abstracted, c.bindings) == concrete);
  }
}

TEST_CASE("published template loads with declared order and suffix resolution") {
  const TaskTemplate t = expmem::testing::markor_template();
  CHECK(t.task_id == "AutoGenerated_Task_75");
  CHECK(t.state_ids() == std::vector<std::string>{"S1", "S2", "S3"});
  REQUIRE(t.subtasks.size() == 3);
  CHECK(t.subtasks[0].subtask_id == "T1");
  CHECK(t.subtasks[2].label == "Enter Text and Confirm");
  const VariableBindings v = {{"current_filename", "notes.md"}, {"new_filename", "todo.md"}};
  CHECK(t.instruction(v) == expmem::testing::kMarkorInstruction);
  CHECK(t.subtask_text(t.subtasks[1], v) == "Tap the 'A' icon to open rename options.");
  CHECK(t.subtask_text(t.subtasks[2], v) == "Enter 'todo.md' and tap 'OK' to confirm.");
  CHECK(t.state_text(t.essential_states[0], v) ==
        "File 'notes.md' is selected with context options visible.");
}

TEST_CASE("template validation") {
  TaskTemplate t = expmem::testing::markor_template();
  SUBCASE("fixed and variable parameters may not share a name") {
    t.fixed_parameters["new_filename"] = "x";
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
  }
  SUBCASE("content placeholders must be declared") {
    t.content += " {{unknown}}";
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
  }
  SUBCASE("duplicate state ids") {
    t.essential_states.push_back(t.essential_states.front());
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
  }
  SUBCASE("empty subtask label") {
    t.subtasks[0].label.clear();
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
  }
}

namespace {

ExperienceStore busy_store() {
  ExperienceStore s = expmem::testing::markor_store();
  s.iteration_clock = 17;
  s.workflows["AutoGenerated_Task_75"] = {
      {"AutoGenerated_Task_75", {"T1", "T2", "T3"}, "long press then rename", 3, 5, 7.5, 12},
      {"AutoGenerated_Task_75", {"T1", "T3"}, "skip icon", 1, 2, 4.0, 9}};
  SkillEntry sk;
  sk.key = {"net.gsantner.markor", "Tap Rename Icon"};
  sk.plan_summaries = {{"Tap '{{icon_name}}'", 4, 2, 11}, {"Open menu", 0, 1, 3}};
  sk.failure_diagnoses = {{"Tapped share instead", "Tap 'A' instead.", 10}};
  s.skills[sk.key] = sk;
  s.task_stats["AutoGenerated_Task_75"] = {0.375, 6};
  return s;
}

}  // namespace

TEST_CASE("store round-trip") {
  SUBCASE("empty store") {
    const ExperienceStore empty;
    CHECK(store_from_string(store_to_string(empty)) == empty);
  }
  SUBCASE("published template verbatim") {
    const ExperienceStore s = expmem::testing::markor_store();
    CHECK(store_from_string(store_to_string(s)) == s);
  }
  SUBCASE("counts, ordering and clock survive") {
    const ExperienceStore s = busy_store();
    const ExperienceStore back = store_from_string(store_to_string(s));
    CHECK(back == s);
    CHECK(back.iteration_clock == 17);
    CHECK(back.workflows.at("AutoGenerated_Task_75")[1].subtask_sequence ==
          std::vector<std::string>{"T1", "T3"});
    CHECK(back.task_templates.at("AutoGenerated_Task_75").state_ids() ==
          std::vector<std::string>{"S1", "S2", "S3"});
  }
  SUBCASE("files are byte-identical across saves") {
    const auto dir = expmem::testing::scratch_dir("store_rt");
    const ExperienceStore s = busy_store();
    save_store(s, dir / "a.json");
    save_store(load_store(dir / "a.json"), dir / "b.json");
    CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));
    const std::string text = read_text_file(dir / "a.json");
    CHECK(text.back() == '\n');
    CHECK(text.find('\r') == std::string::npos);
  }
}

TEST_CASE("store loading errors") {
  CHECK_THROWS_AS(store_from_string("{not json"), IoFailure);
  CHECK_THROWS_AS(store_from_string("{}"), IoFailure);
  std::string text = store_to_string(ExperienceStore{});
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 19, "\"format_version\": 99");
  CHECK_THROWS_AS(store_from_string(text), SchemaVersionMismatch);
  CHECK_THROWS_AS(load_store("/nonexistent/expmem/store.json"), IoFailure);

  // Workflows must reference known subtasks.
  ExperienceStore bad = busy_store();
  bad.workflows["AutoGenerated_Task_75"][0].subtask_sequence = {"T9"};
  CHECK_THROWS_AS(store_from_string(store_to_string(bad)), IoFailure);
}
