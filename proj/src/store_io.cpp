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

#include "expmem/store_io.hpp"

#include <fstream>
#include <sstream>

#include "expmem/error.hpp"

namespace expmem {

using nlohmann::json;

nlohmann::json task_template_to_json(const TaskTemplate& t) {
  json states = json::array();
  for (const auto& s : t.essential_states) {
    states.push_back({{"state_id", s.state_id},
                      {"content", s.content},
                      {"variable_mapping", s.variable_mapping}});
  }
  json subtasks = json::array();
  for (const auto& s : t.subtasks) {
    subtasks.push_back({{"subtask_id", s.subtask_id},
                        {"subtask_label", s.label},
                        {"content", s.content}});
  }
  return json{
      {"task_id", t.task_id},
      {"package_name", t.package_names},
      {"task_template",
       {{"content", t.content},
        {"parameter_config",
         {{"fixed_parameters", t.fixed_parameters},
          {"variable_parameters", t.variable_parameters}}}}},
      {"essential_states_template", std::move(states)},
      {"subtask_template", std::move(subtasks)},
  };
}

TaskTemplate task_template_from_json(const json& j) {
  TaskTemplate t;
  t.task_id = j.at("task_id").get<std::string>();
  t.package_names = j.at("package_name").get<std::vector<std::string>>();
  const auto& tt = j.at("task_template");
  t.content = tt.at("content").get<std::string>();
  const auto& pc = tt.at("parameter_config");
  t.fixed_parameters = pc.at("fixed_parameters").get<std::map<std::string, std::string>>();
  t.variable_parameters = pc.at("variable_parameters").get<std::vector<std::string>>();
  for (const auto& s : j.at("essential_states_template")) {
    t.essential_states.push_back(
        {s.at("state_id").get<std::string>(), s.at("content").get<std::string>(),
         s.value("variable_mapping", std::map<std::string, std::string>{})});
  }
  for (const auto& s : j.at("subtask_template")) {
    t.subtasks.push_back({s.at("subtask_id").get<std::string>(),
                          s.at("subtask_label").get<std::string>(),
                          s.at("content").get<std::string>()});
  }
  return t;
}

std::vector<TaskTemplate> parse_task_templates(const std::string& text) {
  using ordered = nlohmann::ordered_json;
  try {
    ordered doc = ordered::parse(text);
    if (!doc.is_array()) doc = ordered::array({doc});
    std::vector<TaskTemplate> out;
    for (ordered& t : doc) {
      for (const char* field : {"essential_states_template", "subtask_template"}) {
        ordered& section = t.at(field);
        if (!section.is_object()) continue;
        const char* id_key = std::string(field) == "subtask_template" ? "subtask_id" : "state_id";
        ordered arr = ordered::array();
        for (auto& [id, body] : section.items()) {
          ordered item = body;
          item[id_key] = id;
          arr.push_back(std::move(item));
        }
        section = std::move(arr);
      }
      TaskTemplate parsed = task_template_from_json(json::parse(t.dump()));
      parsed.validate();
      out.push_back(std::move(parsed));
    }
    return out;
  } catch (const json::exception& e) {
    throw IoFailure(std::string("template document does not match the schema: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IoFailure(std::string("template document is inconsistent: ") + e.what());
  }
}

namespace {

json workflow_to_json(const WorkflowEntry& w) {
  return {{"task_template_id", w.task_template_id},
          {"subtask_sequence", w.subtask_sequence},
          {"rationale", w.rationale},
          {"success_count", w.success_count},
          {"used_count", w.used_count},
          {"avg_steps", w.avg_steps},
          {"last_updated", w.last_updated}};
}

WorkflowEntry workflow_from_json(const json& j) {
  WorkflowEntry w;
  w.task_template_id = j.at("task_template_id").get<std::string>();
  w.subtask_sequence = j.at("subtask_sequence").get<std::vector<std::string>>();
  w.rationale = j.at("rationale").get<std::string>();
  w.success_count = j.at("success_count").get<std::int64_t>();
  w.used_count = j.at("used_count").get<std::int64_t>();
  w.avg_steps = j.at("avg_steps").get<double>();
  w.last_updated = j.at("last_updated").get<Iteration>();
  return w;
}

json skill_to_json(const SkillEntry& s) {
  json plans = json::array();
  for (const auto& p : s.plan_summaries) {
    plans.push_back({{"content", p.content},
                     {"success_count", p.success_count},
                     {"used_count", p.used_count},
                     {"last_updated", p.last_updated}});
  }
  json diags = json::array();
  for (const auto& d : s.failure_diagnoses) {
    diags.push_back({{"content", d.content},
                     {"correction_guideline", d.correction_guideline},
                     {"last_updated", d.last_updated}});
  }
  return {{"package", s.key.package},
          {"label", s.key.label},
          {"plan_summaries", std::move(plans)},
          {"failure_diagnoses", std::move(diags)}};
}

SkillEntry skill_from_json(const json& j) {
  SkillEntry s;
  s.key = {j.at("package").get<std::string>(), j.at("label").get<std::string>()};
  for (const auto& p : j.at("plan_summaries")) {
    s.plan_summaries.push_back({p.at("content").get<std::string>(),
                                p.at("success_count").get<std::int64_t>(),
                                p.at("used_count").get<std::int64_t>(),
                                p.at("last_updated").get<Iteration>()});
  }
  for (const auto& d : j.at("failure_diagnoses")) {
    s.failure_diagnoses.push_back({d.at("content").get<std::string>(),
                                   d.at("correction_guideline").get<std::string>(),
                                   d.at("last_updated").get<Iteration>()});
  }
  return s;
}

}  // namespace

std::string store_to_string(const ExperienceStore& store) {
  json templates = json::object();
  for (const auto& [id, t] : store.task_templates) templates[id] = task_template_to_json(t);

  json workflows = json::object();
  for (const auto& [id, list] : store.workflows) {
    json arr = json::array();
    for (const auto& w : list) arr.push_back(workflow_to_json(w));
    workflows[id] = std::move(arr);
  }

  // std::map iteration already yields canonical key order.
  json skills = json::array();
  for (const auto& [key, entry] : store.skills) skills.push_back(skill_to_json(entry));

  json stats = json::object();
  for (const auto& [id, s] : store.task_stats) {
    stats[id] = {{"ema_success", s.ema_success}, {"group_count", s.group_count}};
  }

  json doc = {{"format_version", kStoreFormatVersion},
              {"iteration_clock", store.iteration_clock},
              {"task_templates", std::move(templates)},
              {"workflows", std::move(workflows)},
              {"skills", std::move(skills)},
              {"task_stats", std::move(stats)}};
  return doc.dump(2) + "\n";
}

ExperienceStore store_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoFailure(std::string("store document is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kStoreFormatVersion) {
      throw SchemaVersionMismatch("store format_version " + std::to_string(version) +
                                  ", expected " + std::to_string(kStoreFormatVersion));
    }
    ExperienceStore store;
    store.iteration_clock = doc.at("iteration_clock").get<Iteration>();
    for (const auto& [id, t] : doc.at("task_templates").items()) {
      store.task_templates[id] = task_template_from_json(t);
    }
    for (const auto& [id, arr] : doc.at("workflows").items()) {
      auto& list = store.workflows[id];
      for (const auto& w : arr) list.push_back(workflow_from_json(w));
    }
    for (const auto& s : doc.at("skills")) {
      SkillEntry entry = skill_from_json(s);
      SkillKey key = entry.key;
      store.skills.emplace(std::move(key), std::move(entry));
    }
    for (const auto& [id, s] : doc.at("task_stats").items()) {
      store.task_stats[id] = {s.at("ema_success").get<double>(),
                              s.at("group_count").get<std::int64_t>()};
    }
    store.validate();
    return store;
  } catch (const json::exception& e) {
    throw IoFailure(std::string("store document does not match the schema: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IoFailure(std::string("store document is inconsistent: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("read error on '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoFailure("write error on '" + path.string() + "'");
}

void save_store(const ExperienceStore& store, const std::filesystem::path& path) {
  write_text_file(path, store_to_string(store));
}

ExperienceStore load_store(const std::filesystem::path& path) {
  return store_from_string(read_text_file(path));
}

}  // namespace expmem
