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

#include "expmem/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "expmem/error.hpp"
#include "expmem/template.hpp"

namespace expmem {

using nlohmann::json;

LlmEndpoint LlmEndpoint::from_env(const std::string& model) {
  const char* url = std::getenv("EXPMEM_LLM_ENDPOINT");
  if (!url || !*url) throw InvalidConfig("EXPMEM_LLM_ENDPOINT is not set");
  const char* key = std::getenv("EXPMEM_LLM_KEY");
  LlmEndpoint e;
  e.url = url;
  e.api_key = key ? key : "";
  e.model = model;
  return e;
}

LlmClient::LlmClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const std::string& url = endpoint_.url;
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw InvalidConfig("LLM endpoint '" + url + "' lacks a scheme");
  const std::string scheme = url.substr(0, sep);
  if (scheme != "http") {
    throw InvalidConfig("LLM endpoint scheme '" + scheme + "' is not supported (use http)");
  }
  const auto slash = url.find('/', sep + 3);
  scheme_host_port_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : url.substr(slash);
}

json LlmClient::complete(const std::string& operation, const json& payload) const {
  const json body = {
      {"model", endpoint_.model},
      {"temperature", 0},
      {"messages",
       json::array({{{"role", "system"},
                     {"content", "expmem operation: " + operation +
                                     ". Reply with a single JSON object only."}},
                    {{"role", "user"}, {"content", payload.dump()}}})}};

  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(endpoint_.timeout_seconds, 0);
  cli.set_read_timeout(endpoint_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendFailure(operation + ": request failed (" + httplib::to_string(res.error()) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendFailure(operation + ": HTTP status " + std::to_string(res->status));
  }
  try {
    const json reply = json::parse(res->body);
    const std::string content = reply.at("choices").at(0).at("message").at("content");
    json out = json::parse(content);
    if (!out.is_object()) throw BackendFailure(operation + ": reply is not a JSON object");
    return out;
  } catch (const json::exception& e) {
    throw BackendFailure(operation + ": malformed reply: " + e.what());
  }
}

namespace {

template <typename F>
auto guarded(const std::string& operation, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw BackendFailure(operation + ": unexpected reply shape: " + e.what());
  }
}

json steps_json(const Trajectory& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"screen", s.screen_id},
                     {"ui_description", s.ui_description},
                     {"action_description", s.action_description}});
  }
  return steps;
}

}  // namespace

MatchDecision HttpMatchBackend::decide(const MatchRequest& request) const {
  json candidates = json::array();
  for (const auto& c : request.candidates) {
    candidates.push_back({{"template_id", c.task->task_id},
                          {"content", c.task->content},
                          {"fixed_parameters", c.task->fixed_parameters},
                          {"score", c.score}});
  }
  const json reply = client_.complete(
      "match_task", {{"instruction", request.instruction},
                     {"candidates", candidates},
                     {"match_threshold", request.match_threshold}});
  return guarded("match_task", [&] {
    MatchDecision d;
    d.matched = reply.at("matched").get<bool>();
    if (!d.matched) return d;
    d.template_id = reply.at("template_id").get<std::string>();
    d.bindings = reply.value("bindings", json::object()).get<VariableBindings>();
    bool known = false;
    for (const auto& c : request.candidates) known = known || c.task->task_id == d.template_id;
    if (!known) throw BackendFailure("match_task: reply names unknown template '" + d.template_id + "'");
    return d;
  });
}

ExtractedTexts HttpExtractionBackend::extract(const ExtractionRequest& request) const {
  const TaskTemplate& task = *request.task;
  json subtasks = json::array();
  for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
    subtasks.push_back({{"subtask_id", task.subtasks[j].subtask_id},
                        {"label", task.subtasks[j].label},
                        {"status", std::string(to_string((*request.statuses)[j].status))}});
  }
  const json reply = client_.complete(
      "extract_experience", {{"task_id", task.task_id},
                             {"instruction", task.instruction(*request.bindings)},
                             {"outcome", request.trajectory->r_outcome},
                             {"subtasks", subtasks},
                             {"steps", steps_json(*request.trajectory)}});
  return guarded("extract_experience", [&] {
    ExtractedTexts out;
    for (const auto& p : reply.value("plans", json::array())) {
      const std::string id = p.at("subtask_id").get<std::string>();
      if (!task.find_subtask(id)) {
        throw BackendFailure("extract_experience: unknown subtask '" + id + "'");
      }
      out.plans.emplace_back(id, p.at("plan").get<std::string>());
    }
    if (reply.contains("diagnosis") && !reply.at("diagnosis").is_null()) {
      const json& d = reply.at("diagnosis");
      FailureDiagnosis fd{d.at("subtask_id").get<std::string>(), d.at("root_cause").get<std::string>(),
                          d.at("correction").get<std::string>()};
      if (!task.find_subtask(fd.subtask_id)) {
        throw BackendFailure("extract_experience: unknown subtask '" + fd.subtask_id + "'");
      }
      out.diagnosis = std::move(fd);
    }
    out.rationale = reply.value("rationale", std::string());
    return out;
  });
}

RawExperience HttpAbstractionBackend::abstract(const RawExperience& raw) const {
  json plans = json::array();
  for (const auto& [id, plan] : raw.success_plans) plans.push_back({{"subtask_id", id}, {"plan", plan}});
  json diagnosis = nullptr;
  if (raw.failure_diagnosis) {
    diagnosis = {{"subtask_id", raw.failure_diagnosis->subtask_id},
                 {"root_cause", raw.failure_diagnosis->root_cause},
                 {"correction", raw.failure_diagnosis->correction}};
  }
  const json reply = client_.complete("abstract_experience", {{"bindings", raw.bindings},
                                                              {"plans", plans},
                                                              {"diagnosis", diagnosis},
                                                              {"rationale", raw.rationale}});
  return guarded("abstract_experience", [&] {
    RawExperience out = raw;
    // Each abstracted text must instantiate back to its original.
    auto accept = [&](const std::string& original, const std::string& abstracted) {
      try {
        if (instantiate_template(abstracted, raw.bindings) != original) {
          throw BackendFailure("abstract_experience: reply does not instantiate back to '" +
                               original + "'");
        }
      } catch (const MalformedTemplate& e) {
        throw BackendFailure(std::string("abstract_experience: ") + e.what());
      } catch (const UnboundPlaceholder& e) {
        throw BackendFailure(std::string("abstract_experience: ") + e.what());
      }
      return abstracted;
    };
    const json& rp = reply.at("plans");
    if (rp.size() != out.success_plans.size()) {
      throw BackendFailure("abstract_experience: plan count changed");
    }
    for (std::size_t i = 0; i < rp.size(); ++i) {
      out.success_plans[i].second =
          accept(raw.success_plans[i].second, rp.at(i).at("plan").get<std::string>());
    }
    if (raw.failure_diagnosis) {
      const json& d = reply.at("diagnosis");
      out.failure_diagnosis->root_cause =
          accept(raw.failure_diagnosis->root_cause, d.at("root_cause").get<std::string>());
      out.failure_diagnosis->correction =
          accept(raw.failure_diagnosis->correction, d.at("correction").get<std::string>());
    }
    out.rationale = accept(raw.rationale, reply.value("rationale", std::string()));
    return out;
  });
}

std::set<std::string> HttpJudge::verify(const Trajectory& trajectory, const TaskTemplate& task,
                                        const VariableBindings& bindings) const {
  json states = json::array();
  for (const auto& s : task.essential_states) {
    states.push_back({{"state_id", s.state_id}, {"text", task.state_text(s, bindings)}});
  }
  const json reply = client_.complete("verify_states", {{"task_id", task.task_id},
                                                        {"instruction", task.instruction(bindings)},
                                                        {"essential_states", states},
                                                        {"steps", steps_json(trajectory)}});
  return guarded("verify_states", [&] {
    std::set<std::string> out;
    for (const auto& id : reply.at("completed")) {
      const std::string s = id.get<std::string>();
      if (!task.find_state(s)) throw BackendFailure("verify_states: unknown state '" + s + "'");
      out.insert(s);
    }
    return out;
  });
}

}  // namespace expmem
