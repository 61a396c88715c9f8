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

// Remote backends speaking an OpenAI-style chat-completion protocol. Each
// request carries a JSON payload as the user message; the assistant reply
// must itself be a JSON object.

#pragma once

#include <string>

#include <json.hpp>

#include "expmem/evolution.hpp"
#include "expmem/retrieval.hpp"
#include "expmem/reward.hpp"

namespace expmem {

struct LlmEndpoint {
  std::string url;  // http://host[:port][/path]
  std::string api_key;
  std::string model = "gpt-4o-mini";
  int timeout_seconds = 30;

  // Reads EXPMEM_LLM_ENDPOINT and EXPMEM_LLM_KEY. Throws InvalidConfig when
  // the endpoint is unset.
  static LlmEndpoint from_env(const std::string& model);
};

class LlmClient {
 public:
  explicit LlmClient(LlmEndpoint endpoint);

  // Sends `payload` under the operation name `operation` and returns the
  // parsed JSON object from choices[0].message.content. Throws
  // BackendFailure on transport errors, non-2xx status or malformed replies.
  nlohmann::json complete(const std::string& operation, const nlohmann::json& payload) const;

  const LlmEndpoint& endpoint() const { return endpoint_; }

 private:
  LlmEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_;
};

// Reply: {"matched": bool, "template_id": str, "bindings": {str: str}}.
class HttpMatchBackend final : public MatchBackend {
 public:
  explicit HttpMatchBackend(const LlmClient& client) : client_(client) {}
  MatchDecision decide(const MatchRequest& request) const override;

 private:
  const LlmClient& client_;
};

// Reply: {"plans": [{"subtask_id", "plan"}], "diagnosis": null |
// {"subtask_id", "root_cause", "correction"}, "rationale": str}.
class HttpExtractionBackend final : public ExtractionBackend {
 public:
  explicit HttpExtractionBackend(const LlmClient& client) : client_(client) {}
  ExtractedTexts extract(const ExtractionRequest& request) const override;

 private:
  const LlmClient& client_;
};

// Reply mirrors the request: {"plans", "diagnosis", "rationale"} with the
// bound values replaced by {{name}} placeholders. Only the experience's own
// variable names may appear; anything else is a BackendFailure.
class HttpAbstractionBackend final : public AbstractionBackend {
 public:
  explicit HttpAbstractionBackend(const LlmClient& client) : client_(client) {}
  RawExperience abstract(const RawExperience& raw) const override;

 private:
  const LlmClient& client_;
};

// Reply: {"completed": [state_id, ...]}.
class HttpJudge final : public StateJudge {
 public:
  explicit HttpJudge(const LlmClient& client) : client_(client) {}
  std::set<std::string> verify(const Trajectory& trajectory, const TaskTemplate& task,
                               const VariableBindings& bindings) const override;

 private:
  const LlmClient& client_;
};

}  // namespace expmem
