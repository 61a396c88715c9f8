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

// Run configuration: a flat text document of `section.key = value` lines.
// Blank lines and lines starting with '#' are ignored.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "expmem/trainer.hpp"

namespace expmem {

enum class BackendKind { Oracle, Rule, Http };

std::string_view to_string(BackendKind kind);

struct RunConfig {
  TrainConfig train;
  std::uint64_t world_seed = 1;
  int n_tasks = 8;
  int horizon = kDefaultHorizon;
  std::string world_file;  // empty: generate from world_seed
  std::string output_dir = "run";
  BackendKind backend = BackendKind::Rule;
  std::string backend_model = "gpt-4o-mini";

  // Throws InvalidConfig naming the key for unknown keys and bad values.
  void set(const std::string& key, const std::string& value);
  // Applies a `key=value` override.
  void apply_override(const std::string& assignment);
  // Throws InvalidConfig.
  void validate() const;

  // Every key with its current value, one `key = value` line each.
  std::string to_text() const;
};

// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

// Throws InvalidConfig (syntax, unknown key, bad value).
RunConfig parse_config(const std::string& text, RunConfig base = {});
// Throws InvalidConfig, or IoFailure when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace expmem
