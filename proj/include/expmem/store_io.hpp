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

// Store file: a single UTF-8 JSON document, object keys sorted, two-space
// indent, LF line endings and a trailing newline. Ordered collections
// (essential states, subtasks, workflow lists, skill item lists) are arrays.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "expmem/memory.hpp"

namespace expmem {

inline constexpr int kStoreFormatVersion = 1;

nlohmann::json task_template_to_json(const TaskTemplate& t);
TaskTemplate task_template_from_json(const nlohmann::json& j);

// Templates from a standalone document: one template object or an array of
// them. Essential states and subtasks may be arrays or objects keyed by id;
// objects keep their document order. Throws IoFailure.
std::vector<TaskTemplate> parse_task_templates(const std::string& text);

// Canonical text; equal stores always produce identical bytes.
std::string store_to_string(const ExperienceStore& store);
// Throws SchemaVersionMismatch or IoFailure (malformed document).
ExperienceStore store_from_string(const std::string& text);

// Throws IoFailure.
void save_store(const ExperienceStore& store, const std::filesystem::path& path);
ExperienceStore load_store(const std::filesystem::path& path);

// Shared by the world and store files.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace expmem
