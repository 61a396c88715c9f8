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

// Placeholder engine for `{{name}}` templates.
//
// Placeholder names match [A-Za-z_][A-Za-z0-9_]*. A `{{` that is not closed,
// a `}}` that was never opened, or an invalid name makes the template
// malformed. Single braces are ordinary literal text.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace expmem {

// name -> concrete value
using VariableBindings = std::map<std::string, std::string>;

struct Placeholder {
  std::string name;
  bool operator==(const Placeholder&) const = default;
};

// A template split into alternating literal text and placeholders.
using TemplateSegment = std::variant<std::string, Placeholder>;

// Throws MalformedTemplate.
std::vector<TemplateSegment> parse_template(std::string_view text);

// Distinct placeholder names in order of first appearance.
std::vector<std::string> placeholder_names(std::string_view text);

bool is_valid_placeholder_name(std::string_view name);

// Replaces every placeholder by its value; `bindings` wins over `fixed`.
// Throws UnboundPlaceholder or MalformedTemplate.
std::string instantiate_template(std::string_view text,
                                 const VariableBindings& bindings,
                                 const VariableBindings& fixed = {});

// Inverse of instantiate_template. The match is anchored at both ends, every
// placeholder span is non-empty, spans are shortest-first except the last
// placeholder which is longest-first. A name that occurs twice must bind the
// same value both times. Returns nullopt when the literal skeleton does not
// align.
std::optional<VariableBindings> extract_bindings(std::string_view text,
                                                 std::string_view concrete);

// Replaces each occurrence of a binding value with `{{name}}`. At every
// position the longest matching value wins, so "report.txt" is not shadowed
// by "report". Throws OverlappingValues when two names share a value and
// InvalidArgument for an empty value.
std::string abstract_text(std::string_view concrete,
                          const VariableBindings& bindings);

// The template with all placeholders removed, used for skeleton embeddings.
std::string template_skeleton(std::string_view text);

}  // namespace expmem
