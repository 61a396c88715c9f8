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

#include "expmem/template.hpp"

#include <algorithm>
#include <set>

#include "expmem/error.hpp"

namespace expmem {

namespace {

bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }

class Matcher {
 public:
  Matcher(const std::vector<TemplateSegment>& segments, std::string_view s)
      : segments_(segments), s_(s) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (std::holds_alternative<Placeholder>(segments_[i])) last_placeholder_ = i;
    }
  }

  std::optional<VariableBindings> run() {
    VariableBindings out;
    if (match(0, 0, out)) return out;
    return std::nullopt;
  }

 private:
  bool match(std::size_t seg, std::size_t pos, VariableBindings& out) {
    if (seg == segments_.size()) return pos == s_.size();
    if (const auto* lit = std::get_if<std::string>(&segments_[seg])) {
      if (s_.substr(pos, lit->size()) != *lit) return false;
      return match(seg + 1, pos + lit->size(), out);
    }
    const std::string& name = std::get<Placeholder>(segments_[seg]).name;
    if (auto it = out.find(name); it != out.end()) {
      if (s_.substr(pos, it->second.size()) != it->second) return false;
      return match(seg + 1, pos + it->second.size(), out);
    }
    const std::size_t remaining = s_.size() - pos;
    auto attempt = [&](std::size_t len) {
      out[name] = std::string(s_.substr(pos, len));
      if (match(seg + 1, pos + len, out)) return true;
      out.erase(name);
      return false;
    };
    if (seg == last_placeholder_) {
      for (std::size_t len = remaining; len >= 1; --len) {
        if (attempt(len)) return true;
      }
    } else {
      for (std::size_t len = 1; len <= remaining; ++len) {
        if (attempt(len)) return true;
      }
    }
    return false;
  }

  const std::vector<TemplateSegment>& segments_;
  std::string_view s_;
  std::size_t last_placeholder_ = static_cast<std::size_t>(-1);
};

}  // namespace

bool is_valid_placeholder_name(std::string_view name) {
  if (name.empty() || !is_name_start(name.front())) return false;
  return std::all_of(name.begin(), name.end(), is_name_char);
}

std::vector<TemplateSegment> parse_template(std::string_view text) {
  std::vector<TemplateSegment> segments;
  std::string literal;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 2, "{{") == 0) {
      const std::size_t close = text.find("}}", i + 2);
      if (close == std::string_view::npos) {
        throw MalformedTemplate("unclosed '{{' at offset " + std::to_string(i));
      }
      std::string_view name = text.substr(i + 2, close - i - 2);
      if (!is_valid_placeholder_name(name)) {
        throw MalformedTemplate("invalid placeholder name '" + std::string(name) + "'");
      }
      if (!literal.empty()) segments.emplace_back(std::move(literal));
      literal.clear();
      segments.emplace_back(Placeholder{std::string(name)});
      i = close + 2;
    } else if (text.compare(i, 2, "}}") == 0) {
      throw MalformedTemplate("unmatched '}}' at offset " + std::to_string(i));
    } else {
      literal.push_back(text[i]);
      ++i;
    }
  }
  if (!literal.empty()) segments.emplace_back(std::move(literal));
  return segments;
}

std::vector<std::string> placeholder_names(std::string_view text) {
  std::vector<std::string> names;
  for (const auto& seg : parse_template(text)) {
    if (const auto* p = std::get_if<Placeholder>(&seg)) {
      if (std::find(names.begin(), names.end(), p->name) == names.end()) {
        names.push_back(p->name);
      }
    }
  }
  return names;
}

std::string instantiate_template(std::string_view text,
                                 const VariableBindings& bindings,
                                 const VariableBindings& fixed) {
  std::string out;
  out.reserve(text.size());
  for (const auto& seg : parse_template(text)) {
    if (const auto* lit = std::get_if<std::string>(&seg)) {
      out += *lit;
      continue;
    }
    const std::string& name = std::get<Placeholder>(seg).name;
    if (auto it = bindings.find(name); it != bindings.end()) {
      out += it->second;
    } else if (auto jt = fixed.find(name); jt != fixed.end()) {
      out += jt->second;
    } else {
      throw UnboundPlaceholder(name);
    }
  }
  return out;
}

std::optional<VariableBindings> extract_bindings(std::string_view text,
                                                 std::string_view concrete) {
  const auto segments = parse_template(text);
  return Matcher(segments, concrete).run();
}

std::string abstract_text(std::string_view concrete,
                          const VariableBindings& bindings) {
  std::vector<std::pair<std::string_view, std::string_view>> by_length;
  std::set<std::string_view> seen;
  for (const auto& [name, value] : bindings) {
    if (value.empty()) throw InvalidArgument("binding '" + name + "' has an empty value");
    if (!seen.insert(value).second) {
      throw OverlappingValues("value '" + value + "' is bound under two names");
    }
    by_length.emplace_back(value, name);
  }
  std::stable_sort(by_length.begin(), by_length.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });

  std::string out;
  std::size_t i = 0;
  while (i < concrete.size()) {
    bool replaced = false;
    for (const auto& [value, name] : by_length) {
      if (concrete.compare(i, value.size(), value) == 0) {
        out += "{{";
        out += name;
        out += "}}";
        i += value.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(concrete[i++]);
  }
  return out;
}

std::string template_skeleton(std::string_view text) {
  std::string out;
  for (const auto& seg : parse_template(text)) {
    if (const auto* lit = std::get_if<std::string>(&seg)) out += *lit;
    else out.push_back(' ');
  }
  return out;
}

}  // namespace expmem
